"""
Errors - Exception hierarchy for tvdlab

Every error is also a ValueError so callers that only care about bad input
can catch the builtin.
"""


class TvdLabError(ValueError):
    """Base class for all tvdlab errors."""


# simplex-core
class ZeroMass(TvdLabError):
    """Raw weights sum to zero or less."""


class NegativeEntry(TvdLabError):
    """A probability or raw weight is negative."""


class DimTooSmall(TvdLabError):
    """A distribution has fewer than two outcomes."""


class NotNormalized(TvdLabError):
    """Entries do not sum to one within tolerance."""


class DimMismatch(TvdLabError):
    """Two distributions (or matrices) have different shapes."""


class GammaOutOfRange(TvdLabError):
    """A trade-off factor lies outside [0, 1]."""


class NonPositiveLambda(TvdLabError):
    """The smoothness constant must be strictly positive."""


# synth-bench / trainer / corpus
class BadShape(TvdLabError):
    """Invalid number of contexts, vocabulary size or sample count."""


class NonPositiveConcentration(TvdLabError):
    pass


class MissingNoiseRows(TvdLabError):
    """fixed-distribution noise was requested without noise conditionals."""


class ShapeMismatch(TvdLabError):
    """Dataset and task disagree on the number of contexts or tokens."""


class NonPositiveLearningRate(TvdLabError):
    pass


class OneClassOnly(TvdLabError):
    """AUC needs at least one clean and one noisy example."""


class EmptyContext(TvdLabError):
    """A context has no examples, so its frequencies are undefined."""


class SizeExceedsCorpus(TvdLabError):
    pass


class TooFewSamples(TvdLabError):
    """A mixture fit needs at least two samples per component."""


class UnsupportedLoss(TvdLabError):
    pass


class ConfigError(TvdLabError):
    """Unknown key, bad type or out-of-range value in a run configuration."""


class NonPositiveAlpha(TvdLabError):
    """The Tsallis entropy order must be strictly positive."""
