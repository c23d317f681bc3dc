"""
Simplex - Probability-simplex arithmetic

Total variation distance, Tsallis entropy, the TaiLr estimation error, the
smooth indicator and both trade-off functions (the exact optimum and the
adaptive approximation used by AdaTaiLr). Scalar functions work on Simplex /
OneHot values; the *_rows helpers are the vectorized forms used by the losses
and the trainer.
"""

from dataclasses import dataclass
from typing import NamedTuple, Sequence, Union

import numpy as np
from scipy.special import entr

from .errors import (
    DimMismatch,
    DimTooSmall,
    GammaOutOfRange,
    NegativeEntry,
    NonPositiveAlpha,
    NonPositiveLambda,
    NotNormalized,
    ZeroMass,
)

SIMPLEX_ATOL = 1e-9
TIE_ATOL = 1e-9

ArrayLike = Union[Sequence[float], np.ndarray]


@dataclass(frozen=True, eq=False)
class Simplex:
    """
    A finite categorical distribution.

    The probability vector is stored read-only. Inputs that do not sum to one
    within SIMPLEX_ATOL are rejected, use normalize() for raw weights.
    """

    probs: np.ndarray

    def __post_init__(self):
        arr = np.array(self.probs, dtype=np.float64).reshape(-1)
        if arr.size < 2:
            raise DimTooSmall(f"simplex needs at least 2 entries, got {arr.size}")
        if np.any(arr < 0):
            raise NegativeEntry(f"negative probability {arr.min()}")
        total = arr.sum()
        if abs(total - 1.0) > SIMPLEX_ATOL:
            raise NotNormalized(f"entries sum to {total!r}")
        arr.setflags(write=False)
        object.__setattr__(self, "probs", arr)

    @property
    def dim(self) -> int:
        return int(self.probs.size)

    def __len__(self):
        return self.dim

    def __eq__(self, other):
        if not isinstance(other, Simplex):
            return NotImplemented
        return np.array_equal(self.probs, other.probs)

    def __hash__(self):
        return hash(self.probs.tobytes())

    @classmethod
    def uniform(cls, dim: int) -> "Simplex":
        return cls(np.full(dim, 1.0 / dim))


@dataclass(frozen=True)
class OneHot:
    """The one-hot distribution e^(w) of an observed token w."""

    index: int
    dim: int

    def __post_init__(self):
        if self.dim < 2:
            raise DimTooSmall(f"one-hot needs dim >= 2, got {self.dim}")
        if not 0 <= self.index < self.dim:
            raise DimMismatch(f"index {self.index} outside [0, {self.dim})")

    def as_simplex(self) -> Simplex:
        arr = np.zeros(self.dim)
        arr[self.index] = 1.0
        return Simplex(arr)


class GammaValue(NamedTuple):
    """Adaptive trade-off factor before and after clamping to [0, 1]."""

    raw: float
    clamped: float

    @classmethod
    def from_raw(cls, raw: float) -> "GammaValue":
        return cls(float(raw), float(min(1.0, max(0.0, raw))))


def _check_dims(p: Simplex, q: Union[Simplex, OneHot]):
    if p.dim != q.dim:
        raise DimMismatch(f"dimension {p.dim} != {q.dim}")


def _check_lambda(lam: float):
    if not lam > 0:
        raise NonPositiveLambda(f"lambda must be > 0, got {lam}")


def as_simplex(w: OneHot) -> Simplex:
    return w.as_simplex()


def normalize(raw: ArrayLike) -> Simplex:
    """
    Divide non-negative raw weights by their sum.

    Raises:
        DimTooSmall: fewer than 2 entries
        NegativeEntry: an entry is negative
        ZeroMass: the entries sum to zero
    """
    arr = np.asarray(raw, dtype=np.float64).reshape(-1)
    if arr.size < 2:
        raise DimTooSmall(f"need at least 2 entries, got {arr.size}")
    if np.any(arr < 0):
        raise NegativeEntry(f"negative entry {arr.min()}")
    total = arr.sum()
    if total <= 0:
        raise ZeroMass("raw weights sum to zero")
    return Simplex(arr / total)


def l1_dist(p: Simplex, q: Simplex) -> float:
    _check_dims(p, q)
    return float(np.abs(p.probs - q.probs).sum())


def linf_dist(p: Simplex, q: Simplex) -> float:
    _check_dims(p, q)
    return float(np.abs(p.probs - q.probs).max())


def inner(p: Simplex, q: Simplex) -> float:
    _check_dims(p, q)
    return float(np.dot(p.probs, q.probs))


def tvd(p: Simplex, q: Simplex) -> float:
    """Total variation distance, half the L1 distance."""
    return 0.5 * l1_dist(p, q)


def tvd_onehot(w: OneHot, p: Simplex) -> float:
    """TVD between the one-hot e^(w) and p, as ½(|1 − p_w| + Σ_{j≠w} p_j)."""
    _check_dims(p, w)
    rest = np.delete(p.probs, w.index).sum()
    return float(0.5 * (abs(1.0 - p.probs[w.index]) + rest))


def tsallis_entropy(p: Simplex, alpha: float = 2.0) -> float:
    """
    Tsallis alpha-entropy.

    For alpha = 1 this is the Shannon entropy in nats with 0·log 0 = 0.
    """
    if not alpha > 0:
        raise NonPositiveAlpha(f"alpha must be > 0, got {alpha}")
    if alpha == 1.0:
        return float(entr(p.probs).sum())
    return float((1.0 - np.power(p.probs, alpha).sum()) / (alpha * (alpha - 1.0)))


def indicator(z: float) -> float:
    """Step function with indicator(0) = 1."""
    return 1.0 if z >= 0 else 0.0


def smooth_indicator(z: float, lam: float) -> float:
    """Piecewise-linear relaxation of the step function with slope lam."""
    _check_lambda(lam)
    half_width = 1.0 / (2.0 * lam)
    if z < -half_width:
        return 0.0
    if z > half_width:
        return 1.0
    return min(1.0, max(0.0, lam * z + 0.5))


def estimation_error(p_o: Simplex, p_theta: Simplex, gamma: float) -> float:
    """TaiLr estimation error (1 − γ)·TVD(p_o, p_θ) + γ·2H_2(p_o)."""
    _check_dims(p_o, p_theta)
    if not 0.0 <= gamma <= 1.0:
        raise GammaOutOfRange(f"gamma {gamma} outside [0, 1]")
    return (1.0 - gamma) * tvd(p_o, p_theta) + gamma * 2.0 * tsallis_entropy(p_o, 2.0)


def z_value(p_o: Simplex, p_theta: Simplex) -> float:
    """z = TVD(p_o, p_θ) − 2H_2(p_o); the sign decides the optimal trade-off."""
    _check_dims(p_o, p_theta)
    return tvd(p_o, p_theta) - 2.0 * tsallis_entropy(p_o, 2.0)


def gamma_opt(p_o: Simplex, p_theta: Simplex) -> float:
    """Exact minimizer of the estimation error over γ ∈ [0, 1]."""
    return indicator(z_value(p_o, p_theta))


def z_tilde(w: OneHot, p_theta: Simplex, entropy_scale: float = 1.0) -> float:
    """
    Sampled surrogate of z from one observed token.

    With entropy_scale = 1 the entropy term is 2H_2(p_θ) = 1 − ‖p_θ‖², the form
    AdaTaiLr computes. entropy_scale = 2 gives the doubled form the error
    bounds are stated for.

    On the simplex TVD(e^(w), p) − (1 − ‖p‖²) = Σ_j p_j(p_j − p_w), which is
    evaluated directly so a uniform p gives exactly zero.
    """
    _check_dims(p_theta, w)
    p = p_theta.probs
    z = float(np.dot(p, p - p[w.index]))
    if entropy_scale != 1.0:
        z -= (entropy_scale - 1.0) * 2.0 * tsallis_entropy(p_theta, 2.0)
    return z


def gamma_tilde(w: OneHot, p_theta: Simplex, lam: float) -> GammaValue:
    """Adaptive trade-off ½ + λ(TVD(e^(w), p_θ) − 2H_2(p_θ)), clamped to [0, 1]."""
    _check_dims(p_theta, w)
    _check_lambda(lam)
    return GammaValue.from_raw(0.5 + lam * z_tilde(w, p_theta))


def holder_gap(u: Simplex, v: Simplex) -> float:
    """‖u⊙v‖₁ − ‖u‖₁·‖v‖_∞, never positive."""
    _check_dims(u, v)
    return float(np.abs(u.probs * v.probs).sum() - np.abs(u.probs).sum() * np.abs(v.probs).max())


# Vectorized row forms. `probs` is an L×N matrix of distributions and
# `labels` an integer vector of length L; no Simplex validation happens here.


def tvd_onehot_rows(probs: np.ndarray, labels: np.ndarray) -> np.ndarray:
    rows = np.arange(probs.shape[0])
    p_y = probs[rows, labels]
    mask = np.zeros(probs.shape, dtype=bool)
    mask[rows, labels] = True
    rest = np.where(mask, 0.0, probs).sum(axis=1)
    return 0.5 * (np.abs(1.0 - p_y) + rest)


def tsallis2_rows(probs: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 - np.square(probs).sum(axis=1))


def z_tilde_rows(probs: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Row form of z_tilde with entropy_scale = 1, exactly zero on uniform rows."""
    p_y = probs[np.arange(probs.shape[0]), labels]
    return (probs * (probs - p_y[:, None])).sum(axis=1)


def gamma_tilde_rows(probs: np.ndarray, labels: np.ndarray, lam: float) -> np.ndarray:
    """Clamped adaptive trade-off for every row."""
    _check_lambda(lam)
    return np.clip(0.5 + lam * z_tilde_rows(probs, labels), 0.0, 1.0)
