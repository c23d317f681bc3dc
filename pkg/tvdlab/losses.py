"""
Losses - Token-level training objectives

KLD (negative log-likelihood), constant-γ TaiLr, AdaTaiLr, and two
noise-control baselines (Loss Truncation, Gaussian-mixture re-weighting).
All weights are constants with respect to the logits: gradients are
w_i·(softmax(logits_i) − onehot(y_i)).
"""

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.special import log_softmax, softmax

from .errors import BadShape, GammaOutOfRange, NegativeEntry, NonPositiveLambda, NotNormalized, UnsupportedLoss
from .gmm import gmm_reweight
from .models import LossKind, LossSpec
from .simplex import SIMPLEX_ATOL, gamma_tilde_rows

LOG_FLOOR = 1e-12


@dataclass(frozen=True)
class TokenBatch:
    """
    L predicted distributions with their observed labels.

    Args:
        probs: L×N matrix, each row a distribution
        labels: L token ids in [0, N)
        clean: optional L clean flags
    """

    probs: np.ndarray
    labels: np.ndarray
    clean: Optional[np.ndarray] = None

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if probs.ndim != 2 or probs.shape[1] < 2:
            raise BadShape(f"probs must be L×N with N >= 2, got {probs.shape}")
        if labels.size != probs.shape[0]:
            raise BadShape(f"{labels.size} labels for {probs.shape[0]} rows")
        if np.any(probs < 0):
            raise NegativeEntry("negative probability in batch")
        sums = probs.sum(axis=1)
        if probs.shape[0] and np.max(np.abs(sums - 1.0)) > SIMPLEX_ATOL:
            raise NotNormalized("batch row does not sum to 1")
        if np.any(labels < 0) or np.any(labels >= probs.shape[1]):
            raise BadShape("label outside vocabulary")
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "labels", labels)
        if self.clean is not None:
            clean = np.asarray(self.clean, dtype=bool).reshape(-1)
            if clean.size != labels.size:
                raise BadShape("clean flags do not match labels")
            object.__setattr__(self, "clean", clean)

    @classmethod
    def from_logits(cls, logits, labels, clean=None) -> "TokenBatch":
        return cls(softmax(np.asarray(logits, dtype=np.float64), axis=1), labels, clean)

    def __len__(self):
        return int(self.labels.size)

    @property
    def target_probs(self) -> np.ndarray:
        return self.probs[np.arange(self.labels.size), self.labels]


@dataclass
class WeightedLoss:
    total: float
    per_token_loss: np.ndarray
    per_token_weight: np.ndarray
    per_token_gamma: Optional[np.ndarray] = None


def nll(p: np.ndarray) -> np.ndarray:
    return -np.log(np.maximum(p, LOG_FLOOR))


def tailr_factor(p: np.ndarray, gamma) -> np.ndarray:
    """p/(γ + (1−γ)p); strictly increasing in p for γ ∈ (0, 1]."""
    p = np.maximum(p, LOG_FLOOR)
    return p / (gamma + (1.0 - gamma) * p)


def _check_unit(name: str, value: float):
    if not 0.0 <= value <= 1.0:
        raise GammaOutOfRange(f"{name} {value} outside [0, 1]")


def _weighted(batch: TokenBatch, weights: np.ndarray, gammas=None) -> WeightedLoss:
    losses = weights * nll(batch.target_probs)
    return WeightedLoss(float(losses.sum()), losses, weights, gammas)


def kld_loss(batch: TokenBatch) -> WeightedLoss:
    """Negative log-likelihood, sum-reduced. The H(p_o) constant is omitted."""
    return _weighted(batch, np.ones(len(batch)))


def tailr_weights(batch: TokenBatch, gamma: float, delta: float) -> np.ndarray:
    _check_unit("gamma", gamma)
    _check_unit("delta", delta)
    return np.maximum(delta, tailr_factor(batch.target_probs, gamma))


def tailr_loss(batch: TokenBatch, gamma: float, delta: float) -> WeightedLoss:
    return _weighted(batch, tailr_weights(batch, gamma, delta))


def adatailr_weights(batch: TokenBatch, lam: float, delta: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Per-token weights and clamped trade-off factors of AdaTaiLr.

    γ_i = clamp(½ + λ(t_i − 2h_i)) with t_i the TVD between e^(y_i) and row i
    and h_i its Tsallis 2-entropy; weight_i = max(δ, p_i/(γ_i + (1−γ_i)p_i)).
    """
    if not lam > 0:
        raise NonPositiveLambda(f"lambda must be > 0, got {lam}")
    _check_unit("delta", delta)
    gammas = gamma_tilde_rows(batch.probs, batch.labels, lam)
    weights = np.maximum(delta, tailr_factor(batch.target_probs, gammas))
    return weights, gammas


def adatailr_loss(batch: TokenBatch, lam: float, delta: float) -> WeightedLoss:
    weights, gammas = adatailr_weights(batch, lam, delta)
    return _weighted(batch, weights, gammas)


@dataclass
class TruncationResult:
    mask: np.ndarray  # True where the loss is kept
    total: float
    dropped: int


def loss_truncation(losses, c: float) -> TruncationResult:
    """
    Drop the ⌈c·n⌉ largest losses.

    Among equal losses the earliest index is kept.
    """
    if not 0.0 <= c < 1.0:
        raise GammaOutOfRange(f"truncation fraction {c} outside [0, 1)")
    values = np.asarray(losses, dtype=np.float64).reshape(-1)
    n = values.size
    n_drop = min(n, max(0, math.ceil(c * n - 1e-12)))
    mask = np.ones(n, dtype=bool)
    if n_drop:
        idx = np.arange(n)
        # primary key: loss descending, secondary: index descending
        order = np.lexsort((-idx, -values))
        mask[order[:n_drop]] = False
    return TruncationResult(mask, float(values[mask].sum()), n_drop)


def delta_schedule(step: int, warmup_steps: int, delta: float, anneal: bool = False) -> float:
    """
    Weight floor in effect at `step`.

    Constant δ unless `anneal` is set, in which case δ decays linearly to zero
    over the `warmup_steps` steps that follow the warm-up.
    """
    if not anneal or step <= warmup_steps:
        return delta
    progress = (step - warmup_steps) / max(warmup_steps, 1)
    return delta * max(0.0, 1.0 - progress)


def token_weights(probs: np.ndarray, labels: np.ndarray, spec: LossSpec,
                  delta: Optional[float] = None, seed: int = 0) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """
    Per-token weights (and γ where defined) for any loss kind.

    LossTruncation and GmmReweight weights depend on the whole batch.

    Returns:
        Tuple (weights, gammas); gammas is None for the baselines
    """
    delta = spec.delta if delta is None else delta
    batch = TokenBatch(probs, labels)
    if spec.kind == LossKind.KLD:
        return np.ones(len(batch)), np.zeros(len(batch))
    if spec.kind == LossKind.TAILR:
        return tailr_weights(batch, spec.gamma, delta), np.full(len(batch), spec.gamma)
    if spec.kind == LossKind.ADATAILR:
        return adatailr_weights(batch, spec.lam, delta)
    losses = nll(batch.target_probs)
    if spec.kind == LossKind.LOSS_TRUNCATION:
        return loss_truncation(losses, spec.trunc_frac).mask.astype(np.float64), None
    if spec.kind == LossKind.GMM_REWEIGHT:
        return gmm_reweight(losses, spec.gmm_components, seed=seed).weights, None
    raise UnsupportedLoss(f"unknown loss kind {spec.kind!r}")


def weighted_grad(logits: np.ndarray, labels: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Gradient of Σ_i −w_i·log softmax(logits_i)_{y_i} with w held constant."""
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    grad = softmax(logits, axis=1)
    grad[np.arange(labels.size), labels] -= 1.0
    return np.asarray(weights, dtype=np.float64)[:, None] * grad


def loss_grad(logits, labels, spec: LossSpec, seed: int = 0) -> np.ndarray:
    """Analytic gradient of the chosen loss w.r.t. the logits, weights detached.

    `seed` only matters for GmmReweight, whose mixture fit is seeded.
    """
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    weights, _ = token_weights(softmax(logits, axis=1), labels, spec, seed=seed)
    return weighted_grad(logits, labels, weights)


def weighted_objective(logits, labels, weights) -> float:
    """Σ_i −w_i·log softmax(logits_i)_{y_i}; the function loss_grad differentiates."""
    logp = log_softmax(np.asarray(logits, dtype=np.float64), axis=1)
    labels = np.asarray(labels, dtype=np.int64)
    return float(-(np.asarray(weights) * logp[np.arange(labels.size), labels]).sum())
