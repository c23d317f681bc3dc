"""
Gradcheck - Central finite-difference check of the analytic loss gradients

Weights are computed once at the base logits and frozen, so the function
being differentiated is the re-weighted negative log-likelihood the trainer
actually optimizes.
"""

import logging
from typing import Iterable, Optional

import numpy as np
from scipy.special import softmax

from .losses import loss_grad, token_weights, weighted_objective
from .models import LossKind, LossSpec, TheoremReport

logger = logging.getLogger(__name__)

FD_STEP = 1e-5
REL_TOL = 1e-5


def numeric_grad(func, x: np.ndarray, eps: float = FD_STEP) -> np.ndarray:
    grad = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        plus = x.copy()
        minus = x.copy()
        plus[idx] += eps
        minus[idx] -= eps
        grad[idx] = (func(plus) - func(minus)) / (2 * eps)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric))
    if scale < 1e-9:
        return 0.0
    return float(np.linalg.norm(analytic - numeric) / scale)


def random_spec(kind: LossKind, rng: np.random.Generator) -> LossSpec:
    return LossSpec(
        kind=kind,
        gamma=float(rng.uniform(0.0, 1.0)),
        lam=float(rng.uniform(0.25, 4.0)),
        delta=float(rng.uniform(0.0, 0.5)),
        trunc_frac=float(rng.uniform(0.0, 0.5)),
    )


def check_gradients(kinds: Optional[Iterable[LossKind]] = None, trials: int = 100,
                    seed: int = 0) -> TheoremReport:
    """
    Compare loss_grad against central differences on random (logits, labels, spec).

    Returns:
        TheoremReport whose max_violation is the worst relative error minus
        REL_TOL, with the worst error per loss kind in details
    """
    kinds = list(kinds) if kinds is not None else list(LossKind)
    worst = {}
    for k_index, kind in enumerate(kinds):
        worst_kind = 0.0
        for trial in range(trials):
            rng = np.random.default_rng([seed, k_index, trial])
            min_len = 2 * 2 if kind == LossKind.GMM_REWEIGHT else 1
            length = int(rng.integers(min_len, 9))
            vocab = int(rng.integers(2, 17))
            logits = rng.normal(0.0, 2.0, size=(length, vocab))
            labels = rng.integers(0, vocab, size=length)
            spec = random_spec(kind, rng)

            analytic = loss_grad(logits, labels, spec, seed=trial)
            weights, _ = token_weights(softmax(logits, axis=1), labels, spec, seed=trial)
            numeric = numeric_grad(lambda x: weighted_objective(x, labels, weights), logits)
            worst_kind = max(worst_kind, relative_error(analytic, numeric))
        worst[kind.value] = worst_kind
        logger.info("grad-check %s: worst relative error %.3e", kind.value, worst_kind)

    max_err = max(worst.values()) if worst else 0.0
    return TheoremReport.build(
        name="grad_check",
        trials=trials * len(kinds),
        seed=seed,
        max_violation=max_err - REL_TOL,
        details={"step": FD_STEP, "rel_tol": REL_TOL, "worst_relative_error": worst},
    )
