"""
GMM - One-dimensional Gaussian mixture fit over per-sample losses

Used to separate a low-loss (clean) component from high-loss (noisy) ones.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp
from scipy.stats import norm

from .errors import TooFewSamples

logger = logging.getLogger(__name__)

MAX_ITER = 100
VAR_FLOOR = 1e-6
LL_TOL = 1e-8


@dataclass
class GmmFit:
    """Result of a mixture fit; `weights` is the posterior of the lowest-mean component."""

    weights: np.ndarray
    responsibilities: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    mixing: np.ndarray
    log_likelihood: float
    iterations: int
    converged: bool
    degenerate: bool = False


def _kmeans_pp(values: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    centers = [values[rng.integers(values.size)]]
    for _ in range(1, k):
        d2 = np.min(np.square(values[:, None] - np.array(centers)[None, :]), axis=1)
        total = d2.sum()
        if total <= 0:
            centers.append(values[rng.integers(values.size)])
        else:
            centers.append(values[rng.choice(values.size, p=d2 / total)])
    return np.array(centers, dtype=np.float64)


def _log_joint(values, means, variances, mixing) -> np.ndarray:
    return np.log(mixing)[None, :] + norm.logpdf(
        values[:, None], loc=means[None, :], scale=np.sqrt(variances)[None, :]
    )


def fit_gmm_1d(values, components: int = 2, seed: int = 0,
               max_iter: int = MAX_ITER, var_floor: float = VAR_FLOOR, tol: float = LL_TOL) -> GmmFit:
    """
    Fit a 1-D Gaussian mixture by expectation-maximization.

    Initialization: k-means++ centres on the values, then one hard assignment
    to the nearest centre for the first M-step.

    Args:
        values: 1-D sample
        components: number of mixture components (>= 2)
        seed: seed for the k-means++ draw
        max_iter: EM iteration cap
        var_floor: lower bound for every component variance
        tol: stop once the log-likelihood improves by less than this

    Returns:
        GmmFit. When all values are equal the fit is skipped: every weight is 1
        and `degenerate` is set.
    """
    x = np.asarray(values, dtype=np.float64).reshape(-1)
    if components < 2:
        raise TooFewSamples(f"need at least 2 components, got {components}")
    if x.size < 2 * components:
        raise TooFewSamples(f"{x.size} samples for {components} components")

    n = x.size
    if np.ptp(x) == 0:
        logger.warning("all %d losses are equal; returning uniform weights", n)
        resp = np.full((n, components), 1.0 / components)
        return GmmFit(
            weights=np.ones(n),
            responsibilities=resp,
            means=np.full(components, x[0]),
            variances=np.full(components, var_floor),
            mixing=np.full(components, 1.0 / components),
            log_likelihood=float("nan"),
            iterations=0,
            converged=True,
            degenerate=True,
        )

    rng = np.random.default_rng(seed)
    centers = _kmeans_pp(x, components, rng)
    assign = np.argmin(np.abs(x[:, None] - centers[None, :]), axis=1)
    resp = np.zeros((n, components))
    resp[np.arange(n), assign] = 1.0

    overall_var = max(float(x.var()), var_floor)
    prev_ll = -np.inf
    ll = -np.inf
    converged = False
    iterations = 0
    means = centers.copy()
    variances = np.full(components, overall_var)
    mixing = np.full(components, 1.0 / components)

    for iterations in range(1, max_iter + 1):
        # M-step
        nk = resp.sum(axis=0)
        for k in range(components):
            if nk[k] <= 1e-12:
                # empty component keeps its centre and the pooled variance
                means[k] = centers[k]
                variances[k] = overall_var
                nk[k] = 1e-12
            else:
                means[k] = np.dot(resp[:, k], x) / nk[k]
                variances[k] = max(np.dot(resp[:, k], np.square(x - means[k])) / nk[k], var_floor)
        mixing = np.maximum(nk / n, 1e-300)
        mixing = mixing / mixing.sum()

        # E-step
        log_joint = _log_joint(x, means, variances, mixing)
        log_norm = logsumexp(log_joint, axis=1)
        resp = np.exp(log_joint - log_norm[:, None])
        ll = float(log_norm.sum())
        if ll - prev_ll < tol:
            converged = True
            break
        prev_ll = ll

    low = int(np.argmin(means))
    logger.debug("gmm fit: %d iterations, means %s, converged=%s", iterations, means, converged)
    return GmmFit(
        weights=resp[:, low].copy(),
        responsibilities=resp,
        means=means,
        variances=variances,
        mixing=mixing,
        log_likelihood=ll,
        iterations=iterations,
        converged=converged,
    )


def gmm_reweight(losses, components: int = 2, seed: int = 0) -> GmmFit:
    """Posterior weight of the lowest-mean mixture component for each loss."""
    return fit_gmm_1d(losses, components=components, seed=seed)
