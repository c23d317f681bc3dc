"""
Theorems - Brute-force numerical checks of the trade-off optimality results

Every expectation over an observed token w ~ p_o is an exact finite sum over
the dim outcomes; randomness only enters through the (p_o, p_θ) pairs, which
are seeded per trial from (seed, trial index).

Bounds on the sampled surrogate z̃ are checked with its entropy term in the
doubled form 2(1 − ‖p_θ‖²) (BOUND_ENTROPY_SCALE). The form AdaTaiLr computes
(scale 1) is reported alongside as an informational figure.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import DimTooSmall, NonPositiveLambda
from .models import TheoremReport
from .simplex import (
    TIE_ATOL,
    OneHot,
    Simplex,
    estimation_error,
    gamma_opt,
    holder_gap,
    indicator,
    inner,
    l1_dist,
    linf_dist,
    normalize,
    smooth_indicator,
    tsallis_entropy,
    tvd,
    tvd_onehot,
    tvd_onehot_rows,
    z_value,
)

logger = logging.getLogger(__name__)

DEFAULT_DIMS = (2, 3, 4, 8, 16, 32, 64)
DEFAULT_LAMBDAS = (0.5, 1.0, 2.0, 4.0)
BOUND_ENTROPY_SCALE = 2.0
ALGORITHM_ENTROPY_SCALE = 1.0

THEOREM2_A = 9.0 / 16.0
LEMMA_A = 0.5
B_CONST = 4.0

PAIR_MODES = ("random", "onehot", "identical", "near")

Seed = Union[int, Sequence[int], np.random.Generator]


def _rng(seed: Seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample_simplex(dim: int, rng_seed: Seed = 0) -> Simplex:
    """Flat-Dirichlet draw via normalized exponentials."""
    if dim < 2:
        raise DimTooSmall(f"dim must be >= 2, got {dim}")
    draws = _rng(rng_seed).exponential(size=dim)
    return Simplex(draws / draws.sum())


def trial_pair(mode: str, dim: int, rng: np.random.Generator) -> Tuple[Simplex, Simplex]:
    """
    Build one (p_o, p_θ) pair.

    Modes:
        random: two independent flat-Dirichlet draws
        onehot: p_o one-hot at a random token, p_θ random
        identical: p_θ = p_o
        near: p_θ a small perturbation of p_o
    """
    if mode == "random":
        return sample_simplex(dim, rng), sample_simplex(dim, rng)
    if mode == "onehot":
        return OneHot(int(rng.integers(dim)), dim).as_simplex(), sample_simplex(dim, rng)
    if mode == "identical":
        p = sample_simplex(dim, rng)
        return p, p
    if mode == "near":
        p = sample_simplex(dim, rng)
        return p, normalize(p.probs + 0.05 * rng.exponential(size=dim) / dim)
    raise ValueError(f"unknown pair mode {mode!r}")


def z_tilde_all(p_theta: Simplex, entropy_scale: float = BOUND_ENTROPY_SCALE) -> np.ndarray:
    """z̃(w) for every possible observed token w."""
    dim = p_theta.dim
    rows = np.broadcast_to(p_theta.probs, (dim, dim))
    return tvd_onehot_rows(rows, np.arange(dim)) - entropy_scale * 2.0 * tsallis_entropy(p_theta, 2.0)


@dataclass
class TheoremTrial:
    p_o: Simplex
    p_theta: Simplex
    lam: float
    D: float
    z: float
    z_tilde_expectation: float

    @classmethod
    def build(cls, p_o: Simplex, p_theta: Simplex, lam: float = 1.0,
              entropy_scale: float = BOUND_ENTROPY_SCALE) -> "TheoremTrial":
        return cls(
            p_o=p_o,
            p_theta=p_theta,
            lam=lam,
            D=0.5 * l1_dist(p_theta, p_o),
            z=z_value(p_o, p_theta),
            z_tilde_expectation=float(np.dot(p_o.probs, z_tilde_all(p_theta, entropy_scale))),
        )


def _check_lambdas(lambdas: Iterable[float]) -> Tuple[float, ...]:
    lambdas = tuple(float(lam) for lam in lambdas)
    for lam in lambdas:
        if not lam > 0:
            raise NonPositiveLambda(f"lambda must be > 0, got {lam}")
    return lambdas


def _pairs(trials: int, dims: Sequence[int], seed: int, mode: str):
    for i in range(trials):
        rng = np.random.default_rng([seed, i])
        yield trial_pair(mode, dims[i % len(dims)], rng)


def _affine_error(tv: float, two_h2: float, gammas) -> np.ndarray:
    """Estimation error extended affinely to γ outside [0, 1]."""
    gammas = np.asarray(gammas, dtype=np.float64)
    return (1.0 - gammas) * tv + gammas * two_h2


def verify_theorem1(trials: int = 10_000, dims: Sequence[int] = DEFAULT_DIMS, grid_points: int = 101,
                    seed: int = 0, pair_mode: str = "random") -> TheoremReport:
    """
    Check that gamma_opt minimizes the estimation error over a uniform γ-grid.

    Trials with |z| < TIE_ATOL are ties (the error is flat in γ) and pass.
    """
    if grid_points < 3:
        raise ValueError("grid_points must be >= 3")
    grid = np.linspace(0.0, 1.0, grid_points)
    max_excess = None
    ones = zeros = ties = 0
    for p_o, p_theta in _pairs(trials, dims, seed, pair_mode):
        g = gamma_opt(p_o, p_theta)
        ones += g == 1.0
        zeros += g == 0.0
        if abs(z_value(p_o, p_theta)) < TIE_ATOL:
            ties += 1
            continue
        tv = tvd(p_o, p_theta)
        two_h2 = 2.0 * tsallis_entropy(p_o, 2.0)
        excess = estimation_error(p_o, p_theta, g) - float(_affine_error(tv, two_h2, grid).min())
        max_excess = excess if max_excess is None else max(max_excess, excess)

    return TheoremReport.build(
        name="theorem1",
        trials=trials,
        seed=seed,
        bound=1e-12,
        max_violation=0.0 if max_excess is None else max_excess,
        details={
            "grid_points": grid_points,
            "dims": list(dims),
            "pair_mode": pair_mode,
            "gamma_opt_ones": int(ones),
            "gamma_opt_zeros": int(zeros),
            "ties": ties,
        },
    )


def verify_theorem2(trials: int = 1_000, lambdas: Iterable[float] = DEFAULT_LAMBDAS,
                    dims: Sequence[int] = DEFAULT_DIMS, seed: int = 0,
                    pair_mode: str = "random") -> TheoremReport:
    """
    Check E_w[ε(Γ̃(w))] − ε(Γ_opt) ≤ (9/16)/λ + 4D with the unclamped Γ̃.

    The gap is signed: Γ̃ may leave [0, 1], where ε continues affinely.
    Informational details per λ: the same check with the ½ constant, with the
    clamped Γ̃ and with the AdaTaiLr form of z̃, plus how often the clamp binds.
    """
    lambdas = _check_lambdas(lambdas)
    per_lam = {
        lam: {"max_gap": -np.inf, "max_violation": -np.inf, "max_violation_half_constant": -np.inf,
              "max_violation_clamped": -np.inf, "max_violation_algorithm_form": -np.inf,
              "clamp_bound": 0, "outcomes": 0}
        for lam in lambdas
    }
    for p_o, p_theta in _pairs(trials, dims, seed, pair_mode):
        D = 0.5 * l1_dist(p_theta, p_o)
        tv = tvd(p_o, p_theta)
        two_h2 = 2.0 * tsallis_entropy(p_o, 2.0)
        eps_opt = estimation_error(p_o, p_theta, gamma_opt(p_o, p_theta))
        zt_bound = z_tilde_all(p_theta, BOUND_ENTROPY_SCALE)
        zt_alg = z_tilde_all(p_theta, ALGORITHM_ENTROPY_SCALE)
        for lam in lambdas:
            stats = per_lam[lam]
            bound = THEOREM2_A / lam + B_CONST * D
            raw = 0.5 + lam * zt_bound
            gap = float(np.dot(p_o.probs, _affine_error(tv, two_h2, raw))) - eps_opt
            clamped_gap = float(np.dot(p_o.probs, _affine_error(tv, two_h2, np.clip(raw, 0.0, 1.0)))) - eps_opt
            alg_gap = float(np.dot(p_o.probs, _affine_error(tv, two_h2, 0.5 + lam * zt_alg))) - eps_opt
            stats["max_gap"] = max(stats["max_gap"], gap)
            stats["max_violation"] = max(stats["max_violation"], gap - bound)
            stats["max_violation_half_constant"] = max(
                stats["max_violation_half_constant"], gap - (LEMMA_A / lam + B_CONST * D))
            stats["max_violation_clamped"] = max(stats["max_violation_clamped"], clamped_gap - bound)
            stats["max_violation_algorithm_form"] = max(stats["max_violation_algorithm_form"], alg_gap - bound)
            stats["clamp_bound"] += int(np.count_nonzero((raw < 0.0) | (raw > 1.0)))
            stats["outcomes"] += raw.size

    details = {}
    for lam, stats in per_lam.items():
        outcomes = stats.pop("outcomes")
        clamp_bound = stats.pop("clamp_bound")
        entry = {k: float(v) for k, v in stats.items()}
        entry["clamp_binding_fraction"] = clamp_bound / outcomes if outcomes else 0.0
        details[repr(lam)] = entry
    worst = max((d["max_violation"] for d in details.values()), default=0.0)
    return TheoremReport.build(
        name="theorem2",
        trials=trials,
        seed=seed,
        bound=0.0,
        max_violation=worst,
        details={"a": THEOREM2_A, "b": B_CONST, "pair_mode": pair_mode, "per_lambda": details},
    )


def verify_lemma_sampled_tvd(trials: int = 10_000, dims: Sequence[int] = DEFAULT_DIMS, seed: int = 0,
                             pair_mode: str = "random") -> TheoremReport:
    """E_{w~p_o}[TVD(e^(w), p_θ)] = 1 − ⟨p_θ, p_o⟩."""
    worst = 0.0
    for p_o, p_theta in _pairs(trials, dims, seed, pair_mode):
        lhs = sum(p_o.probs[w] * tvd_onehot(OneHot(w, p_o.dim), p_theta) for w in range(p_o.dim))
        worst = max(worst, abs(lhs - (1.0 - inner(p_theta, p_o))))
    return TheoremReport.build("lemma_sampled_tvd", trials, seed, worst, bound=1e-12,
                               details={"pair_mode": pair_mode})


def verify_lemma_norms(trials: int = 10_000, dims: Sequence[int] = DEFAULT_DIMS, seed: int = 0) -> TheoremReport:
    """‖p − q‖_∞ ≤ ½‖p − q‖₁, together with the Hölder (1, ∞) inequality."""
    worst_norms = -np.inf
    worst_holder = -np.inf
    for p, q in _pairs(trials, dims, seed, "random"):
        worst_norms = max(worst_norms, linf_dist(p, q) - 0.5 * l1_dist(p, q))
        worst_holder = max(worst_holder, holder_gap(p, q))
    return TheoremReport.build(
        "lemma_norms", trials, seed, max(worst_norms, worst_holder), bound=1e-12,
        details={"max_violation_norms": float(worst_norms), "max_violation_holder": float(worst_holder)},
    )


def verify_lemma_zdiff(trials: int = 10_000, dims: Sequence[int] = DEFAULT_DIMS, seed: int = 0,
                       pair_mode: str = "random") -> TheoremReport:
    """|z − E_w z̃| ≤ 4D."""
    worst = -np.inf
    worst_alg = -np.inf
    for p_o, p_theta in _pairs(trials, dims, seed, pair_mode):
        trial = TheoremTrial.build(p_o, p_theta)
        worst = max(worst, abs(trial.z - trial.z_tilde_expectation) - B_CONST * trial.D)
        alg = TheoremTrial.build(p_o, p_theta, entropy_scale=ALGORITHM_ENTROPY_SCALE)
        worst_alg = max(worst_alg, abs(alg.z - alg.z_tilde_expectation) - B_CONST * alg.D)
    return TheoremReport.build(
        "lemma_zdiff", trials, seed, float(worst), bound=1e-9,
        details={"pair_mode": pair_mode, "max_violation_algorithm_form": float(worst_alg)},
    )


def verify_lemma_smooth(lam: Union[float, Iterable[float]] = 1.0,
                        z_grid: Optional[np.ndarray] = None) -> TheoremReport:
    """
    (1[z] − f(z, λ))·z ≤ 1/(16λ) over a dense z grid.

    The default grid has step 1e-4 over [−2, 2]; the maximizer z = 1/(4λ) is
    always added.
    """
    lambdas = _check_lambdas([lam] if np.isscalar(lam) else lam)
    if z_grid is None:
        z_grid = np.linspace(-2.0, 2.0, 40_001)
    z_grid = np.asarray(z_grid, dtype=np.float64)
    details = {}
    worst = -np.inf
    for lam_value in lambdas:
        zs = np.append(z_grid, 1.0 / (4.0 * lam_value))
        values = np.array([(indicator(z) - smooth_indicator(z, lam_value)) * z for z in zs])
        bound = 1.0 / (16.0 * lam_value)
        max_value = float(values.max())
        worst = max(worst, max_value - bound)
        details[repr(lam_value)] = {
            "max_value": max_value,
            "bound": bound,
            "value_at_maximizer": float(values[-1]),
            "argmax": float(zs[int(values.argmax())]),
        }
    return TheoremReport.build("lemma_smooth", len(z_grid) + 1, 0, float(worst), bound=1e-12,
                               details={"per_lambda": details})


def verify_lemma_dist_approx(trials: int = 1_000, lambdas: Iterable[float] = DEFAULT_LAMBDAS,
                             dims: Sequence[int] = DEFAULT_DIMS, seed: int = 0,
                             pair_mode: str = "random") -> TheoremReport:
    """
    E_w[(f(z) − f(z̃(w)))·z] ≤ ½/λ + 4D, exact expectation over w ~ p_o.

    The reduced form [f(z) − f(E_w z̃)]·z is kept in details as
    max_violation_reduced; f is not affine so the two differ.
    """
    lambdas = _check_lambdas(lambdas)
    per_lam = {lam: {"max_violation": -np.inf, "max_violation_reduced": -np.inf} for lam in lambdas}
    for p_o, p_theta in _pairs(trials, dims, seed, pair_mode):
        trial = TheoremTrial.build(p_o, p_theta)
        zt = z_tilde_all(p_theta, BOUND_ENTROPY_SCALE)
        for lam in lambdas:
            bound = LEMMA_A / lam + B_CONST * trial.D
            f_z = smooth_indicator(trial.z, lam)
            value = sum(
                p_o.probs[w] * (f_z - smooth_indicator(zt[w], lam)) * trial.z for w in range(p_o.dim)
            )
            reduced = (f_z - smooth_indicator(trial.z_tilde_expectation, lam)) * trial.z
            stats = per_lam[lam]
            stats["max_violation"] = max(stats["max_violation"], value - bound)
            stats["max_violation_reduced"] = max(stats["max_violation_reduced"], reduced - bound)
    details = {repr(lam): {k: float(v) for k, v in stats.items()} for lam, stats in per_lam.items()}
    worst = max((d["max_violation"] for d in details.values()), default=0.0)
    return TheoremReport.build("lemma_dist_approx", trials, seed, worst, bound=1e-9,
                               details={"a": LEMMA_A, "b": B_CONST, "pair_mode": pair_mode, "per_lambda": details})


SUITES: Dict[str, Tuple[str, ...]] = {
    "theorem1": ("theorem1",),
    "theorem2": ("theorem2",),
    "lemmas": ("lemma_sampled_tvd", "lemma_norms", "lemma_zdiff", "lemma_smooth", "lemma_dist_approx"),
}
SUITES["all"] = SUITES["theorem1"] + SUITES["theorem2"] + SUITES["lemmas"]


def run_suite(suite: str = "all", trials: Optional[int] = None, seed: int = 0) -> List[TheoremReport]:
    """Run the named suite; `trials` overrides every check's default trial count."""
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}, expected one of {sorted(SUITES)}")
    kw = {} if trials is None else {"trials": trials}
    runners: Dict[str, Callable[[], TheoremReport]] = {
        "theorem1": lambda: verify_theorem1(seed=seed, **kw),
        "theorem2": lambda: verify_theorem2(seed=seed, **kw),
        "lemma_sampled_tvd": lambda: verify_lemma_sampled_tvd(seed=seed, **kw),
        "lemma_norms": lambda: verify_lemma_norms(seed=seed, **kw),
        "lemma_zdiff": lambda: verify_lemma_zdiff(seed=seed, **kw),
        "lemma_smooth": lambda: verify_lemma_smooth(lam=DEFAULT_LAMBDAS),
        "lemma_dist_approx": lambda: verify_lemma_dist_approx(seed=seed, **kw),
    }
    reports = []
    for name in SUITES[suite]:
        report = runners[name]()
        logger.info("%s: max_violation=%.3e pass=%s", name, report.max_violation, report.passed)
        reports.append(report)
    return reports
