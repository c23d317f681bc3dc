import numpy as np
import pytest

from tvdlab.errors import DimTooSmall, NonPositiveLambda
from tvdlab.simplex import Simplex, l1_dist
from tvdlab.theorems import (
    DEFAULT_LAMBDAS,
    PAIR_MODES,
    SUITES,
    TheoremTrial,
    run_suite,
    sample_simplex,
    trial_pair,
    verify_lemma_dist_approx,
    verify_lemma_norms,
    verify_lemma_sampled_tvd,
    verify_lemma_smooth,
    verify_lemma_zdiff,
    verify_theorem1,
    verify_theorem2,
)


def test_sample_simplex_is_flat_dirichlet():
    rng = np.random.default_rng(0)
    draws = np.array([sample_simplex(3, rng).probs for _ in range(100_000)])
    assert np.all(np.abs(draws.mean(axis=0) - 1.0 / 3.0) < 0.01)
    with pytest.raises(DimTooSmall):
        sample_simplex(1)


def test_trial_pair_modes():
    rng = np.random.default_rng(1)
    p_o, p_theta = trial_pair("identical", 5, rng)
    assert p_o == p_theta
    p_o, _ = trial_pair("onehot", 5, rng)
    assert sorted(p_o.probs) == [0.0, 0.0, 0.0, 0.0, 1.0]
    p_o, p_theta = trial_pair("near", 5, rng)
    assert 0.0 < 0.5 * l1_dist(p_o, p_theta) < 0.5
    with pytest.raises(ValueError):
        trial_pair("adversarial", 5, rng)


def test_theorem_trial_uses_tight_d():
    p_o = Simplex([0.6, 0.3, 0.1])
    p_theta = Simplex([0.2, 0.5, 0.3])
    trial = TheoremTrial.build(p_o, p_theta)
    assert trial.D == pytest.approx(0.5 * l1_dist(p_theta, p_o), abs=1e-12)
    assert trial.D == pytest.approx(0.4, abs=1e-12)
    # z = TVD − 2H_2(p_o) = 0.4 − 0.54
    assert trial.z == pytest.approx(-0.14, abs=1e-12)


def test_theorem1_default_run():
    report = verify_theorem1()
    assert report.passed
    assert report.trials == 10_000
    assert report.max_violation <= 1e-12
    assert report.details["gamma_opt_ones"] + report.details["gamma_opt_zeros"] == 10_000


def test_theorem1_degenerate_pairs():
    onehot = verify_theorem1(trials=200, pair_mode="onehot")
    assert onehot.passed and onehot.details["gamma_opt_ones"] == 200
    identical = verify_theorem1(trials=200, pair_mode="identical")
    assert identical.passed and identical.details["gamma_opt_zeros"] == 200
    with pytest.raises(ValueError):
        verify_theorem1(trials=1, grid_points=2)


def test_theorem2_default_run():
    report = verify_theorem2()
    assert report.passed
    assert report.max_violation <= 0.0 + 1e-9
    per_lambda = report.details["per_lambda"]
    assert set(per_lambda) == {repr(lam) for lam in DEFAULT_LAMBDAS}
    for entry in per_lambda.values():
        assert 0.0 <= entry["clamp_binding_fraction"] <= 1.0
        assert entry["max_violation"] <= 1e-9


@pytest.mark.parametrize("mode", PAIR_MODES)
def test_theorem2_pair_modes(mode):
    assert verify_theorem2(trials=100, pair_mode=mode).passed


def test_theorem2_at_zero_distance_shrinks_with_lambda():
    report = verify_theorem2(trials=200, lambdas=[1.0, 16.0, 256.0], pair_mode="identical")
    assert report.passed
    for lam in (1.0, 16.0, 256.0):
        assert report.details["per_lambda"][repr(lam)]["max_gap"] <= 9.0 / (16.0 * lam) + 1e-9
    with pytest.raises(NonPositiveLambda):
        verify_theorem2(trials=1, lambdas=[0.0])


def test_lemma_sampled_tvd():
    report = verify_lemma_sampled_tvd()
    assert report.passed and report.max_violation <= 1e-12
    assert verify_lemma_sampled_tvd(trials=100, pair_mode="onehot").passed


def test_lemma_norms():
    report = verify_lemma_norms()
    assert report.passed
    assert report.details["max_violation_holder"] <= 1e-12


def test_lemma_zdiff():
    assert verify_lemma_zdiff().passed
    for mode in PAIR_MODES:
        assert verify_lemma_zdiff(trials=200, pair_mode=mode).passed


def test_lemma_smooth_is_tight_at_maximizer():
    report = verify_lemma_smooth(lam=1.0)
    assert report.passed
    entry = report.details["per_lambda"]["1.0"]
    assert abs(entry["max_value"] - 0.0625) <= 1e-9
    assert entry["value_at_maximizer"] == pytest.approx(0.0625, abs=1e-12)
    assert entry["argmax"] == pytest.approx(0.25)
    assert verify_lemma_smooth(lam=DEFAULT_LAMBDAS).passed


def test_lemma_dist_approx():
    report = verify_lemma_dist_approx()
    assert report.passed
    per_lambda = report.details["per_lambda"]
    assert set(per_lambda) == {"0.5", "1.0", "2.0", "4.0"}
    # the expectation over outcomes governs, the reduced form is reported beside it
    assert report.max_violation == max(d["max_violation"] for d in per_lambda.values())
    assert all(d["max_violation"] <= 0.0 for d in per_lambda.values())
    assert all("max_violation_reduced" in d for d in per_lambda.values())
    # at zero distance the bound is ½/λ alone
    identical = verify_lemma_dist_approx(trials=200, pair_mode="identical")
    assert identical.passed


def test_run_suite_names_and_determinism():
    reports = run_suite("all", trials=30, seed=5)
    assert [r.name for r in reports] == list(SUITES["all"])
    assert len(reports) == 7
    again = run_suite("all", trials=30, seed=5)
    assert [r.to_record() for r in reports] == [r.to_record() for r in again]
    assert len(run_suite("lemmas", trials=10)) == 5
    with pytest.raises(ValueError):
        run_suite("corollaries")


def test_report_record_uses_pass_key():
    record = run_suite("theorem1", trials=10)[0].to_record()
    assert set(record) == {"name", "trials", "seed", "bound", "max_violation", "pass", "details"}
    assert record["pass"] is True
