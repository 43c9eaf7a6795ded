"""Step laws, stopped-walk minimizers, and the limiting-process simulators."""

import math

import numpy as np
import pytest
from scipy.stats import ks_2samp

from robustcp import (
    CPPConfig,
    CovariateLaw,
    CriterionSpec,
    Dataset1D,
    ErrorLaw,
    QUANTILE_LEVELS,
    StepLaw,
    default_stop_barrier,
    fit_known_levels,
    log_survival_slope,
    quantile_table,
    rw_stay_negative_check,
    seed_stream,
    simulate_cbp_midargmin,
    simulate_cpp_samples,
    tail_profile,
)
from robustcp.limitlaw import StumpModel


def test_l2_step_is_shifted_noise():
    law = ErrorLaw.standard_normal()
    step = StepLaw(CriterionSpec.l2(), 2.0, law)
    xi = law.sample(seed_stream(0, 1), 1000)
    np.testing.assert_allclose(step.transform(xi), xi + 1.0)


def test_l1_step_bounded_by_delta():
    law = ErrorLaw.power_tail(2.0)
    step = StepLaw(CriterionSpec.l1(), 1.5, law)
    xi = law.sample(seed_stream(0, 2), 50_000)
    s = step.transform(xi)
    np.testing.assert_allclose(s, np.abs(xi + 1.5) - np.abs(xi))
    assert np.all(np.abs(s) <= 1.5 + 1e-12)


def test_huber_step_bounded():
    k, delta = 1.0, 2.0
    step = StepLaw(CriterionSpec.huber(k), delta, ErrorLaw.standardized_t(3))
    s = step.sample(seed_stream(0, 3), 50_000)
    assert np.all(np.abs(s) <= (k + 1.0) * delta + 1e-9)


def test_step_drift_positive():
    for spec in (CriterionSpec.l1(), CriterionSpec.huber(1.0), CriterionSpec.l2()):
        step = StepLaw(spec, 1.0, ErrorLaw.standardized_t(3))
        assert step.drift(seed=0) > 0


def test_step_law_validates_delta():
    with pytest.raises(ValueError):
        StepLaw(CriterionSpec.l2(), 0.0, ErrorLaw.standard_normal())


def test_stop_barrier_grows_with_stricter_target():
    step = StepLaw(CriterionSpec.l1(), 1.0, ErrorLaw.standardized_t(3))
    b4 = default_stop_barrier(step, target=1e-4)
    b6 = default_stop_barrier(step, target=1e-6)
    assert 0 < b4 <= b6


def test_cpp_samples_deterministic():
    step = StepLaw(CriterionSpec.l1(), 1.0, ErrorLaw.standard_normal())
    config = CPPConfig(step, intensity=1.0)
    a = simulate_cpp_samples(config, 2000, seed=5)
    b = simulate_cpp_samples(config, 2000, seed=5)
    np.testing.assert_array_equal(a, b)
    c = simulate_cpp_samples(config, 2000, seed=6)
    assert not np.array_equal(a, c)


def test_cpp_samples_symmetric():
    step = StepLaw(CriterionSpec.l1(), 1.0, ErrorLaw.standardized_t(3))
    config = CPPConfig(step, intensity=1.0)
    s = simulate_cpp_samples(config, 40_000, seed=4)
    se = float(np.std(s) / math.sqrt(s.size))
    assert abs(float(np.mean(s))) < 3 * se


def test_cpp_degenerate_noise_is_exponential_gap():
    # with zero noise every step equals the drift, so the minimizer is the
    # midpoint of the flat piece straddling the origin: (E_r - E_l)/2
    step = StepLaw(CriterionSpec.l2(), 2.0, ErrorLaw.degenerate())
    config = CPPConfig(step, intensity=1.0)
    s = simulate_cpp_samples(config, 40_000, seed=7)
    rng = seed_stream(123, 9)
    ref = 0.5 * (rng.exponential(size=40_000) - rng.exponential(size=40_000))
    assert ks_2samp(s, ref).statistic < 0.02


def test_cbp_matches_direct_fits():
    model = StumpModel(alpha0=0.0, beta0=1.0, d0=0.5)
    spec = CriterionSpec.l2()
    law = ErrorLaw.standard_normal()
    step = StepLaw(spec, 1.0, law)
    cov = CovariateLaw.uniform(0.0, 1.0)
    n, reps = 60, 4000
    cbp = simulate_cbp_midargmin(model, n, cov, step, seed=1, n_reps=reps)
    rng = seed_stream(2, 77)
    direct = np.empty(reps)
    for r in range(reps):
        x = cov.sample(rng, n)
        y = (x > model.d0).astype(float) + law.sample(rng, n)
        direct[r] = n * (fit_known_levels(Dataset1D(x, y), spec).d_hat - model.d0)
    assert ks_2samp(cbp, direct).statistic < 0.04


def test_cbp_converges_to_cpp():
    # binomial jump counts approach the Poisson limit as n grows
    spec = CriterionSpec.l2()
    law = ErrorLaw.standard_normal()
    step = StepLaw(spec, 1.0, law)
    model = StumpModel(alpha0=0.0, beta0=1.0, d0=0.5)
    cov = CovariateLaw.uniform(0.0, 1.0)
    reps = 4000
    cbp = simulate_cbp_midargmin(model, 500, cov, step, seed=3, n_reps=reps)
    cpp = simulate_cpp_samples(CPPConfig(step, intensity=1.0), reps, seed=4)
    assert ks_2samp(cbp, cpp).statistic < 0.05


def test_quantile_table_shape_and_monotonicity():
    laws = [ErrorLaw.standardized_t(3), ErrorLaw.standard_normal()]
    table = quantile_table(1.0, CriterionSpec.l1(), laws, replications=10_000, seed=0)
    assert set(table.rows) == {"t3", "normal"}
    for qs in table.rows.values():
        assert len(qs) == len(QUANTILE_LEVELS)
        assert np.all(np.diff(qs) >= 0)


def test_quantile_table_rejects_tiny_budget():
    with pytest.raises(ValueError):
        quantile_table(1.0, CriterionSpec.l1(), [ErrorLaw.standard_normal()],
                       replications=100, seed=0)


def test_quantile_table_csv_format():
    table = quantile_table(1.0, CriterionSpec.l1(), [ErrorLaw.standard_normal()],
                           replications=10_000, seed=0)
    lines = table.to_csv().strip().split("\n")
    assert lines[0].startswith("# mu=1 criterion=l1")
    assert lines[1] == "law,q90,q95,q975,q99,q995"
    assert lines[2].startswith("normal,")
    assert len(lines) == 3


def test_tail_profile_survival_and_widths():
    samples = np.abs(seed_stream(0, 5).standard_normal(50_000))
    grid = np.array([0.5, 1.0, 2.0])
    prof = tail_profile(samples, grid)
    for (x0, p, h), expect in zip(prof, (0.6171, 0.3173, 0.0455)):
        assert p == pytest.approx(expect, abs=0.01)
        assert 0 < h < 0.02


def test_log_survival_slope_recovers_pareto_exponent():
    rng = seed_stream(0, 6)
    u = rng.random(400_000)
    samples = u ** (-1.0 / 2.0)  # survival x^-2
    slope = log_survival_slope(samples, top_level=1e-3)
    assert slope == pytest.approx(-2.0, abs=0.35)


def test_rw_stay_negative_bound_exact():
    for n in range(1, 13):
        for mu in (-0.5, -0.2, 0.0):
            lhs, rhs = rw_stay_negative_check(n, mu)
            assert lhs >= rhs - 1e-12


def test_rw_stay_negative_small_cases():
    lhs, rhs = rw_stay_negative_check(1, 0.0)
    assert lhs == pytest.approx(0.5)
    assert rhs == pytest.approx(0.5)
    with pytest.raises(ValueError):
        rw_stay_negative_check(0, 0.0)
