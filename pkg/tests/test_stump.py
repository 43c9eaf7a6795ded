"""One-dimensional two-level fits and interval argmin bookkeeping."""

import numpy as np
import pytest

from robustcp import (
    CriterionSpec,
    Dataset1D,
    fit_known_levels,
    fit_stump,
    location_mestimate,
    mid_argmin,
)

ALL_SPECS = (CriterionSpec.l1(), CriterionSpec.huber(1.0), CriterionSpec.l2())


def test_mid_argmin_basic():
    res = mid_argmin([3.0, 1.0, 2.0], [0.0, 1.0], window=(-5.0, 5.0))
    assert res.index == 1
    assert res.interval == (0.0, 1.0)
    assert res.midpoint == pytest.approx(0.5)
    assert not res.boundary_hit


def test_mid_argmin_first_interval_wins_ties():
    res = mid_argmin([2.0, 1.0, 1.0, 5.0], [0.0, 1.0, 2.0], window=(-5.0, 5.0))
    assert res.index == 1
    assert res.interval == (0.0, 1.0)


def test_mid_argmin_clips_end_intervals_to_window():
    res = mid_argmin([0.0, 1.0], [2.0], window=(-4.0, 10.0))
    assert res.interval == (-4.0, 2.0)
    assert res.midpoint == pytest.approx(-1.0)
    assert res.boundary_hit


def test_mid_argmin_validates():
    with pytest.raises(ValueError):
        mid_argmin([], [], window=(0.0, 1.0))
    with pytest.raises(ValueError):
        mid_argmin([1.0, 2.0, 3.0], [0.0], window=(0.0, 1.0))
    with pytest.raises(ValueError):
        mid_argmin([1.0, 2.0, 3.0], [1.0, 0.0], window=(0.0, 1.0))


def test_known_levels_three_point_example():
    # losses over the four breakpoint intervals are (2, 1, 0, 1)
    fit = fit_known_levels(Dataset1D([1.0, 2.0, 3.0], [0.0, 0.0, 1.0]), CriterionSpec.l2())
    assert fit.d_interval == (2.0, 3.0)
    assert fit.d_hat == pytest.approx(2.5)
    assert fit.criterion_value == pytest.approx(0.0, abs=1e-12)
    assert fit.alpha_hat == 0.0 and fit.beta_hat == 1.0


def test_known_levels_smallest_convention():
    fit = fit_known_levels(Dataset1D([1.0, 2.0, 3.0], [0.0, 0.0, 1.0]), CriterionSpec.l2(),
                           convention="smallest")
    assert fit.d_hat == pytest.approx(2.0)


def test_fit_stump_constant_pair():
    fit = fit_stump(Dataset1D([1.0, 2.0], [5.0, 5.0]), CriterionSpec.huber(1.0))
    assert fit.alpha_hat == pytest.approx(5.0)
    assert fit.beta_hat == pytest.approx(5.0)
    assert fit.criterion_value == pytest.approx(0.0, abs=1e-12)


def test_fit_stump_requires_two_distinct_x():
    with pytest.raises(ValueError):
        fit_stump(Dataset1D([1.0], [0.0]), CriterionSpec.l2())
    with pytest.raises(ValueError):
        fit_stump(Dataset1D([2.0, 2.0], [0.0, 1.0]), CriterionSpec.l2())


def test_dataset_validation():
    with pytest.raises(ValueError):
        Dataset1D([1.0, 2.0], [0.0])
    with pytest.raises(ValueError):
        Dataset1D([1.0, np.nan], [0.0, 1.0])


def _oracle(x, y, spec):
    """Brute force over every interior split of the sorted data."""
    order = np.argsort(x, kind="stable")
    xs, ys = x[order], y[order]
    best = None
    for j in range(1, len(xs)):
        if xs[j - 1] == xs[j]:
            continue
        a = location_mestimate(ys[:j], spec)
        b = location_mestimate(ys[j:], spec)
        v = float(np.sum(spec.loss(ys[:j] - a)) + np.sum(spec.loss(ys[j:] - b)))
        if best is None or v < best[0] - 1e-9 * (1 + abs(best[0])):
            best = (v, (float(xs[j - 1]), float(xs[j])), a, b)
    return best


def test_fit_stump_matches_bruteforce_small():
    rng = np.random.default_rng(7)
    for _ in range(120):
        n = int(rng.integers(3, 13))
        x = np.round(rng.standard_normal(n), 2)
        if len(np.unique(x)) < 2:
            continue
        y = rng.standard_normal(n) + (x > 0)
        for spec in ALL_SPECS:
            v, interval, a, b = _oracle(x, y, spec)
            fit = fit_stump(Dataset1D(x, y), spec)
            assert fit.d_interval == pytest.approx(interval, abs=1e-12)
            assert fit.alpha_hat == pytest.approx(a, abs=1e-6)
            assert fit.beta_hat == pytest.approx(b, abs=1e-6)
            assert fit.criterion_value == pytest.approx(v / n, abs=1e-9)


def test_fit_stump_criterion_reevaluates():
    rng = np.random.default_rng(8)
    x = rng.standard_normal(40)
    y = (x > 0.2) + 0.3 * rng.standard_normal(40)
    for spec in ALL_SPECS:
        fit = fit_stump(Dataset1D(x, y), spec)
        left = x <= fit.d_hat
        direct = float(np.sum(spec.loss(y[left] - fit.alpha_hat))
                       + np.sum(spec.loss(y[~left] - fit.beta_hat))) / x.size
        assert fit.criterion_value == pytest.approx(direct, abs=1e-9)


def test_fit_stump_profile_constant_on_interval():
    rng = np.random.default_rng(9)
    x = rng.standard_normal(30)
    y = (x > 0.0) + 0.3 * rng.standard_normal(30)
    spec = CriterionSpec.l2()
    fit = fit_stump(Dataset1D(x, y), spec)
    lo, hi = fit.d_interval
    for d in np.linspace(lo, hi, 5)[1:-1]:
        left = x <= d
        v = float(np.sum(spec.loss(y[left] - fit.alpha_hat))
                  + np.sum(spec.loss(y[~left] - fit.beta_hat))) / x.size
        assert v == pytest.approx(fit.criterion_value, abs=1e-12)


def test_known_levels_recovers_clean_split():
    rng = np.random.default_rng(10)
    x = rng.uniform(0, 1, 200)
    y = (x > 0.4).astype(float) + 0.1 * rng.standard_normal(200)
    for spec in ALL_SPECS:
        fit = fit_known_levels(Dataset1D(x, y), spec)
        assert abs(fit.d_hat - 0.4) < 0.05
