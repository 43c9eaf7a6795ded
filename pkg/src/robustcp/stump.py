"""Exact one-dimensional change-point fits for the single-jump stump model.

The empirical criterion is piecewise constant in the split location d, with
breakpoints at the distinct covariate values, so fitting reduces to one
criterion evaluation per breakpoint interval.  Ties between disjoint
minimizing intervals are broken toward the smallest left endpoint, and the
returned location is the midpoint of the minimizing interval (or its left
endpoint under the "smallest" convention).
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .criterion import CriterionSpec, location_mestimate


@dataclass(frozen=True)
class StumpModel:
    alpha0: float
    beta0: float
    d0: float

    def __post_init__(self):
        if self.alpha0 == self.beta0:
            raise ValueError("alpha0 must differ from beta0")

    @property
    def delta(self) -> float:
        return abs(self.alpha0 - self.beta0)


@dataclass(frozen=True)
class Dataset1D:
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.shape != y.shape or x.ndim != 1:
            raise ValueError("x and y must be equal-length 1-d sequences")
        if not (np.isfinite(x).all() and np.isfinite(y).all()):
            raise ValueError("non-finite entries")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.x.size


@dataclass(frozen=True)
class StumpFit:
    alpha_hat: float
    beta_hat: float
    d_interval: tuple[float, float]
    d_hat: float
    criterion_value: float
    boundary_hit: bool = False


@dataclass(frozen=True)
class MidArgmin:
    interval: tuple[float, float]
    midpoint: float
    index: int
    boundary_hit: bool


def mid_argmin(values, breakpoints, window, convention: str = "mid") -> MidArgmin:
    """Locate the minimizing interval of a step function.

    values[j] is the criterion on the j-th open interval of the partition
    of `window` induced by `breakpoints` (strictly increasing); unbounded
    end intervals are clipped to the window.  The first minimizing interval
    wins on ties.
    """
    values = np.asarray(values, dtype=float)
    breakpoints = np.asarray(breakpoints, dtype=float)
    if values.size == 0:
        raise ValueError("empty values")
    if values.size != breakpoints.size + 1:
        raise ValueError("values must have length breakpoints+1")
    if breakpoints.size > 1 and not np.all(np.diff(breakpoints) > 0):
        raise ValueError("breakpoints must be strictly increasing")
    lo_w, hi_w = float(window[0]), float(window[1])
    j = int(np.argmin(values))
    lo = lo_w if j == 0 else float(breakpoints[j - 1])
    hi = hi_w if j == values.size - 1 else float(breakpoints[j])
    lo = min(max(lo, lo_w), hi_w)
    hi = max(min(hi, hi_w), lo)
    point = lo if convention == "smallest" else 0.5 * (lo + hi)
    boundary = j == 0 or j == values.size - 1
    return MidArgmin(interval=(lo, hi), midpoint=point, index=j, boundary_hit=boundary)


def _aggregate_distinct(x_sorted, per_point):
    """Sum per-point array over runs of equal x; returns (distinct x, sums)."""
    distinct, start = np.unique(x_sorted, return_index=True)
    sums = np.add.reduceat(per_point, start)
    return distinct, sums


def fit_known_levels(
    data: Dataset1D,
    spec: CriterionSpec,
    convention: str = "mid",
    window: tuple[float, float] | None = None,
) -> StumpFit:
    """Fit the split with the levels pinned at (0, 1).

    Evaluates the criterion on every breakpoint interval induced by the
    sorted distinct covariate values via prefix sums (one loss evaluation
    per point for each of the two candidate residuals).
    """
    if data.n < 1:
        raise ValueError("empty dataset")
    order = np.argsort(data.x, kind="stable")
    xs = data.x[order]
    ys = data.y[order]
    left_loss = spec.loss(ys)          # residual when the point sits left of d
    right_loss = spec.loss(ys - 1.0)   # residual when the point sits right of d
    u, left_sum = _aggregate_distinct(xs, left_loss)
    _, right_sum = _aggregate_distinct(xs, right_loss)
    # C_j = sum_{x <= u_j} loss(y) + sum_{x > u_j} loss(y - 1), j = 0..D
    cum_left = np.concatenate(([0.0], np.cumsum(left_sum)))
    cum_right = np.concatenate(([0.0], np.cumsum(right_sum)))
    values = cum_left + (cum_right[-1] - cum_right)
    if window is None:
        window = (float(u[0]), float(u[-1]))
    res = mid_argmin(values, u, window, convention=convention)
    return StumpFit(
        alpha_hat=0.0,
        beta_hat=1.0,
        d_interval=res.interval,
        d_hat=res.midpoint,
        criterion_value=float(values[res.index]) / data.n,
        boundary_hit=res.boundary_hit,
    )


def _l1_prefix_profile(values: np.ndarray):
    """Running (median, sum of absolute deviations) over prefixes.

    Dual-heap running median; both heaps carry running sums so the SAD is
    available in O(1) per step.
    """
    low, high = [], []  # max-heap (negated) of the low half, min-heap of the high half
    low_sum = high_sum = 0.0
    medians = np.empty(values.size)
    sads = np.empty(values.size)
    for i, v in enumerate(values):
        if not low or v <= -low[0]:
            heapq.heappush(low, -v)
            low_sum += v
        else:
            heapq.heappush(high, v)
            high_sum += v
        if len(low) > len(high) + 1:
            moved = -heapq.heappop(low)
            low_sum -= moved
            heapq.heappush(high, moved)
            high_sum += moved
        elif len(high) > len(low):
            moved = heapq.heappop(high)
            high_sum -= moved
            heapq.heappush(low, -moved)
            low_sum += moved
        med = -low[0] if len(low) > len(high) else 0.5 * (-low[0] + high[0])
        medians[i] = med
        sads[i] = (high_sum - med * len(high)) + (med * len(low) - low_sum)
    return medians, sads


def _split_profiles(ys_sorted: np.ndarray, spec: CriterionSpec):
    """Per-prefix (location estimate, total loss) and the same per-suffix."""
    n = ys_sorted.size
    if spec.is_l2:
        s1 = np.cumsum(ys_sorted)
        s2 = np.cumsum(ys_sorted**2)
        cnt = np.arange(1, n + 1)
        pref_loc = s1 / cnt
        pref_loss = 0.5 * (s2 - s1**2 / cnt)
        r1 = np.cumsum(ys_sorted[::-1])
        r2 = np.cumsum(ys_sorted[::-1] ** 2)
        suf_loc = (r1 / cnt)[::-1]
        suf_loss = (0.5 * (r2 - r1**2 / cnt))[::-1]
        return pref_loc, pref_loss, suf_loc, suf_loss
    if spec.is_l1:
        pref_loc, pref_loss = _l1_prefix_profile(ys_sorted)
        rl, rs = _l1_prefix_profile(ys_sorted[::-1])
        return pref_loc, pref_loss, rl[::-1], rs[::-1]
    pref_loc = np.empty(n)
    pref_loss = np.empty(n)
    suf_loc = np.empty(n)
    suf_loss = np.empty(n)
    for i in range(n):
        a = location_mestimate(ys_sorted[: i + 1], spec)
        pref_loc[i] = a
        pref_loss[i] = float(np.sum(spec.loss(ys_sorted[: i + 1] - a)))
        b = location_mestimate(ys_sorted[i:], spec)
        suf_loc[i] = b
        suf_loss[i] = float(np.sum(spec.loss(ys_sorted[i:] - b)))
    return pref_loc, pref_loss, suf_loc, suf_loss


def fit_stump(data: Dataset1D, spec: CriterionSpec, convention: str = "mid") -> StumpFit:
    """Profile fit of (alpha, beta, d): location M-estimates on both sides
    of every interior breakpoint interval, criterion minimized over splits."""
    if data.n < 2:
        raise ValueError("need two points")
    order = np.argsort(data.x, kind="stable")
    xs = data.x[order]
    ys = data.y[order]
    u, counts = np.unique(xs, return_counts=True)
    if u.size < 2:
        raise ValueError("need two points")
    pref_loc, pref_loss, suf_loc, suf_loss = _split_profiles(ys, spec)
    # split after the run ending at distinct value u_j, j = 0..D-2
    last_idx = np.cumsum(counts) - 1  # index of the last point with x == u_j
    left_end = last_idx[:-1]
    crit = pref_loss[left_end] + suf_loss[left_end + 1]
    # ties (to rounding noise) broken by the smallest left endpoint
    cmin = float(crit.min())
    tol = 1e-9 * (1.0 + abs(cmin))
    j = int(np.flatnonzero(crit <= cmin + tol)[0])
    lo, hi = float(u[j]), float(u[j + 1])
    alpha = float(pref_loc[left_end[j]])
    beta = float(suf_loc[left_end[j] + 1])
    d_hat = lo if convention == "smallest" else 0.5 * (lo + hi)
    return StumpFit(
        alpha_hat=alpha,
        beta_hat=beta,
        d_interval=(lo, hi),
        d_hat=d_hat,
        criterion_value=float(crit[j]) / data.n,
    )
