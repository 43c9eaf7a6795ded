"""Minimizers of drifted random walks and compound Poisson/Binomial processes.

The limit of n*(dhat - d0) is the mid-argmin of a two-sided compound
Poisson process whose jump law depends on the criterion: xi + delta/2 for
squared error, |xi + delta| - |xi| for absolute deviation, and the scaled
Huber increment in between.  Each side is a positively drifted walk, so it
can be simulated to its global minimum by stopping once the walk has
climbed a barrier above its running minimum; the barrier default is sized
so the chance of a later new minimum is below 1e-4.

Arrival times are independent of the jump values, so the minimizing flat
piece [tau_j, tau_{j+1}] can be drawn afterwards as a Gamma(j) arrival plus
an exponential gap.

Absolute-deviation and Huber steps have atoms (the step equals +delta
whenever xi >= 0), so the walk minimum ties across several flat pieces
with positive probability.  A tie is resolved by selecting one minimizing
piece uniformly at random, which matches the estimator at finite n: there
the level estimates perturb the tied criterion values and the argmin picks
a single piece, and it keeps the sampler symmetric.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy import integrate

from .criterion import CriterionSpec
from .distributions import CovariateLaw, ErrorLaw, seed_stream
from .stump import Dataset1D, StumpModel

QUANTILE_LEVELS = (0.90, 0.95, 0.975, 0.99, 0.995)

# absolute slack for detecting exact walk-minimum ties through float rounding
TIE_TOL = 1e-9

_LAW_NORMAL, _LAW_T, _LAW_POWER = 0, 1, 2
_CRIT_L2, _CRIT_L1, _CRIT_HUBER = 0, 1, 2


@dataclass(frozen=True)
class StepLaw:
    """Jump-size law of the limiting process for a given criterion."""

    criterion: CriterionSpec
    delta: float
    error_law: ErrorLaw

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be positive")

    def sample(self, rng: np.random.Generator, size=None) -> np.ndarray:
        xi = self.error_law.sample(rng, size)
        return self.transform(xi)

    def transform(self, xi: np.ndarray) -> np.ndarray:
        d = self.delta
        if self.criterion.is_l2:
            return xi + 0.5 * d
        if self.criterion.is_l1:
            return np.abs(xi + d) - np.abs(xi)
        return self.criterion.loss(xi + d) - self.criterion.loss(xi)

    @property
    def bounded(self) -> bool:
        return not self.criterion.is_l2 or self.error_law.kind == "zero"

    @property
    def bound(self) -> float:
        """Almost-sure bound on |step| (inf for unbounded laws)."""
        if self.criterion.is_l2:
            return math.inf if self.error_law.kind != "zero" else 0.5 * self.delta
        if self.criterion.is_l1:
            return self.delta
        return (self.criterion.k + 1.0) * self.delta

    def drift(self, n_draws: int = 200_000, seed: int = 0) -> float:
        if self.criterion.is_l2:
            return 0.5 * self.delta  # symmetric error has mean zero
        rng = seed_stream(seed, 977)
        mu = float(np.mean(self.sample(rng, n_draws)))
        if not mu > 0:
            raise ValueError("step law must have positive drift")
        return mu


def default_stop_barrier(step: StepLaw, target: float = 1e-4, seed: int = 0) -> float:
    """Barrier height making a post-stop new minimum unlikely (< target).

    Bounded steps: Chernoff exponent theta solving E[exp(-theta * step)] = 1,
    estimated from a large batch of draws, gives P(future min < -B) <=
    exp(-theta B).  Unbounded (squared-error) steps: the expected number of
    future sub-minimum crossings is bounded by drift^{-1} times the
    integrated lower tail of the step law.
    """
    if step.error_law.kind == "zero":
        return max(1.0, step.delta)
    mu = step.drift(seed=seed)
    if step.bounded:
        rng = seed_stream(seed, 978)
        draws = step.sample(rng, 200_000)
        lo, hi = 1e-8, 1.0
        # E[exp(-theta step)] - 1 is negative near 0 (positive drift) and
        # grows without bound once theta weights the negative steps enough
        def chernoff(theta):
            return float(np.mean(np.exp(-theta * draws))) - 1.0
        if np.min(draws) >= 0:
            return max(4.0 * step.bound, 10.0 * mu)
        while chernoff(hi) < 0 and hi < 1e6:
            hi *= 2.0
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if chernoff(mid) < 0:
                lo = mid
            else:
                hi = mid
        theta = lo
        barrier = (math.log(1.0 / target) + math.log(10.0)) / theta
        return max(barrier, 4.0 * step.bound)

    def lower_tail(x):
        # P(step <= -x) = P(xi <= -(x + delta/2)) for symmetric xi
        return 0.5 * step.error_law.survival(x + 0.5 * step.delta)

    def future_min_prob(b):
        val, _ = integrate.quad(lambda u: float(lower_tail(u)), b, np.inf, limit=200)
        return val / mu

    b = 1.0
    while future_min_prob(b) > target and b < 1e7:
        b *= 2.0
    lo, hi = b / 2.0, b
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        if future_min_prob(mid) > target:
            lo = mid
        else:
            hi = mid
    return max(hi, 10.0 * mu)


@dataclass(frozen=True)
class CPPConfig:
    step: StepLaw
    intensity: float
    stop_barrier: float | None = None
    min_steps: int = 50

    def __post_init__(self):
        if not self.intensity > 0:
            raise ValueError("intensity must be positive")
        if self.stop_barrier is not None and not self.stop_barrier > 0:
            raise ValueError("stop_barrier must be positive")
        if self.min_steps < 1:
            raise ValueError("min_steps must be >= 1")


def _law_codes(law: ErrorLaw):
    if law.kind == "normal":
        return _LAW_NORMAL, 0.0, 1.0
    if law.kind == "t":
        return _LAW_T, float(law.nu), math.sqrt((law.nu - 2.0) / law.nu)
    if law.kind == "power":
        return _LAW_POWER, float(law.gamma), 1.0
    raise ValueError("unsupported error law for the walk kernel")


def _crit_codes(spec: CriterionSpec):
    if spec.is_l2:
        return _CRIT_L2, 0.0
    if spec.is_l1:
        return _CRIT_L1, 0.0
    return _CRIT_HUBER, float(spec.k)


@njit(cache=True)
def _htilde(x, k):
    ax = abs(x)
    if ax <= k:
        return (k + 1.0) / k * 0.5 * ax * ax
    return (k + 1.0) / k * k * (ax - 0.5 * k)


@njit(cache=True)
def _side_minima_kernel(
    gen,
    n_reps,
    barrier,
    min_steps,
    max_steps,
    law_code,
    law_p1,
    law_scale,
    crit_code,
    crit_k,
    delta,
    tie_tol,
    out_val,
    out_idx,
    out_cnt,
):
    for r in range(n_reps):
        s = 0.0
        best = np.inf
        bidx = 0
        cnt = 0
        t = 0
        while True:
            t += 1
            if t > max_steps:
                return r  # escape index; caller raises
            if law_code == 0:
                xi = gen.standard_normal()
            elif law_code == 1:
                z = gen.standard_normal()
                xi = z / np.sqrt(gen.chisquare(law_p1) / law_p1) * law_scale
            else:
                u = gen.random()
                if u < 1e-300:
                    u = 1e-300
                mag = (1.0 / u - 1.0) ** (1.0 / law_p1)
                xi = mag if gen.random() < 0.5 else -mag
            if crit_code == 0:
                step = xi + 0.5 * delta
            elif crit_code == 1:
                step = abs(xi + delta) - abs(xi)
            else:
                step = _htilde(xi + delta, crit_k) - _htilde(xi, crit_k)
            s += step
            if s < best - tie_tol:
                best = s
                bidx = t
                cnt = 1
            elif s <= best + tie_tol:
                # exact tie up to rounding: reservoir-sample one flat piece
                cnt += 1
                if s < best:
                    best = s
                if gen.random() * cnt < 1.0:
                    bidx = t
            if t >= min_steps and s - best > barrier:
                break
        out_val[r] = best
        out_idx[r] = bidx
        out_cnt[r] = cnt
    return -1


def _side_minima(step: StepLaw, n_reps: int, barrier: float, min_steps: int, rng, max_steps: int = 10**7):
    """Per-replicate (minimum over j >= 1, uniformly selected tied argmin
    index, tie count) of a one-sided walk with the given step law."""
    out_val = np.empty(n_reps)
    out_idx = np.empty(n_reps, dtype=np.int64)
    out_cnt = np.empty(n_reps, dtype=np.int64)
    if step.error_law.kind == "zero":
        # deterministic walk: first step is the minimum when negative
        s = float(step.transform(np.zeros(1))[0])
        out_val[:] = s
        out_idx[:] = 1
        out_cnt[:] = 1
        if s <= 0:
            raise RuntimeError("nonpositive drift suspected")
        return out_val, out_idx, out_cnt
    law_code, p1, scale = _law_codes(step.error_law)
    crit_code, crit_k = _crit_codes(step.criterion)
    bad = _side_minima_kernel(
        rng, n_reps, barrier, min_steps, max_steps,
        law_code, p1, scale, crit_code, crit_k, step.delta, TIE_TOL,
        out_val, out_idx, out_cnt,
    )
    if bad >= 0:
        raise RuntimeError("nonpositive drift suspected")
    return out_val, out_idx, out_cnt


def simulate_cpp_samples(config: CPPConfig, n_reps: int, seed: int) -> np.ndarray:
    """Batch of mid-argmin draws of the two-sided compound Poisson process.

    Value 0 at t = 0 competes with both side minima; on ties (which have
    positive probability for bounded-step laws) one minimizing flat piece
    is chosen uniformly at random among the tied pieces of both sides and
    the piece straddling zero.
    """
    barrier = config.stop_barrier
    if barrier is None:
        barrier = default_stop_barrier(config.step, seed=seed)
    val_r, idx_r, cnt_r = _side_minima(config.step, n_reps, barrier, config.min_steps, seed_stream(seed, 1))
    val_l, idx_l, cnt_l = _side_minima(config.step, n_reps, barrier, config.min_steps, seed_stream(seed, 2))
    trng = seed_stream(seed, 3)
    theta = 1.0 / config.intensity

    m = np.minimum(np.minimum(val_r, val_l), 0.0)
    nr = np.where(val_r <= m + TIE_TOL, cnt_r, 0)
    nl = np.where(val_l <= m + TIE_TOL, cnt_l, 0)
    nz = (m >= -TIE_TOL).astype(np.int64)
    pick = np.floor(trng.random(n_reps) * (nr + nl + nz)).astype(np.int64)
    win_r = pick < nr
    win_l = ~win_r & (pick < nr + nl)
    win_0 = ~(win_r | win_l)

    # fixed-size draws keep the stream layout independent of the outcome
    tau_r = trng.gamma(shape=np.maximum(idx_r, 1).astype(float), scale=theta)
    gap_r = trng.exponential(theta, n_reps)
    tau_l = trng.gamma(shape=np.maximum(idx_l, 1).astype(float), scale=theta)
    gap_l = trng.exponential(theta, n_reps)
    first_r = trng.exponential(theta, n_reps)
    first_l = trng.exponential(theta, n_reps)

    out = np.where(
        win_r,
        tau_r + 0.5 * gap_r,
        np.where(win_l, -(tau_l + 0.5 * gap_l), 0.5 * (first_r - first_l)),
    )
    return out


def simulate_cpp_midargmin(config: CPPConfig, seed: int) -> float:
    """One mid-argmin draw of the two-sided compound Poisson process."""
    return float(simulate_cpp_samples(config, 1, seed)[0])


def simulate_rw_minimizer(step: StepLaw, n_steps: int, seed: int) -> dict:
    """Index (first minimum) and value of the minimum of S_0..S_{n_steps}."""
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    rng = seed_stream(seed, 7)
    walk = np.concatenate(([0.0], np.cumsum(step.sample(rng, n_steps))))
    j = int(np.argmin(walk))
    return {"argmin_index": j, "min_value": float(walk[j])}


def simulate_rw_minimizers(step: StepLaw, n_steps: int, n_reps: int, seed: int) -> np.ndarray:
    """Vectorized batch of random-walk argmin indices."""
    rng = seed_stream(seed, 7)
    draws = step.sample(rng, (n_reps, n_steps))
    walks = np.concatenate((np.zeros((n_reps, 1)), np.cumsum(draws, axis=1)), axis=1)
    return np.argmin(walks, axis=1)


def simulate_cbp_midargmin(
    model: StumpModel,
    n: int,
    covariate: CovariateLaw,
    step: StepLaw,
    seed: int,
    n_reps: int = 1,
) -> np.ndarray:
    """Exact finite-n law of n*(dhat - d0) via the compound Binomial walk.

    Draws n covariates per replicate, walks the criterion increments
    outward from d0 in covariate order on each side, and returns the scaled
    midpoint of the minimizing flat piece.  This route never calls the
    estimator itself, so it serves as a distributional cross-check.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = seed_stream(seed, 11)
    out = np.empty(n_reps)
    block = max(1, min(n_reps, max(1, 2_000_000 // n)))
    d0 = model.d0
    done = 0
    while done < n_reps:
        b = min(block, n_reps - done)
        x = covariate.sample(rng, (b, n))
        xi = step.error_law.sample(rng, (b, n))
        steps = step.transform(xi)
        order = np.argsort(x, axis=1)
        xs = np.take_along_axis(x, order, axis=1)
        ss = np.take_along_axis(steps, order, axis=1)
        right = xs > d0
        # criterion relative to d0 on the j-th interval of sorted x:
        # right-side points enter once d passes them, left-side points
        # leave once d passes them
        inc_right = np.where(right, ss, 0.0)
        inc_left = np.where(~right, ss, 0.0)
        cum_r = np.concatenate((np.zeros((b, 1)), np.cumsum(inc_right, axis=1)), axis=1)
        cum_l = np.concatenate((np.zeros((b, 1)), np.cumsum(inc_left, axis=1)), axis=1)
        total_l = cum_l[:, -1][:, None]
        values = cum_r + (total_l - cum_l)
        j = np.argmin(values, axis=1)
        lo = np.where(j == 0, xs[:, 0], np.take_along_axis(xs, np.maximum(j - 1, 0)[:, None], axis=1).ravel())
        hi = np.where(j == n, xs[:, -1], np.take_along_axis(xs, np.minimum(j, n - 1)[:, None], axis=1).ravel())
        out[done : done + b] = n * (0.5 * (lo + hi) - d0)
        done += b
    return out


@dataclass(frozen=True)
class QuantileTable:
    mu: float
    criterion: CriterionSpec
    rows: dict  # law name -> quantile vector at QUANTILE_LEVELS
    replications: int
    seed: int
    levels: tuple = QUANTILE_LEVELS

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(
            f"# mu={self.mu:g} criterion={self.criterion.name} "
            f"replications={self.replications} seed={self.seed}\n"
        )
        buf.write("law,q90,q95,q975,q99,q995\n")
        for name, qs in self.rows.items():
            buf.write(name + "," + ",".join(f"{q:.6g}" for q in qs) + "\n")
        return buf.getvalue()


def quantile_table(
    mu: float,
    criterion: CriterionSpec,
    laws,
    replications: int,
    seed: int,
    intensity: float | None = None,
) -> QuantileTable:
    """Upper quantiles of the signed CPP mid-argmin, one row per error law.

    Default intensity is the standard normal design density at the origin,
    1/sqrt(2*pi).
    """
    if replications < 10**4:
        raise ValueError("replications must be >= 10^4")
    if intensity is None:
        intensity = 1.0 / math.sqrt(2.0 * math.pi)
    rows = {}
    for i, law in enumerate(laws):
        step = StepLaw(criterion, mu, law)
        config = CPPConfig(step, intensity=intensity)
        samples = simulate_cpp_samples(config, replications, seed_key(seed, i))
        rows[law.name] = np.quantile(samples, QUANTILE_LEVELS, method="inverted_cdf")
    return QuantileTable(mu=mu, criterion=criterion, rows=rows, replications=replications, seed=seed)


def seed_key(seed: int, index: int) -> int:
    """Stable per-row sub-seed (keeps rows independent of list order changes
    only through their index)."""
    return int(np.random.SeedSequence(seed, spawn_key=(index,)).generate_state(1)[0])


def tail_profile(samples, grid):
    """Empirical survival of |sample| on a positive increasing grid, with
    Wilson 95% half-widths."""
    samples = np.abs(np.asarray(samples, dtype=float))
    grid = np.asarray(grid, dtype=float)
    if grid.size and (np.any(grid <= 0) or np.any(np.diff(grid) <= 0)):
        raise ValueError("grid must be positive increasing")
    n = samples.size
    z = 1.959963984540054
    out = []
    for x in grid:
        k = int(np.sum(samples > x))
        phat = k / n
        denom = 1.0 + z * z / n
        half = z * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / denom
        out.append((float(x), phat, half))
    return out


def log_survival_slope(samples, n_points: int = 10, top_level: float = 5e-5):
    """Least-squares slope of log10 survival vs log10 x over the upper
    decade of the empirical tail of |samples|: the region between the
    (1 - 10*top_level)- and (1 - top_level)-quantiles, i.e. the deepest
    decade of survival probability the sample can resolve."""
    samples = np.abs(np.asarray(samples, dtype=float))
    x_lo = float(np.quantile(samples, 1.0 - 10.0 * top_level))
    x_hi = float(np.quantile(samples, 1.0 - top_level))
    if x_hi <= 0 or x_lo <= 0:
        raise ValueError("samples have no positive upper tail")
    grid = np.logspace(math.log10(x_lo), math.log10(x_hi), n_points)
    surv = np.array([np.mean(samples > g) for g in grid])
    keep = surv > 0
    lg_x = np.log10(grid[keep])
    lg_s = np.log10(surv[keep])
    slope = np.polyfit(lg_x, lg_s, 1)[0]
    return float(slope)


def rw_stay_negative_check(n: int, mu: float):
    """Exact enumeration over the 2^n paths of a Rademacher+drift walk:
    returns (P(max_{1<=i<=n} S_i < 0), (1/n) P(S_n < 0))."""
    if not 1 <= n <= 20:
        raise ValueError("n out of enumeration range")
    signs = np.array(np.meshgrid(*([[-1.0, 1.0]] * n), indexing="ij")).reshape(n, -1).T
    walks = np.cumsum(signs + mu, axis=1)
    lhs = float(np.mean(np.max(walks, axis=1) < 0))
    rhs = float(np.mean(walks[:, -1] < 0)) / n
    return lhs, rhs
