"""Change-plane estimation: Y jumps across a hyperplane through the origin.

The criterion depends on a direction d only through the sign pattern of
X @ d, so exact small-scale minimization enumerates cells of the central
hyperplane arrangement {d : x_i @ d = 0}: every full-dimensional cell has
an extreme ray spanned by p-1 data points, so perturbing those normals over
all sign combinations visits every cell.  Larger problems use a local
search that flips the data point closest to the candidate boundary.

Sparse fits follow structural risk minimization: for each support size m,
fit the best m-sparse plane, then pick m by training loss plus a penalty
proportional to the VC dimension m*log(e*p/m).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .criterion import CriterionSpec, location_mestimate
from .distributions import CovariateLaw, ErrorLaw, seed_stream

MAX_EXACT_CANDIDATES = 2_000_000


@dataclass(frozen=True)
class PlaneModel:
    alpha0: float
    beta0: float
    d0: np.ndarray
    sparsity: int | None = None

    def __post_init__(self):
        d0 = np.asarray(self.d0, dtype=float)
        if not math.isclose(float(np.linalg.norm(d0)), 1.0, abs_tol=1e-9):
            raise ValueError("d0 must be a unit vector")
        if self.sparsity is not None and int(np.count_nonzero(d0)) > self.sparsity:
            raise ValueError("d0 has more nonzeros than the declared sparsity")
        object.__setattr__(self, "d0", d0)

    @property
    def p(self) -> int:
        return self.d0.size


@dataclass(frozen=True)
class PlaneFit:
    alpha_hat: float
    beta_hat: float
    d_hat: np.ndarray
    criterion_value: float
    selected_m: int | None = None
    support: tuple[int, ...] = ()


@dataclass(frozen=True)
class PenaltyConfig:
    kind: str  # "huber-family" or "squared-error"
    kappa: float = 2.0
    delta_exp: float = 0.5
    xi_norm_estimate: float = 0.0

    def __post_init__(self):
        if self.kind not in ("huber-family", "squared-error"):
            raise ValueError("kind must be 'huber-family' or 'squared-error'")
        if not self.kappa > 0:
            raise ValueError("kappa must be positive")


def wedge_prob(d1, d2, covariate: CovariateLaw, mc_budget: int = 100_000, seed: int = 0) -> float:
    """P(sign(X @ d1) != sign(X @ d2)); analytic angle/pi for the spherical
    Gaussian, Monte Carlo otherwise."""
    d1 = np.asarray(d1, dtype=float)
    d2 = np.asarray(d2, dtype=float)
    if d1.shape != d2.shape:
        raise ValueError("dimension mismatch")
    if covariate.kind == "sphere_gauss":
        if covariate.p != d1.size:
            raise ValueError("dimension mismatch")
        c = float(np.clip(d1 @ d2 / (np.linalg.norm(d1) * np.linalg.norm(d2)), -1.0, 1.0))
        return math.acos(c) / math.pi
    rng = seed_stream(seed, 13)
    x = covariate.sample(rng, mc_budget)
    x = np.atleast_2d(x).reshape(mc_budget, -1)
    if x.shape[1] != d1.size:
        raise ValueError("dimension mismatch")
    return float(np.mean((x @ d1 > 0) != (x @ d2 > 0)))


def dist_semimetric(fit, truth: PlaneModel, covariate: CovariateLaw, mc_budget: int = 100_000, seed: int = 0) -> float:
    """sqrt((a1-a0)^2 + (b1-b0)^2 + wedge mass between the two planes)."""
    alpha, beta, d = fit
    w = wedge_prob(np.asarray(d, float), truth.d0, covariate, mc_budget=mc_budget, seed=seed)
    return math.sqrt((alpha - truth.alpha0) ** 2 + (beta - truth.beta0) ** 2 + w)


def _pattern_criterion(y, left_mask, spec: CriterionSpec):
    """Profiled criterion for a side assignment; None if a side is empty."""
    n_left = int(left_mask.sum())
    if n_left == 0 or n_left == y.size:
        return None
    yl = y[left_mask]
    yr = y[~left_mask]
    a = location_mestimate(yl, spec)
    b = location_mestimate(yr, spec)
    value = float(np.sum(spec.loss(yl - a)) + np.sum(spec.loss(yr - b))) / y.size
    return value, a, b


def _canonicalize(d, alpha, beta, x, y, spec):
    """Flip d so the fitted level on the non-positive side exceeds the other."""
    if alpha >= beta:
        return d / np.linalg.norm(d), alpha, beta
    d = -d
    left = x @ d <= 0
    res = _pattern_criterion(y, left, spec)
    a, b = (res[1], res[2]) if res is not None else (beta, alpha)
    return d / np.linalg.norm(d), a, b


def _exact_candidates_2d(x):
    """One direction per cell of the circular arrangement: midpoints of the
    arcs cut by the normals of the data points."""
    # d is critical when d is orthogonal to some x_i
    crit = np.mod(np.arctan2(x[:, 1], x[:, 0]) + 0.5 * math.pi, math.pi)
    crit = np.unique(crit)
    ext = np.concatenate((crit, [crit[0] + math.pi]))
    mids = 0.5 * (ext[:-1] + ext[1:])
    return np.column_stack((np.cos(mids), np.sin(mids)))


def _exact_candidates(x):
    """Candidate directions visiting every sign-pattern cell (n > p)."""
    n, p = x.shape
    if p == 2:
        return _exact_candidates_2d(x)
    n_cand = math.comb(n, p - 1) * 2 ** (p - 1)
    if n_cand > MAX_EXACT_CANDIDATES:
        raise ValueError("too many candidates for exact enumeration")
    cands = []
    signs = np.array(list(itertools.product((-1.0, 1.0), repeat=p - 1)))
    for subset in itertools.combinations(range(n), p - 1):
        xb = x[list(subset)]
        # null direction of the p-1 points
        _, _, vt = np.linalg.svd(xb)
        v = vt[-1]
        margins = x @ v
        others = np.delete(np.abs(margins), list(subset))
        others = others[others > 0]
        if others.size == 0:
            continue
        # nudge each spanning point to either side without flipping the rest
        w = np.linalg.pinv(xb).T  # rows satisfy x_i @ w_j = delta_ij
        wn = np.max(np.abs(x @ w.T))
        eps = 0.45 * float(np.min(others)) / max(wn, 1e-300)
        for s in signs:
            cands.append(v + eps * (s @ w))
    return np.asarray(cands)


def _local_search(x, y, spec, d, max_iter=200, n_probe=None):
    """Greedy cell walk: try flipping the few points nearest the boundary."""
    n, p = x.shape
    if n_probe is None:
        n_probe = min(n, max(4 * p + 8, 24))
    d = d / np.linalg.norm(d)
    best = _pattern_criterion(y, x @ d <= 0, spec)
    if best is None:
        # all points on one side; the flip loop below will fix that
        best = (math.inf, 0.0, 0.0)
    value = best[0]
    norms2 = np.einsum("ij,ij->i", x, x)
    for _ in range(max_iter):
        margins = x @ d
        order = np.argsort(np.abs(margins))[:n_probe]
        improved = False
        for i in order:
            if norms2[i] == 0:
                continue
            # smallest rotation that moves point i just across the boundary
            cand = d - (margins[i] * (1.0 + 1e-7) + math.copysign(1e-12, margins[i])) * x[i] / norms2[i]
            nrm = np.linalg.norm(cand)
            if nrm == 0:
                continue
            cand /= nrm
            res = _pattern_criterion(y, x @ cand <= 0, spec)
            if res is not None and res[0] < value - 1e-13:
                d, value, best = cand, res[0], res
                improved = True
                break
        if not improved:
            break
    return d, best


def fit_plane(data, spec: CriterionSpec, search=("exact",), seed: int = 0) -> PlaneFit:
    """Minimize the profiled criterion over hyperplanes through the origin.

    search is ("exact",) for cell enumeration (requires n > p) or
    ("restarts", count) for local search from random unit starts.  The
    fitted direction is canonicalized so alpha_hat >= beta_hat.
    """
    x, y = np.asarray(data[0], dtype=float), np.asarray(data[1], dtype=float)
    n, p = x.shape
    if p < 2:
        raise ValueError("p must be >= 2")
    mode = search[0]
    if mode == "exact":
        if n <= p:
            raise ValueError("exact enumeration needs n > p")
        try:
            cands = _exact_candidates(x)
        except ValueError:
            mode = "restarts"
            search = ("restarts", 50)
    if mode == "exact":
        best = None
        for d in cands:
            res = _pattern_criterion(y, x @ d <= 0, spec)
            if res is None:
                continue
            if best is None or res[0] < best[1][0] - 1e-13:
                best = (d, res)
        if best is None:
            raise ValueError("degenerate design")
        d, (value, a, b) = best
    else:
        count = int(search[1])
        rng = seed_stream(seed, 17)
        best = None
        moment = x.T @ y
        for start in range(count):
            if start < 2 and np.linalg.norm(moment) > 0:
                # moment starts: +/- X'y are near-converged for centered designs
                d0 = moment if start == 0 else -moment
            elif best is not None and start % 2 == 1:
                # basin hop: perturb the incumbent direction
                d0 = best[0] + 0.3 * rng.standard_normal(p)
            else:
                d0 = rng.standard_normal(p)
            d0 /= np.linalg.norm(d0)
            d_loc, res = _local_search(x, y, spec, d0)
            if res is None or not np.isfinite(res[0]):
                continue
            if best is None or res[0] < best[1][0]:
                best = (d_loc, res)
        if best is None:
            raise ValueError("degenerate design")
        d, (value, a, b) = best
    d, a, b = _canonicalize(np.asarray(d, float), a, b, x, y, spec)
    return PlaneFit(alpha_hat=a, beta_hat=b, d_hat=d, criterion_value=value,
                    support=tuple(np.nonzero(d)[0]))


def two_shot_refit(data, d_hat, spec: CriterionSpec) -> tuple[float, float]:
    """Re-estimate the levels with the plane frozen at d_hat."""
    x, y = np.asarray(data[0], dtype=float), np.asarray(data[1], dtype=float)
    left = x @ np.asarray(d_hat, float) <= 0
    if not left.any() or left.all():
        raise ValueError("plane separates nothing")
    return location_mestimate(y[left], spec), location_mestimate(y[~left], spec)


def vc_dimension(m: int, p: int) -> float:
    return m * math.log(math.e * p / m)


def penalty(m: int, n: int, p: int, config: PenaltyConfig) -> float:
    """Complexity penalty for model size m.

    huber-family: kappa * V_m log(n/V_m) / n with V_m = m log(ep/m);
    squared-error: V_m (log p)^delta ||xi|| log(n/V_m) / n with
    V_m = m (log p)^(1+delta).
    """
    if not 1 <= m <= p:
        raise ValueError("need 1 <= m <= p")
    if config.kind == "huber-family":
        vm = vc_dimension(m, p)
        if vm >= n:
            raise ValueError("model too complex for n")
        return config.kappa * vm * math.log(n / vm) / n
    vm = m * math.log(p) ** (1.0 + config.delta_exp)
    if vm >= n:
        raise ValueError("model too complex for n")
    return vm * math.log(p) ** config.delta_exp * config.xi_norm_estimate * math.log(n / vm) / n


def xi_norm_from_law(law: ErrorLaw, n: int, kind: str = "l2", replications: int = 400, seed: int = 0) -> float:
    """Simulated E[max |xi_i|] ("l1") or sqrt(E[max xi_i^2]) ("l2") over n draws."""
    rng = seed_stream(seed, 19)
    maxima = np.array([np.max(np.abs(law.sample(rng, n))) for _ in range(replications)])
    if kind == "l1":
        return float(np.mean(maxima))
    return float(math.sqrt(np.mean(maxima**2)))


def _fit_support(x, y, support, spec, seed, restarts=8, warm=None):
    """Best plane restricted to the given support (restarts + optional warm start)."""
    sub = x[:, list(support)]
    n, m = sub.shape
    if m == 1:
        res = _pattern_criterion(y, sub[:, 0] <= 0, spec)
        res_neg = _pattern_criterion(y, -sub[:, 0] <= 0, spec)
        best, d1 = None, None
        if res is not None:
            best, d1 = res, np.array([1.0])
        if res_neg is not None and (best is None or res_neg[0] < best[0]):
            best, d1 = res_neg, np.array([-1.0])
        if best is None:
            return None
        return d1, best
    rng = seed_stream(seed, 23, *support)
    best = None
    # moment start: for centered designs E[x e(x' d0 <= 0)] is anti-parallel
    # to d0, so +/- X'y are near-converged initial directions
    moment = sub.T @ y
    starts = [moment, -moment]
    if warm is not None:
        starts.insert(0, warm)
    starts.extend(rng.standard_normal(m) for _ in range(restarts))
    for d0 in starts:
        nrm = np.linalg.norm(d0)
        if nrm == 0:
            continue
        d_loc, res = _local_search(sub, y, spec, d0 / nrm)
        if res is None or not np.isfinite(res[0]):
            continue
        if best is None or res[0] < best[1][0]:
            best = (d_loc, res)
    return best


def _greedy_supports(x, y, spec, m_max, seed):
    """Greedy forward path with one local-swap pass per size; yields
    (m, train criterion, support, fit) for each support size."""
    n, p = x.shape
    support: list[int] = []
    warm = None
    for m in range(1, m_max + 1):
        remaining = [j for j in range(p) if j not in support]
        if m == 1:
            scored = []
            for j in remaining:
                res = _fit_support(x, y, (j,), spec, seed)
                if res is not None:
                    scored.append((res[1][0], j, res))
            scored.sort(key=lambda t: t[0])
            _, j_best, res = scored[0]
            support = [j_best]
            fit = res
        else:
            # rank candidate coordinates by how well they separate the
            # current residual classes, then refit the best few
            resid = _residual_proxy(x, y, support, fit, spec)
            scores = np.abs(x[:, remaining].T @ resid)
            order = np.argsort(scores)[::-1][: min(6, len(remaining))]
            best = None
            for idx in order:
                j = remaining[idx]
                cand_support = tuple(support + [j])
                w = None
                if warm is not None:
                    w = np.append(warm, 1e-3)
                res = _fit_support(x, y, cand_support, spec, seed, restarts=0, warm=w)
                if res is not None and (best is None or res[1][0] < best[1][1][0]):
                    best = (j, res)
            if best is None:
                break
            support = support + [best[0]]
            fit = best[1]
            # one swap pass: try replacing each support coordinate
            fit, support = _swap_pass(x, y, support, fit, spec, seed)
        warm = fit[0]
        yield m, fit[1][0], tuple(sorted(support)), fit


def _residual_proxy(x, y, support, fit, spec):
    d, (value, a, b) = fit
    sub = x[:, support]
    pred = np.where(sub @ d <= 0, a, b)
    return y - pred


def _swap_pass(x, y, support, fit, spec, seed):
    n, p = x.shape
    value = fit[1][0]
    for i in list(support):
        outside = [j for j in range(p) if j not in support]
        resid = _residual_proxy(x, y, support, fit, spec)
        scores = np.abs(x[:, outside].T @ resid)
        j = outside[int(np.argmax(scores))]
        cand = tuple(sorted(set(support) - {i} | {j}))
        res = _fit_support(x, y, cand, spec, seed, restarts=0)
        if res is not None and res[1][0] < value - 1e-12:
            support = list(cand)
            fit = res
            value = res[1][0]
    return fit, support


def fit_sparse_plane(data, spec: CriterionSpec, config: PenaltyConfig, search=None, seed: int = 0) -> PlaneFit:
    """Structural-risk-minimizing sparse fit.

    For each support size m up to min(p, n / (4 log p)), finds the best
    m-sparse plane (exhaustive over supports for p <= 15, greedy forward
    selection with swaps otherwise) and selects m by penalized training
    loss, then refits the levels with the plane frozen.
    """
    x, y = np.asarray(data[0], dtype=float), np.asarray(data[1], dtype=float)
    n, p = x.shape
    m_max = min(p, max(1, int(n / (4.0 * math.log(max(p, 2))))))

    def exhaustive():
        for m in range(1, m_max + 1):
            best = None
            for support in itertools.combinations(range(p), m):
                res = _fit_support(x, y, support, spec, seed)
                if res is not None and (best is None or res[1][0] < best[0]):
                    best = (res[1][0], support, res)
            if best is not None:
                yield m, best[0], best[1], best[2]

    fits = exhaustive() if p <= 15 else _greedy_supports(x, y, spec, m_max, seed)
    best = None
    best_score = math.inf
    stale = 0
    for m, train, support, fit in fits:
        pen = penalty(m, n, p, config)
        if pen > best_score:
            # training loss is nonnegative and the penalty increases with m,
            # so no larger model can beat the incumbent
            break
        score = train + pen
        if score < best_score - 1e-15:
            best, best_score = (m, train, support, fit), score
            stale = 0
        else:
            # stop the greedy path once the penalized score has failed to
            # improve for several consecutive sizes
            stale += 1
            if p > 15 and stale >= 6:
                break
    if best is None:
        raise ValueError("degenerate design")
    best_m, train, support, (d_sub, (value, a, b)) = best
    if p > 15:
        # polish the winning support with a full restart budget
        res = _fit_support(x, y, support, spec, seed)
        if res is not None and res[1][0] < value:
            d_sub, (value, a, b) = res[0], res[1]
    d = np.zeros(p)
    d[list(support)] = d_sub
    d, a, b = _canonicalize(d, a, b, x, y, spec)
    a2, b2 = two_shot_refit((x, y), d, spec)
    return PlaneFit(alpha_hat=a2, beta_hat=b2, d_hat=d, criterion_value=value,
                    selected_m=best_m, support=tuple(sorted(support)))
