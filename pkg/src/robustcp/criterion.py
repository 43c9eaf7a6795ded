"""Scaled Huber criterion family interpolating absolute and squared error.

The loss with shape parameter k is ((k+1)/k) * (x^2/2 on |x| <= k,
k(|x| - k/2) outside); k = 0 is absolute deviation, k = inf is squared
error (x^2/2).  The linear branch uses k/2 (not k^2/2) so that the two
branches agree at |x| = k.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import ErrorLaw


@dataclass(frozen=True)
class CriterionSpec:
    """Member of the scaled Huber family, k in [0, inf].

    k = 0 and k = inf are exact distinguished values (absolute deviation
    and squared error), not numerical approximations.
    """

    k: float

    def __post_init__(self):
        if not self.k >= 0:
            raise ValueError("k must be >= 0")

    @classmethod
    def l1(cls) -> "CriterionSpec":
        return cls(0.0)

    @classmethod
    def l2(cls) -> "CriterionSpec":
        return cls(math.inf)

    @classmethod
    def huber(cls, k: float) -> "CriterionSpec":
        k = float(k)
        if not 0 < k < math.inf:
            raise ValueError("huber k must be finite and positive")
        return cls(k)

    @property
    def is_l1(self) -> bool:
        return self.k == 0.0

    @property
    def is_l2(self) -> bool:
        return math.isinf(self.k)

    @property
    def name(self) -> str:
        if self.is_l1:
            return "l1"
        if self.is_l2:
            return "l2"
        return f"huber{self.k:g}"

    @classmethod
    def parse(cls, text: str) -> "CriterionSpec":
        text = text.strip().lower()
        if text == "l1":
            return cls.l1()
        if text == "l2":
            return cls.l2()
        if text.startswith("huber"):
            return cls.huber(float(text[5:].lstrip(":")))
        return cls.huber(float(text))

    def loss(self, x) -> np.ndarray:
        """Pointwise criterion value; even, convex, loss(0) = 0."""
        x = np.abs(np.asarray(x, dtype=float))
        if self.is_l1:
            return x
        if self.is_l2:
            return 0.5 * x * x
        k = self.k
        scale = (k + 1.0) / k
        return scale * np.where(x <= k, 0.5 * x * x, k * (x - 0.5 * k))

    def score(self, x) -> np.ndarray:
        """Derivative of the loss (sign convention: d loss / d x)."""
        x = np.asarray(x, dtype=float)
        if self.is_l1:
            return np.sign(x)
        if self.is_l2:
            return x
        k = self.k
        return (k + 1.0) / k * np.clip(x, -k, k)


def loss(spec: CriterionSpec, x) -> np.ndarray:
    return spec.loss(x)


def location_mestimate(values, spec: CriterionSpec) -> float:
    """Argmin over a of sum loss(v_i - a).

    Mean for k = inf, midpoint of the median interval for k = 0 (so the
    estimate is unique on even-length segments), and for finite k the root
    of the monotone score equation found by bisection to 1e-10.
    """
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("empty segment")
    if spec.is_l2:
        return float(np.mean(v))
    if spec.is_l1:
        return float(np.median(v))
    lo, hi = float(np.min(v)), float(np.max(v))
    if lo == hi:
        return lo
    # score_sum(a) = sum psi(v - a) is nonincreasing in a, positive at lo,
    # negative at hi, so the bracket always contains the root
    while hi - lo > 1e-10:
        mid = 0.5 * (lo + hi)
        if np.sum(spec.score(v - mid)) >= 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class CurvatureCheck:
    lhs: float
    rhs: float
    lhs_se: float
    rhs_se: float


def curvature_margin(
    spec: CriterionSpec,
    mu: float,
    error_law: ErrorLaw,
    replications: int,
    seed: int,
    l1_delta: float | None = None,
) -> CurvatureCheck:
    """Monte Carlo check of the quadratic curvature lower bound.

    lhs estimates E[loss(xi + mu) - loss(xi)]; rhs estimates
    (mu^2/2) P(-k <= xi <= 0) from the same draws.  For k = 0 the bound
    uses the analytic density at the origin and requires |mu| <= l1_delta
    (the caller's radius on which the density stays >= f(0)/2).
    """
    mu = float(mu)
    k = spec.k
    if spec.is_l1:
        if l1_delta is None or abs(mu) > l1_delta:
            raise ValueError("mu out of lemma range")
    elif not spec.is_l2 and abs(mu) >= 2.0 * k:
        raise ValueError("mu out of lemma range")

    rng = np.random.default_rng(np.random.SeedSequence(seed))
    xi = error_law.sample(rng, int(replications))
    diffs = spec.loss(xi + mu) - spec.loss(xi)
    lhs = float(np.mean(diffs))
    lhs_se = float(np.std(diffs, ddof=1) / math.sqrt(diffs.size))

    if spec.is_l1:
        rhs = 0.5 * mu * mu * float(error_law.density(0.0))
        rhs_se = 0.0
    else:
        ind = ((xi >= -k) & (xi <= 0.0)).astype(float)
        rhs = 0.5 * mu * mu * float(np.mean(ind))
        rhs_se = 0.5 * mu * mu * float(np.std(ind, ddof=1) / math.sqrt(ind.size))
    return CurvatureCheck(lhs=lhs, rhs=rhs, lhs_se=lhs_se, rhs_se=rhs_se)
