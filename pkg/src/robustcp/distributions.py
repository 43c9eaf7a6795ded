"""Error and covariate laws with exact samplers and analytic tails.

Error laws are symmetric about 0: the standard normal, the standardized
Student-t (rescaled to unit variance), and a symmetric power-tail law with
P(|xi| > x) = 1/(1 + x^gamma).  Covariate laws cover the one-dimensional
designs and the spherical Gaussian used for change planes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats


def seed_stream(seed: int, *keys: int) -> np.random.Generator:
    """Deterministic substream keyed by (seed, keys).

    The same (seed, keys) always yields the same generator, independent of
    call order or scheduling, so replicate r of experiment e can always
    consume the same stream.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.default_rng(ss)


@dataclass(frozen=True)
class ErrorLaw:
    """Symmetric error distribution.

    kind is one of "normal", "t" (standardized, unit variance, requires
    nu > 2), "power" (P(|xi| > x) = 1/(1 + x^gamma), gamma > 0) or "zero"
    (point mass at 0, for deterministic-walk tests).
    """

    kind: str
    nu: float | None = None
    gamma: float | None = None

    def __post_init__(self):
        if self.kind == "t":
            if self.nu is None or self.nu <= 2:
                raise ValueError("invalid law parameter: need nu > 2")
        elif self.kind == "power":
            if self.gamma is None or self.gamma <= 0:
                raise ValueError("invalid law parameter: need gamma > 0")
        elif self.kind not in ("normal", "zero"):
            raise ValueError(f"invalid law parameter: unknown kind {self.kind!r}")

    @classmethod
    def standard_normal(cls) -> "ErrorLaw":
        return cls("normal")

    @classmethod
    def standardized_t(cls, nu: float) -> "ErrorLaw":
        return cls("t", nu=float(nu))

    @classmethod
    def power_tail(cls, gamma: float) -> "ErrorLaw":
        return cls("power", gamma=float(gamma))

    @classmethod
    def degenerate(cls) -> "ErrorLaw":
        return cls("zero")

    @property
    def name(self) -> str:
        if self.kind == "normal":
            return "normal"
        if self.kind == "t":
            nu = self.nu
            return f"t{int(nu)}" if float(nu).is_integer() else f"t{nu}"
        if self.kind == "zero":
            return "zero"
        return f"power{self.gamma:g}"

    @property
    def _t_scale(self) -> float:
        return math.sqrt((self.nu - 2.0) / self.nu)

    def sample(self, rng: np.random.Generator, size=None) -> np.ndarray:
        if self.kind == "normal":
            return rng.standard_normal(size)
        if self.kind == "t":
            return rng.standard_t(self.nu, size) * self._t_scale
        if self.kind == "zero":
            return np.zeros(() if size is None else size)
        # |xi| = (1/U - 1)^(1/gamma), independent fair sign
        u = rng.random(size)
        u = np.maximum(u, 1e-300)
        mag = (1.0 / u - 1.0)
        if self.gamma == 2.0:
            mag = np.sqrt(mag)
        elif self.gamma != 1.0:
            mag = mag ** (1.0 / self.gamma)
        sign = np.where(rng.random(size) < 0.5, -1.0, 1.0)
        return sign * mag

    def survival(self, x) -> np.ndarray:
        """P(|xi| > x) for x >= 0."""
        x = np.asarray(x, dtype=float)
        if self.kind == "normal":
            return 2.0 * stats.norm.sf(x)
        if self.kind == "t":
            return 2.0 * stats.t.sf(x / self._t_scale, self.nu)
        if self.kind == "zero":
            return np.where(x >= 0, 0.0, 1.0) * 1.0
        return 1.0 / (1.0 + x ** self.gamma)

    def cdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "normal":
            return stats.norm.cdf(x)
        if self.kind == "t":
            return stats.t.cdf(x / self._t_scale, self.nu)
        if self.kind == "zero":
            return (x >= 0).astype(float)
        ax = np.abs(x)
        half_tail = 0.5 / (1.0 + ax ** self.gamma)
        return np.where(x >= 0, 1.0 - half_tail, half_tail)

    def density(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "normal":
            return stats.norm.pdf(x)
        if self.kind == "t":
            return stats.t.pdf(x / self._t_scale, self.nu) / self._t_scale
        if self.kind == "zero":
            raise ValueError("point-mass law has no density")
        g = self.gamma
        ax = np.abs(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            dens = g * ax ** (g - 1.0) / (2.0 * (1.0 + ax ** g) ** 2)
        # limit at 0: 0 for g > 1, g/2 at g = 1, +inf for g < 1
        if g > 1:
            dens = np.where(ax == 0, 0.0, dens)
        elif g == 1:
            dens = np.where(ax == 0, 0.5, dens)
        else:
            dens = np.where(ax == 0, np.inf, dens)
        return dens


@dataclass(frozen=True)
class CovariateLaw:
    """Design distribution: "normal1d", "uniform" on (a, b), or
    "sphere_gauss" (standard Gaussian in dimension p)."""

    kind: str
    a: float = -1.0
    b: float = 1.0
    p: int = 1

    def __post_init__(self):
        if self.kind == "uniform" and not self.a < self.b:
            raise ValueError("invalid law parameter: need a < b")
        if self.kind == "sphere_gauss" and self.p < 1:
            raise ValueError("invalid law parameter: need p >= 1")
        if self.kind not in ("normal1d", "uniform", "sphere_gauss"):
            raise ValueError(f"invalid law parameter: unknown kind {self.kind!r}")

    @classmethod
    def standard_normal_1d(cls) -> "CovariateLaw":
        return cls("normal1d")

    @classmethod
    def uniform(cls, a: float, b: float) -> "CovariateLaw":
        return cls("uniform", a=float(a), b=float(b))

    @classmethod
    def spherical_gaussian(cls, p: int) -> "CovariateLaw":
        return cls("sphere_gauss", p=int(p))

    @property
    def dim(self) -> int:
        return self.p if self.kind == "sphere_gauss" else 1

    def sample(self, rng: np.random.Generator, size=None) -> np.ndarray:
        if self.kind == "normal1d":
            return rng.standard_normal(size)
        if self.kind == "uniform":
            return rng.uniform(self.a, self.b, size)
        if size is None:
            return rng.standard_normal(self.p)
        if np.isscalar(size):
            return rng.standard_normal((size, self.p))
        return rng.standard_normal(tuple(size) + (self.p,))

    def density_at(self, x) -> float:
        if self.kind == "normal1d":
            return float(stats.norm.pdf(x))
        if self.kind == "uniform":
            x = float(x)
            return 1.0 / (self.b - self.a) if self.a <= x <= self.b else 0.0
        x = np.asarray(x, dtype=float)
        return float(np.exp(-0.5 * x @ x) / (2 * math.pi) ** (self.p / 2))

    def cdf(self, x) -> np.ndarray:
        if self.kind == "normal1d":
            return stats.norm.cdf(x)
        if self.kind == "uniform":
            return np.clip((np.asarray(x, float) - self.a) / (self.b - self.a), 0.0, 1.0)
        raise ValueError("cdf is only defined for one-dimensional laws")
