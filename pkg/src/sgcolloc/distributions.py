"""Bounded univariate densities and independent joint densities.

Only the uniform and the (shifted, scaled) beta families are supported. Both
live on a finite interval ``[a, b]`` and serve as the weight function for the
collocation nodes and quadrature weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import special, stats

UNIFORM = "uniform"
BETA = "beta"


@dataclass(frozen=True)
class BoundedDistribution:
    """Uniform or beta density supported on ``[a, b]``.

    Use :meth:`uniform` and :meth:`beta` rather than the raw constructor.
    The shape parameters are ignored for the uniform kind.
    """

    kind: str
    a: float
    b: float
    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        if self.kind not in (UNIFORM, BETA):
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        if not (np.isfinite(self.a) and np.isfinite(self.b)) or not self.a < self.b:
            raise ValueError(f"need finite bounds with a < b, got [{self.a}, {self.b}]")
        if self.kind == BETA and not (self.alpha > 0 and self.beta > 0):
            raise ValueError(f"beta shapes must be positive, got ({self.alpha}, {self.beta})")
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "beta", float(self.beta))

    @classmethod
    def uniform(cls, a: float, b: float) -> "BoundedDistribution":
        return cls(UNIFORM, a, b)

    @classmethod
    def beta_dist(cls, alpha: float, beta: float, a: float = 0.0, b: float = 1.0) -> "BoundedDistribution":
        return cls(BETA, a, b, alpha, beta)

    @property
    def width(self) -> float:
        return self.b - self.a

    @property
    def is_uniform(self) -> bool:
        return self.kind == UNIFORM

    def _log_norm(self) -> float:
        # log of B(alpha, beta) * (b - a)^(alpha + beta - 1)
        return special.betaln(self.alpha, self.beta) + (self.alpha + self.beta - 1.0) * math.log(self.width)

    def logpdf(self, y):
        """Log-density, ``-inf`` outside the support."""
        y = np.asarray(y, dtype=float)
        out = np.full(y.shape, -np.inf)
        if self.is_uniform:
            inside = (y >= self.a) & (y <= self.b)
            out[inside] = -math.log(self.width)
            return out
        inside = (y > self.a) & (y < self.b)
        yi = y[inside]
        out[inside] = (
            (self.alpha - 1.0) * np.log(yi - self.a)
            + (self.beta - 1.0) * np.log(self.b - yi)
            - self._log_norm()
        )
        # endpoint values follow the one-sided limit of the density
        for end, shape in ((self.a, self.alpha), (self.b, self.beta)):
            at_end = y == end
            if np.any(at_end):
                if shape > 1.0:
                    out[at_end] = -np.inf
                elif shape < 1.0:
                    out[at_end] = np.inf
                else:
                    other = self.beta if end == self.a else self.alpha
                    out[at_end] = (other - 1.0) * math.log(self.width) - self._log_norm()
        return out

    def pdf(self, y):
        """Density value(s); zero outside ``[a, b]``."""
        val = np.exp(self.logpdf(y))
        return float(val) if np.ndim(val) == 0 else val

    def cdf(self, y):
        if self.is_uniform:
            return np.clip((np.asarray(y, dtype=float) - self.a) / self.width, 0.0, 1.0)
        return stats.beta.cdf(y, self.alpha, self.beta, loc=self.a, scale=self.width)

    def mean(self) -> float:
        if self.is_uniform:
            return 0.5 * (self.a + self.b)
        return self.a + self.width * self.alpha / (self.alpha + self.beta)

    def variance(self) -> float:
        if self.is_uniform:
            return self.width**2 / 12.0
        s = self.alpha + self.beta
        return self.width**2 * self.alpha * self.beta / (s * s * (s + 1.0))

    def raw_moment(self, k: int) -> float:
        """Analytic ``E[Y^k]`` via the binomial expansion of ``a + (b - a) X``."""
        if k < 0:
            raise ValueError("moment order must be non-negative")
        total = 0.0
        for j in range(k + 1):
            total += math.comb(k, j) * self.a ** (k - j) * self.width**j * self._standard_moment(j)
        return total

    def _standard_moment(self, j: int) -> float:
        # moments of the density mapped onto [0, 1]
        if self.is_uniform:
            return 1.0 / (j + 1)
        m = 1.0
        for r in range(j):
            m *= (self.alpha + r) / (self.alpha + self.beta + r)
        return m

    def to_canonical(self, y):
        """Affine map ``[a, b] -> [-1, 1]``."""
        return (2.0 * np.asarray(y, dtype=float) - self.a - self.b) / self.width

    def from_canonical(self, t):
        """Affine map ``[-1, 1] -> [a, b]``; endpoints map exactly onto ``a`` and ``b``."""
        t = np.asarray(t, dtype=float)
        return np.clip(0.5 * (1.0 - t) * self.a + 0.5 * (1.0 + t) * self.b, self.a, self.b)

    def sample_from(self, rng: np.random.Generator, count: int) -> np.ndarray:
        if self.is_uniform:
            return rng.uniform(self.a, self.b, size=count)
        return self.a + self.width * rng.beta(self.alpha, self.beta, size=count)

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "a": self.a, "b": self.b}
        if self.kind == BETA:
            d.update(alpha=self.alpha, beta=self.beta)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "BoundedDistribution":
        kind = str(d["kind"]).lower()
        if kind == UNIFORM:
            return cls.uniform(d["a"], d["b"])
        if kind == BETA:
            return cls.beta_dist(d["alpha"], d["beta"], d["a"], d["b"])
        raise ValueError(f"unknown distribution kind {d['kind']!r}")


def pdf(dist: BoundedDistribution, y):
    return dist.pdf(y)


def analytic_mean(dist: BoundedDistribution) -> float:
    return dist.mean()


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator: ``(seed, stream)`` fully determines the draws."""
    seq = np.random.SeedSequence(int(seed), spawn_key=(int(stream),))
    return np.random.Generator(np.random.Philox(seq))


@dataclass(frozen=True)
class JointDistribution:
    """Product of independent bounded marginals."""

    marginals: tuple

    def __init__(self, marginals: Iterable[BoundedDistribution]):
        marginals = tuple(marginals)
        if not marginals:
            raise ValueError("need at least one marginal")
        object.__setattr__(self, "marginals", marginals)

    @classmethod
    def iid(cls, dist: BoundedDistribution, dim: int) -> "JointDistribution":
        return cls([dist] * dim)

    @property
    def dim(self) -> int:
        return len(self.marginals)

    @property
    def bounds(self) -> np.ndarray:
        return np.array([[m.a, m.b] for m in self.marginals])

    def __len__(self):
        return self.dim

    def __getitem__(self, n) -> BoundedDistribution:
        return self.marginals[n]

    def pdf(self, y) -> float:
        y = np.asarray(y, dtype=float)
        if y.shape[-1] != self.dim:
            raise ValueError(f"expected {self.dim} coordinates, got {y.shape[-1]}")
        out = self.marginals[0].pdf(y[..., 0])
        for n in range(1, self.dim):
            out = out * self.marginals[n].pdf(y[..., n])
        return out

    def mean(self) -> np.ndarray:
        return np.array([m.mean() for m in self.marginals])

    def sample(self, count: int, seed: int, stream: int = 0) -> np.ndarray:
        """Draw ``count`` points, shape ``(count, dim)``; deterministic per (seed, stream)."""
        if count < 1:
            raise ValueError("sample count must be >= 1")
        rng = make_rng(seed, stream)
        cols = [m.sample_from(rng, count) for m in self.marginals]
        return np.column_stack(cols)

    def to_list(self) -> list:
        return [m.to_dict() for m in self.marginals]

    @classmethod
    def from_list(cls, items: Sequence[dict]) -> "JointDistribution":
        return cls([BoundedDistribution.from_dict(d) for d in items])


def sample(joint: JointDistribution, count: int, seed: int, stream: int = 0) -> np.ndarray:
    return joint.sample(count, seed, stream)
