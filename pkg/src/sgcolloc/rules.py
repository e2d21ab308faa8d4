"""Nested univariate collocation rules: Clenshaw-Curtis and weighted Leja.

Every rule is stored as one nested *sequence* of nodes on the canonical
interval ``[-1, 1]``; level ``l`` uses the first ``m(l)`` entries. For
Clenshaw-Curtis the sequence is the midpoint, then the two endpoints, then the
new Chebyshev extrema of each level in ascending order. For Leja it is the
greedy insertion order. A node's position in the sequence is its integer
identity, which the sparse grid uses for exact point deduplication.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import optimize, special

from .barycentric import barycentric_weights, lagrange_basis
from .distributions import BoundedDistribution

CLENSHAW_CURTIS = "cc"
LEJA = "leja"
FAMILIES = (CLENSHAW_CURTIS, LEJA)

_FAMILY_ALIASES = {
    "cc": CLENSHAW_CURTIS,
    "clenshaw-curtis": CLENSHAW_CURTIS,
    "clenshawcurtis": CLENSHAW_CURTIS,
    "leja": LEJA,
}

LEJA_GRID_SIZE = 10_001
LEJA_TIE_TOL = 1e-12


def normalize_family(name: str) -> str:
    try:
        return _FAMILY_ALIASES[name.lower()]
    except KeyError:
        raise ValueError(f"unknown rule family {name!r}; expected one of {FAMILIES}") from None


@dataclass(frozen=True)
class QuadratureLevel:
    level: int
    nodes: np.ndarray
    weights: np.ndarray


# --------------------------------------------------------------------------
# Gauss rules (internal reference integrator)


@lru_cache(maxsize=256)
def _gauss_canonical(kind: str, alpha: float, beta: float, n: int):
    if kind == "uniform":
        t, w = special.roots_legendre(n)
    else:
        # density on [-1, 1] is proportional to (1 + t)^(alpha-1) (1 - t)^(beta-1)
        t, w = special.roots_jacobi(n, beta - 1.0, alpha - 1.0)
    w = w / w.sum()
    t.setflags(write=False)
    w.setflags(write=False)
    return t, w


def gauss_rule(dist: BoundedDistribution, n: int, canonical: bool = False):
    """``n``-point Gauss rule for the density ``dist`` (weights sum to 1).

    Legendre for uniform, Jacobi for beta; exact for polynomials of degree
    ``2n - 1`` against the density.
    """
    t, w = _gauss_canonical(dist.kind, dist.alpha, dist.beta, int(n))
    if canonical:
        return t, w
    return dist.from_canonical(t), w


# --------------------------------------------------------------------------
# Clenshaw-Curtis


def cc_count(level: int) -> int:
    return 1 if level == 0 else 2**level + 1


def cc_nodes(level: int) -> np.ndarray:
    """Sorted Clenshaw-Curtis nodes of ``level`` on ``[-1, 1]``."""
    if level < 0:
        raise ValueError("level must be >= 0")
    if level == 0:
        return np.zeros(1)
    n = 2**level
    k = np.arange(n, -1, -1)
    x = np.cos(np.pi * k / n)
    # exact symmetry and exact zero
    x = 0.5 * (x - x[::-1])
    x[n // 2] = 0.0
    return x


def _cc_sequence(top_level: int) -> np.ndarray:
    if top_level == 0:
        return np.zeros(1)
    seq = [np.zeros(1), np.array([-1.0, 1.0])]
    for lev in range(2, top_level + 1):
        # odd positions of the sorted level are exactly the new nodes
        seq.append(cc_nodes(lev)[1::2])
    return np.concatenate(seq)


def scale_nodes(nodes, a: float, b: float) -> np.ndarray:
    """Affine map from ``[-1, 1]`` onto ``[a, b]``."""
    t = np.asarray(nodes, dtype=float)
    return 0.5 * (1.0 - t) * a + 0.5 * (1.0 + t) * b


def chebyshev_moments(dist: BoundedDistribution, count: int) -> np.ndarray:
    """``gamma_k = int T_k(t) rho(t) dt`` over ``[-1, 1]`` for ``k < count``."""
    if count < 1:
        raise ValueError("count must be >= 1")
    t, w = gauss_rule(dist, count // 2 + 2, canonical=True)
    k = np.arange(count)
    T = np.cos(k[:, None] * np.arccos(np.clip(t, -1.0, 1.0))[None, :])
    gam = T @ w
    gam[0] = 1.0
    return gam


def cc_weights_from_moments(level: int, dist: BoundedDistribution) -> np.ndarray:
    """Clenshaw-Curtis weights for ``dist`` from Chebyshev moments.

    Integrates the discrete Chebyshev expansion of the interpolant term by
    term. Returned in the sorted node order of :func:`cc_nodes`.
    """
    if level == 0:
        return np.ones(1)
    n = 2**level
    gam = chebyshev_moments(dist, n + 1)
    gam_h = gam.copy()
    gam_h[0] *= 0.5
    gam_h[n] *= 0.5
    j = np.arange(n + 1)
    C = np.cos(np.pi * np.outer(j, j) / n)
    w = (2.0 / n) * (C @ gam_h)
    w[0] *= 0.5
    w[n] *= 0.5
    # cos(j pi / n) runs from +1 down to -1; flip to ascending
    return w[::-1].copy()


def _interpolatory_weights(canon_nodes: np.ndarray, dist: BoundedDistribution) -> np.ndarray:
    n = canon_nodes.size
    if n == 1:
        return np.ones(1)
    t, w = gauss_rule(dist, n + 1, canonical=True)
    basis = lagrange_basis(canon_nodes, t)
    return w @ basis


def cc_weights(level: int, dist: BoundedDistribution) -> QuadratureLevel:
    """Nodes (on ``[dist.a, dist.b]``) and density-adapted weights of a CC level."""
    x = cc_nodes(level)
    w = _interpolatory_weights(x, dist)
    return QuadratureLevel(level, dist.from_canonical(x), w)


# --------------------------------------------------------------------------
# Weighted Leja


def _canonical_logdensity(dist: BoundedDistribution, t: np.ndarray) -> np.ndarray:
    # unnormalized; additive constants do not move the argmax
    if dist.is_uniform:
        return np.zeros_like(t)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (dist.alpha - 1.0) * np.log1p(t) + (dist.beta - 1.0) * np.log1p(-t)
    if dist.alpha == 1.0:
        out = np.where(t == -1.0, (dist.beta - 1.0) * math.log(2.0), out)
    if dist.beta == 1.0:
        out = np.where(t == 1.0, (dist.alpha - 1.0) * math.log(2.0), out)
    return out


def _leja_objective(dist: BoundedDistribution, nodes: np.ndarray, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = 0.5 * _canonical_logdensity(dist, t)
        if nodes.size:
            val = val + np.sum(np.log(np.abs(t[..., None] - nodes)), axis=-1)
    return np.where(np.isnan(val), -np.inf, val)


def _leja_start(dist: BoundedDistribution) -> float:
    """Canonical argmax of sqrt(rho); flat densities start at the right end."""
    al, be = dist.alpha, dist.beta
    if dist.is_uniform or (al == 1.0 and be == 1.0):
        return 1.0
    if al < 1.0 or (al == 1.0 and be > 1.0):
        return -1.0
    if be <= 1.0:
        return 1.0
    return 2.0 * (al - 1.0) / (al + be - 2.0) - 1.0


_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_max(f, lo: float, hi: float, tol: float):
    c = hi - _INVPHI * (hi - lo)
    d = lo + _INVPHI * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > tol:
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - _INVPHI * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _INVPHI * (hi - lo)
            fd = f(d)
    x = 0.5 * (lo + hi)
    return x, f(x)


def _leja_slope(dist: BoundedDistribution, nodes: np.ndarray, t: float) -> float:
    d = float(np.sum(1.0 / (t - nodes))) if nodes.size else 0.0
    if not dist.is_uniform:
        d += 0.5 * ((dist.alpha - 1.0) / (1.0 + t) - (dist.beta - 1.0) / (1.0 - t))
    return d


def _refine_peak(dist, nodes, lo, hi):
    """Locate an interior maximum in ``[lo, hi]`` to near machine precision."""

    def f(x):
        return float(_leja_objective(dist, nodes, np.array(x)))

    inside = nodes[(nodes > lo) & (nodes < hi)] if nodes.size else nodes
    if inside.size == 0 and -1.0 < lo and hi < 1.0:
        slo, shi = _leja_slope(dist, nodes, lo), _leja_slope(dist, nodes, hi)
        if slo > 0.0 > shi:
            # the log objective is flat at its peak; its slope is not
            x = optimize.brentq(lambda t: _leja_slope(dist, nodes, t), lo, hi, xtol=1e-16, rtol=8.9e-16)
            return x, f(x)
    return _golden_max(f, lo, hi, 2e-13)


def _next_leja(dist: BoundedDistribution, nodes: np.ndarray) -> float:
    grid = np.linspace(-1.0, 1.0, LEJA_GRID_SIZE)
    vals = _leja_objective(dist, nodes, grid)
    best = vals.max()
    if best == -np.inf:
        raise AssertionError("weighted Leja objective is -inf on the whole grid")
    left = np.concatenate(([-np.inf], vals[:-1]))
    right = np.concatenate((vals[1:], [-np.inf]))
    peaks = np.nonzero((vals >= left) & (vals >= right) & (vals > best - 0.1))[0]

    cands = []
    for i in peaks:
        lo = grid[max(i - 1, 0)]
        hi = grid[min(i + 1, grid.size - 1)]
        x, fx = _refine_peak(dist, nodes, lo, hi)
        if fx > vals[i]:
            cands.append((fx, x))
        else:
            cands.append((vals[i], grid[i]))
    top = max(c[0] for c in cands)
    # ties (relative 1e-12 on the product == absolute on its log) go to the smaller node
    return float(min(x for fx, x in cands if fx >= top - LEJA_TIE_TOL))


def leja_extend(nodes, dist: BoundedDistribution, target_count: int) -> tuple:
    """Extend a canonical weighted Leja sequence to ``target_count`` nodes.

    ``nodes`` are on ``[-1, 1]``; existing entries are returned unchanged.
    """
    seq = [float(x) for x in nodes]
    if target_count < len(seq):
        raise ValueError("target_count must not be smaller than the current node count")
    if not seq and target_count > 0:
        seq.append(_leja_start(dist))
    while len(seq) < target_count:
        seq.append(_next_leja(dist, np.array(seq)))
    return tuple(seq)


def leja_weights(nodes, dist: BoundedDistribution, count: int | None = None) -> QuadratureLevel:
    """Interpolatory weights on the first ``count`` canonical Leja nodes."""
    x = np.asarray(nodes, dtype=float)
    if count is None:
        count = x.size
    if count > x.size:
        raise ValueError("count exceeds the number of available nodes")
    x = x[:count]
    return QuadratureLevel(count - 1, dist.from_canonical(x), _interpolatory_weights(x, dist))


# --------------------------------------------------------------------------


class UnivariateRule:
    """Nested node sequence plus per-level quadrature weights for one density.

    Nodes and weights are computed on demand and memoized; the observable
    state (the sequence prefix) never changes once produced.
    """

    def __init__(self, family: str, dist: BoundedDistribution):
        self.family = normalize_family(family)
        self.dist = dist
        self._lock = threading.Lock()
        self._seq = np.zeros(0)
        self._weights: dict[int, np.ndarray] = {}
        self._bary: dict[int, np.ndarray] = {}

    def __repr__(self):
        return f"UnivariateRule({self.family!r}, {self.dist!r})"

    def count(self, level: int) -> int:
        """Level-to-nodes map ``m(level)``."""
        if level < 0:
            raise ValueError("level must be >= 0")
        return cc_count(level) if self.family == CLENSHAW_CURTIS else level + 1

    def _ensure(self, n: int):
        if self._seq.size >= n:
            return
        with self._lock:
            if self._seq.size >= n:
                return
            if self.family == CLENSHAW_CURTIS:
                lev = 0
                while cc_count(lev) < n:
                    lev += 1
                seq = _cc_sequence(lev)
            else:
                seq = np.array(_leja_cached(self.dist, n))
            seq.setflags(write=False)
            self._seq = seq

    def canonical_sequence(self, n: int) -> np.ndarray:
        self._ensure(n)
        return self._seq[:n]

    def canonical_nodes(self, level: int) -> np.ndarray:
        return self.canonical_sequence(self.count(level))

    def nodes(self, level: int) -> np.ndarray:
        """Physical nodes of ``level`` in sequence (not sorted) order."""
        return self.dist.from_canonical(self.canonical_nodes(level))

    def node(self, index: int) -> float:
        return float(self.dist.from_canonical(self.canonical_sequence(index + 1)[index]))

    def weights(self, level: int) -> np.ndarray:
        """Quadrature weights aligned with :meth:`nodes`."""
        w = self._weights.get(level)
        if w is None:
            x = self.canonical_nodes(level)
            w = _interpolatory_weights(np.asarray(x), self.dist)
            w.setflags(write=False)
            self._weights[level] = w
        return w

    def basis(self, level: int, t) -> np.ndarray:
        """Lagrange basis of ``level`` at canonical points ``t``, shape ``t.shape + (m,)``."""
        bw = self._bary.get(level)
        if bw is None:
            bw = barycentric_weights(self.canonical_nodes(level))
            self._bary[level] = bw
        return lagrange_basis(self.canonical_nodes(level), t, bw)

    def quadrature(self, level: int) -> QuadratureLevel:
        return QuadratureLevel(level, self.nodes(level), self.weights(level))

    def to_dict(self) -> dict:
        return {"family": self.family, "distribution": self.dist.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "UnivariateRule":
        return cls(d["family"], BoundedDistribution.from_dict(d["distribution"]))


_leja_store: dict = {}
_leja_lock = threading.Lock()


def _leja_key(dist: BoundedDistribution):
    # canonical sequence depends on the shape only, not on [a, b]
    return ("uniform",) if dist.is_uniform else ("beta", dist.alpha, dist.beta)


def _leja_cached(dist: BoundedDistribution, n: int) -> tuple:
    key = _leja_key(dist)
    with _leja_lock:
        seq = _leja_store.get(key, ())
        if len(seq) < n:
            seq = leja_extend(seq, dist, n)
            _leja_store[key] = seq
    return seq[:n]
