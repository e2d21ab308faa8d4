"""Tensor-product and sparse-grid interpolation in hierarchical surplus form.

A grid point is identified by its *key*: the tuple of per-dimension positions
in the nested node sequences. Keys are exact integers, so overlapping tensor
grids are merged without comparing floating-point coordinates.
"""

from __future__ import annotations

from itertools import product
from typing import Sequence

import numpy as np

from .barycentric import lagrange_basis
from .distributions import JointDistribution
from .multiindex import MultiIndexSet
from .rules import UnivariateRule

# upper bound on the size of the (samples x points) basis block per chunk
_CHUNK_ENTRIES = 4_000_000


def make_rules(family, joint: JointDistribution) -> list:
    """One rule per marginal; ``family`` is a name or a per-dimension list."""
    if isinstance(family, str):
        family = [family] * joint.dim
    if len(family) != joint.dim:
        raise ValueError("need one rule family per dimension")
    return [UnivariateRule(f, d) for f, d in zip(family, joint.marginals)]


def tensor_keys(rules: Sequence[UnivariateRule], level) -> np.ndarray:
    """All point keys of the tensor grid ``Z_level``, lexicographic, shape (P, N)."""
    shape = tuple(r.count(l) for r, l in zip(rules, level))
    return np.indices(shape).reshape(len(shape), -1).T


def new_keys(rules: Sequence[UnivariateRule], level) -> np.ndarray:
    """Keys of ``Z_level`` not contained in any tensor grid strictly below ``level``."""
    ranges = [np.arange(r.count(l - 1) if l > 0 else 0, r.count(l)) for r, l in zip(rules, level)]
    mesh = np.meshgrid(*ranges, indexing="ij")
    return np.stack([m.reshape(-1) for m in mesh], axis=1)


def keys_to_points(rules: Sequence[UnivariateRule], keys: np.ndarray) -> np.ndarray:
    keys = np.asarray(keys, dtype=int).reshape(-1, len(rules))
    cols = []
    for n, r in enumerate(rules):
        seq = r.canonical_sequence(int(keys[:, n].max()) + 1 if keys.size else 1)
        cols.append(r.dist.from_canonical(seq[keys[:, n]]))
    return np.column_stack(cols) if cols else np.zeros((0, 0))


def tensor_interp_eval(rules: Sequence[UnivariateRule], level, values, y) -> np.ndarray:
    """Full tensor-product Lagrange interpolant at ``y``.

    ``values`` is either a mapping ``key -> value`` covering the whole grid or
    an array in the lexicographic order of :func:`tensor_keys`. Evaluated by
    contracting one dimension at a time with the univariate basis.
    """
    shape = tuple(r.count(l) for r, l in zip(rules, level))
    if isinstance(values, dict):
        keys = tensor_keys(rules, level)
        try:
            vals = np.array([values[tuple(int(v) for v in k)] for k in keys], dtype=float)
        except KeyError as exc:
            raise KeyError(f"missing grid value for point {exc.args[0]}") from None
    else:
        vals = np.asarray(values, dtype=float)
    tens = vals.reshape(shape)
    y = np.atleast_2d(np.asarray(y, dtype=float))
    out = np.empty(y.shape[0])
    for s in range(y.shape[0]):
        t = tens
        for n, r in enumerate(rules):
            nodes = r.canonical_nodes(level[n])
            b = lagrange_basis(nodes, r.dist.to_canonical(y[s, n]))
            t = np.tensordot(b, t, axes=([0], [0]))
        out[s] = t
    return out


def tensor_quadrature(rules: Sequence[UnivariateRule], level, values) -> float:
    """Tensor-product quadrature of grid values (lexicographic order)."""
    shape = tuple(r.count(l) for r, l in zip(rules, level))
    t = np.asarray(values, dtype=float).reshape(shape)
    for n, r in enumerate(rules):
        t = np.tensordot(r.weights(level[n]), t, axes=([0], [0]))
    return float(t)


def error_indicator(surpluses) -> float:
    """Mean absolute hierarchical surplus of a candidate index."""
    s = np.asarray(surpluses, dtype=float)
    if s.size == 0:
        raise AssertionError("an admissible index must contribute at least one new point")
    return float(np.mean(np.abs(s)))


class SparseSurrogate:
    """Sparse interpolant ``sum_l Delta_l[q]`` stored as hierarchical surpluses.

    Each stored point belongs to the multi-index that first introduced it and
    carries that index's surplus. Evaluation sums ``s * prod_n l_n(y_n)`` over
    all points, with each univariate basis taken at the owning index's level.
    """

    def __init__(self, rules: Sequence[UnivariateRule]):
        self.rules = list(rules)
        self.dim = len(self.rules)
        self.index_set = MultiIndexSet(self.dim)
        self._row: dict = {}
        self._keys = np.zeros((0, self.dim), dtype=int)
        self._owner = np.zeros((0, self.dim), dtype=int)
        self._y = np.zeros((0, self.dim))
        self._q = np.zeros(0)
        self._s = np.zeros(0)
        self._w = np.zeros(0)
        self._blocks: dict = {}
        # evaluation layout: per dimension, the levels in use and the column of
        # each point inside the concatenated basis table
        self._levels = [[] for _ in range(self.dim)]
        self._offsets = [{} for _ in range(self.dim)]
        self._width = [0] * self.dim
        self._cols = np.zeros((0, self.dim), dtype=int)

    # -- construction ------------------------------------------------------

    @classmethod
    def for_distribution(cls, family, joint: JointDistribution) -> "SparseSurrogate":
        return cls(make_rules(family, joint))

    def __len__(self):
        return self._q.size

    @property
    def num_points(self) -> int:
        return self._q.size

    def new_points(self, level):
        """Keys and coordinates of ``Z_level \\ Z_Lambda`` for an admissible ``level``."""
        level = tuple(int(v) for v in level)
        if not self.index_set.is_admissible(level):
            raise ValueError(f"multi-index {level} is not admissible for the current index set")
        keys = new_keys(self.rules, level)
        return keys, keys_to_points(self.rules, keys)

    def surpluses_for(self, level, values, points=None) -> np.ndarray:
        """Surpluses ``q - I_Lambda[q]`` at the new points of ``level`` (no mutation)."""
        if points is None:
            _, points = self.new_points(level)
        values = np.asarray(values, dtype=float)
        if values.shape != (points.shape[0],):
            raise ValueError("need exactly one model value per new point")
        if not self.num_points:
            return values.copy()
        return values - self.evaluate(points)

    def add_index(self, level, values, surpluses=None) -> np.ndarray:
        """Insert an admissible index given the model values at its new points.

        ``values`` follow the order of :meth:`new_points`. Surpluses may be
        passed in when they were computed earlier against an index set to
        which ``level`` was already admissible; otherwise they are computed
        here. Returns the surpluses of the new points.
        """
        level = tuple(int(v) for v in level)
        keys, points = self.new_points(level)
        values = np.asarray(values, dtype=float)
        if surpluses is None:
            surpluses = self.surpluses_for(level, values, points)
        surpluses = np.asarray(surpluses, dtype=float)
        if surpluses.shape != values.shape or values.shape != (keys.shape[0],):
            raise ValueError("values/surpluses do not match the new points of the index")
        first = self.num_points
        for i, k in enumerate(map(tuple, keys.tolist())):
            if k in self._row:
                raise AssertionError(f"point {k} already present; index set not monotone?")
            self._row[k] = first + i
        cols = np.empty_like(keys)
        for n, r in enumerate(self.rules):
            off = self._offsets[n].get(level[n])
            if off is None:
                off = self._offsets[n][level[n]] = self._width[n]
                self._levels[n].append(level[n])
                self._width[n] += r.count(level[n])
            cols[:, n] = off + keys[:, n]
        self._keys = np.concatenate([self._keys, keys])
        self._owner = np.concatenate([self._owner, np.tile(level, (keys.shape[0], 1))])
        self._cols = np.concatenate([self._cols, cols])
        self._y = np.concatenate([self._y, points])
        self._q = np.concatenate([self._q, values])
        self._s = np.concatenate([self._s, surpluses])
        self._blocks[level] = np.arange(first, self.num_points)
        self.index_set = self.index_set.add(level)
        self._accumulate_delta_weights(level)
        return surpluses

    def _rows(self, keys: np.ndarray) -> np.ndarray:
        return np.fromiter(map(self._row.__getitem__, map(tuple, keys.tolist())), dtype=int, count=keys.shape[0])

    def _accumulate_delta_weights(self, level):
        # Delta_l = sum over z in {0,1}^N of (-1)^|z| times the tensor rule at l - z.
        # Nested ordering puts level l-1 first, so the sum factorizes into an
        # outer product of per-dimension weight differences on Z_l.
        tw = np.ones(1)
        for n, r in enumerate(self.rules):
            d = np.array(r.weights(level[n]), dtype=float)
            if level[n] > 0:
                d[: r.count(level[n] - 1)] -= r.weights(level[n] - 1)
            tw = np.multiply.outer(tw, d).reshape(-1)
        w = np.zeros(self.num_points)
        w[: self._w.size] = self._w
        np.add.at(w, self._rows(tensor_keys(self.rules, level)), tw)
        self._w = w

    # -- access -------------------------------------------------------------

    @property
    def keys(self) -> np.ndarray:
        return self._keys.copy()

    @property
    def points(self) -> np.ndarray:
        return self._y.copy()

    @property
    def values(self) -> np.ndarray:
        return self._q.copy()

    @property
    def surpluses(self) -> np.ndarray:
        return self._s.copy()

    @property
    def owners(self) -> np.ndarray:
        """Multi-index that introduced each point."""
        return self._owner.copy()

    def block(self, level):
        """Keys and surpluses contributed by one multi-index."""
        rows = self._blocks[tuple(level)]
        return self._keys[rows].copy(), self._s[rows].copy()

    def value_at_key(self, key) -> float:
        return float(self._q[self._row[tuple(key)]])

    # -- evaluation ---------------------------------------------------------

    def _basis_tables(self, y: np.ndarray):
        tables = []
        for n, r in enumerate(self.rules):
            t = r.dist.to_canonical(y[:, n])
            tab = np.empty((y.shape[0], self._width[n]))
            for lev in self._levels[n]:
                off = self._offsets[n][lev]
                tab[:, off : off + r.count(lev)] = r.basis(lev, t)
            tables.append(tab)
        return tables

    def evaluate(self, y) -> np.ndarray:
        """Surrogate values at ``y`` of shape (N,) or (S, N)."""
        y = np.asarray(y, dtype=float)
        single = y.ndim == 1
        y = np.atleast_2d(y)
        if y.shape[1] != self.dim:
            raise ValueError(f"expected points with {self.dim} coordinates, got {y.shape[1]}")
        out = np.zeros(y.shape[0])
        if self.num_points:
            cols, s = self._cols, self._s
            step = max(1, _CHUNK_ENTRIES // s.size)
            for lo in range(0, y.shape[0], step):
                tables = self._basis_tables(y[lo : lo + step])
                prod_ = tables[0][:, cols[:, 0]]
                for n in range(1, self.dim):
                    prod_ *= tables[n][:, cols[:, n]]
                out[lo : lo + step] = prod_ @ s
        return float(out[0]) if single else out

    __call__ = evaluate

    def block_value(self, level, y) -> np.ndarray:
        """Contribution ``Delta_level[q](y)`` of one stored index at points ``y`` (S, N).

        Summing the blocks of all indices gives :meth:`evaluate` up to
        round-off; used to track a running prediction cheaply.
        """
        y = np.atleast_2d(np.asarray(y, dtype=float))
        level = tuple(level)
        rows = self._blocks[level]
        keys, s = self._keys[rows], self._s[rows]
        out = np.empty(y.shape[0])
        step = max(1, _CHUNK_ENTRIES // s.size)
        for lo in range(0, y.shape[0], step):
            prod_ = None
            for n, r in enumerate(self.rules):
                b = r.basis(level[n], r.dist.to_canonical(y[lo : lo + step, n]))[:, keys[:, n]]
                prod_ = b if prod_ is None else prod_ * b
            out[lo : lo + step] = prod_ @ s
        return out

    # -- quadrature ---------------------------------------------------------

    def combination_coefficients(self) -> dict:
        """Coefficient of each tensor rule once every ``Delta_l`` is expanded.

        ``Delta_l`` is the signed sum of the tensor operators at ``l - z`` for
        ``z`` in ``{0, 1}^N``; collecting terms gives
        ``c_k = sum_{z : k + z in Lambda} (-1)^|z|``.
        """
        coeffs = {}
        zs = list(product((0, 1), repeat=self.dim))
        for k in self.index_set:
            c = 0
            for z in zs:
                if tuple(a + b for a, b in zip(k, z)) in self.index_set:
                    c += -1 if sum(z) % 2 else 1
            if c:
                coeffs[k] = c
        return coeffs

    def quadrature_weights(self) -> np.ndarray:
        """One weight per stored point (row order of :attr:`points`).

        Maintained incrementally: each insertion adds the signed tensor rules
        of its difference operator.
        """
        return self._w.copy()

    def combination_quadrature_weights(self) -> np.ndarray:
        """Same weights assembled in one pass from :meth:`combination_coefficients`."""
        w = np.zeros(self.num_points)
        for k, c in self.combination_coefficients().items():
            tw = np.ones(1)
            for n, r in enumerate(self.rules):
                tw = np.multiply.outer(tw, r.weights(k[n])).reshape(-1)
            np.add.at(w, self._rows(tensor_keys(self.rules, k)), c * tw)
        return w

    def expectation_from_surpluses(self) -> float:
        """``sum_k s_k E[L_k]`` with ``E[L_k]`` the product of univariate weights."""
        total = 0.0
        for level, rows in self._blocks.items():
            wl = [r.weights(level[n]) for n, r in enumerate(self.rules)]
            for rr in rows:
                key = self._keys[rr]
                wk = 1.0
                for n in range(self.dim):
                    wk *= wl[n][key[n]]
                total += self._s[rr] * wk
        return total

    # -- serialization --------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "dimensions": self.dim,
            "rules": [r.to_dict() for r in self.rules],
            "index_set": self.index_set.to_list(),
            "insertion_order": [list(level) for level in self._blocks],
            "points": [
                {"key": list(k), "level": list(o), "y": [float(v) for v in y], "q": q, "surplus": s}
                for k, o, y, q, s in zip(self._keys.tolist(), self._owner.tolist(), self._y.tolist(), self._q.tolist(), self._s.tolist())
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SparseSurrogate":
        rules = [UnivariateRule.from_dict(r) for r in d["rules"]]
        sur = cls(rules)
        if len(rules) != d["dimensions"]:
            raise ValueError("rule count does not match dimensions")
        by_level: dict = {}
        for p in d["points"]:
            by_level.setdefault(tuple(p["level"]), []).append(p)
        for level in d["insertion_order"]:
            level = tuple(level)
            pts = by_level.get(level, [])
            keys, _ = sur.new_points(level)
            lookup = {tuple(p["key"]): p for p in pts}
            ordered = [lookup[tuple(int(v) for v in k)] for k in keys]
            sur.add_index(level, [p["q"] for p in ordered], [p["surplus"] for p in ordered])
        if sur.index_set.to_list() != [list(m) for m in MultiIndexSet.from_list(sur.dim, d["index_set"])]:
            raise ValueError("index set in document does not match its points")
        return sur


def sparse_eval(surrogate: SparseSurrogate, y):
    return surrogate.evaluate(y)


def sparse_quadrature_weights(surrogate: SparseSurrogate) -> np.ndarray:
    return surrogate.quadrature_weights()


def build_from_index_set(rules, index_set: MultiIndexSet, model) -> SparseSurrogate:
    """Non-adaptive construction: insert a monotone set in lexicographic order.

    Lexicographic order visits every backward neighbour first, so each
    insertion is admissible.
    """
    if not index_set.is_monotone():
        raise ValueError("index set must be monotone")
    sur = SparseSurrogate(rules)
    for level in index_set:
        _, pts = sur.new_points(level)
        sur.add_index(level, np.array([model(p) for p in pts], dtype=float))
    return sur
