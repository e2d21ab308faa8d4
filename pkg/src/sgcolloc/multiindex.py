"""Monotone (downward-closed) multi-index sets.

Multi-indices are plain tuples of non-negative ints. A :class:`MultiIndexSet`
is an immutable value kept in lexicographic order, so iteration order is
reproducible.
"""

from __future__ import annotations

import bisect
from itertools import product
from typing import Iterable, Iterator, Tuple

MultiIndex = Tuple[int, ...]


def unit(dim: int, n: int) -> MultiIndex:
    return tuple(1 if k == n else 0 for k in range(dim))


def backward_neighbors(idx: MultiIndex) -> Iterator[MultiIndex]:
    for n, v in enumerate(idx):
        if v > 0:
            yield idx[:n] + (v - 1,) + idx[n + 1 :]


def forward_neighbors(idx: MultiIndex) -> Iterator[MultiIndex]:
    for n in range(len(idx)):
        yield idx[:n] + (idx[n] + 1,) + idx[n + 1 :]


class MultiIndexSet:
    """Immutable, lexicographically ordered set of multi-indices of one dimension."""

    __slots__ = ("dim", "_members", "_lookup")

    def __init__(self, dim: int, members: Iterable[MultiIndex] = ()):
        if dim < 1:
            raise ValueError("dimension must be >= 1")
        self.dim = dim
        lookup = set()
        for m in members:
            m = tuple(int(v) for v in m)
            if len(m) != dim:
                raise ValueError(f"multi-index {m} does not have dimension {dim}")
            if any(v < 0 for v in m):
                raise ValueError(f"multi-index {m} has a negative entry")
            lookup.add(m)
        self._lookup = frozenset(lookup)
        self._members = tuple(sorted(lookup))

    @classmethod
    def root(cls, dim: int) -> "MultiIndexSet":
        return cls(dim, [(0,) * dim])

    @classmethod
    def isotropic(cls, dim: int, level: int) -> "MultiIndexSet":
        """All indices with total level ``|l| <= level``."""
        if level < 0:
            raise ValueError("level must be >= 0")
        return cls(dim, _total_degree(dim, level))

    def __contains__(self, idx) -> bool:
        return tuple(idx) in self._lookup

    def __iter__(self) -> Iterator[MultiIndex]:
        return iter(self._members)

    def __len__(self) -> int:
        return len(self._members)

    def __eq__(self, other) -> bool:
        if isinstance(other, MultiIndexSet):
            return self.dim == other.dim and self._lookup == other._lookup
        return NotImplemented

    def __hash__(self):
        return hash((self.dim, self._lookup))

    def __repr__(self):
        return f"MultiIndexSet(dim={self.dim}, {list(self._members)})"

    @property
    def members(self) -> tuple:
        return self._members

    def _check(self, idx) -> MultiIndex:
        idx = tuple(int(v) for v in idx)
        if len(idx) != self.dim:
            raise ValueError(f"multi-index {idx} does not have dimension {self.dim}")
        return idx

    def union(self, others: Iterable[MultiIndex]) -> "MultiIndexSet":
        return MultiIndexSet(self.dim, list(self._members) + [self._check(o) for o in others])

    def add(self, idx: MultiIndex) -> "MultiIndexSet":
        idx = self._check(idx)
        if any(v < 0 for v in idx):
            raise ValueError(f"multi-index {idx} has a negative entry")
        if idx in self._lookup:
            return self
        out = MultiIndexSet.__new__(MultiIndexSet)
        out.dim = self.dim
        out._lookup = self._lookup | {idx}
        members = list(self._members)
        bisect.insort(members, idx)
        out._members = tuple(members)
        return out

    def is_monotone(self) -> bool:
        return all(b in self._lookup for m in self._members for b in backward_neighbors(m))

    def is_admissible(self, idx: MultiIndex) -> bool:
        """``idx`` is new and all its backward neighbours are present."""
        idx = self._check(idx)
        if idx in self._lookup:
            return False
        return all(b in self._lookup for b in backward_neighbors(idx))

    def newly_admissible(self, idx: MultiIndex) -> list:
        """Forward neighbours of a member ``idx`` that are admissible for this set."""
        return [f for f in forward_neighbors(tuple(idx))
                if f not in self._lookup and all(b in self._lookup for b in backward_neighbors(f))]

    def refinement_set(self) -> list:
        out = {f for m in self._members for f in forward_neighbors(m)}
        return sorted(out)

    def admissible_set(self) -> list:
        if not self._members:
            return [(0,) * self.dim]
        return [r for r in self.refinement_set() if self.is_admissible(r)]

    def max_levels(self) -> tuple:
        if not self._members:
            return (0,) * self.dim
        return tuple(max(m[n] for m in self._members) for n in range(self.dim))

    def to_list(self) -> list:
        return [list(m) for m in self._members]

    @classmethod
    def from_list(cls, dim: int, items) -> "MultiIndexSet":
        return cls(dim, [tuple(i) for i in items])


def _total_degree(dim: int, level: int) -> Iterator[MultiIndex]:
    if dim == 1:
        for v in range(level + 1):
            yield (v,)
        return
    for v in range(level + 1):
        for rest in _total_degree(dim - 1, level - v):
            yield (v,) + rest


def isotropic_set(dim: int, level: int) -> MultiIndexSet:
    return MultiIndexSet.isotropic(dim, level)


def refinement_set(s: MultiIndexSet) -> list:
    return s.refinement_set()


def admissible_set(s: MultiIndexSet) -> list:
    return s.admissible_set()


def box(upper: MultiIndex) -> list:
    """All multi-indices ``k <= upper`` componentwise."""
    return [tuple(k) for k in product(*(range(u + 1) for u in upper))]
