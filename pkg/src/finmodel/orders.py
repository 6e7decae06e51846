"""Finite posets, directedness, and filters on finite index sets."""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Hashable, Iterable, Iterator


class OrderError(ValueError):
    pass


@dataclass(frozen=True)
class Poset:
    """A finite partial order given by its full ``<=`` relation.

    ``elements`` keeps the declaration order, which fixes the iteration
    order of everything derived from the poset.
    """

    elements: tuple
    leq: frozenset = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        object.__setattr__(self, "leq", frozenset(self.leq))
        elems = set(self.elements)
        if len(elems) != len(self.elements):
            raise OrderError("repeated poset elements")
        for a, b in self.leq:
            if a not in elems or b not in elems:
                raise OrderError(f"pair ({a!r}, {b!r}) mentions an unknown element")
        for a in self.elements:
            if (a, a) not in self.leq:
                raise OrderError(f"not reflexive at {a!r}")
        for a, b in self.leq:
            if a != b and (b, a) in self.leq:
                raise OrderError(f"not antisymmetric: {a!r} and {b!r}")
        for a, b in self.leq:
            for c in self.elements:
                if (b, c) in self.leq and (a, c) not in self.leq:
                    raise OrderError(f"not transitive: {a!r} <= {b!r} <= {c!r}")

    @classmethod
    def from_relation(cls, elements: Iterable[Hashable], pairs: Iterable[tuple] = ()) -> "Poset":
        """Reflexive-transitive closure of ``pairs`` (must come out antisymmetric)."""
        elements = tuple(elements)
        rel = {(a, a) for a in elements} | {tuple(p) for p in pairs}
        # Warshall
        for k in elements:
            below = [a for a in elements if (a, k) in rel]
            above = [b for b in elements if (k, b) in rel]
            for a in below:
                for b in above:
                    rel.add((a, b))
        return cls(elements, frozenset(rel))

    @classmethod
    def chain(cls, elements: Iterable[Hashable]) -> "Poset":
        elements = tuple(elements)
        return cls.from_relation(elements, zip(elements, elements[1:]))

    @classmethod
    def antichain(cls, elements: Iterable[Hashable]) -> "Poset":
        return cls.from_relation(elements)

    def le(self, a, b) -> bool:
        return (a, b) in self.leq

    def __contains__(self, i):
        return i in set(self.elements)

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def _known(self, i):
        if i not in self.elements:
            raise OrderError(f"unknown index {i!r}")

    def covers(self) -> list:
        """Pairs ``(a, b)`` with ``a < b`` and nothing strictly between."""
        out = []
        for a, b in sorted(self.leq, key=lambda p: (self.elements.index(p[0]), self.elements.index(p[1]))):
            if a == b:
                continue
            if not any(c not in (a, b) and self.le(a, c) and self.le(c, b) for c in self.elements):
                out.append((a, b))
        return out

    def opposite(self) -> "Poset":
        return Poset(self.elements, frozenset((b, a) for a, b in self.leq))


def up_set(p: Poset, i) -> frozenset:
    p._known(i)
    return frozenset(j for j in p.elements if p.le(i, j))


def down_set(p: Poset, i) -> frozenset:
    p._known(i)
    return frozenset(j for j in p.elements if p.le(j, i))


def upper_bounds(p: Poset, items: Iterable) -> list:
    items = list(items)
    return [k for k in p.elements if all(p.le(i, k) for i in items)]


def is_upward_directed(p: Poset) -> bool:
    if not p.elements:
        return False
    return all(upper_bounds(p, (a, b)) for a, b in combinations(p.elements, 2))


def maximum(p: Poset):
    """The greatest element, or ``None``."""
    for m in p.elements:
        if all(p.le(i, m) for i in p.elements):
            return m
    return None


@dataclass(frozen=True)
class Filter:
    """Proper filter on a finite set: the supersets of ``base``."""

    index_set: tuple
    base: frozenset

    def __post_init__(self):
        object.__setattr__(self, "index_set", tuple(self.index_set))
        object.__setattr__(self, "base", frozenset(self.base))
        if not self.base:
            raise OrderError("a proper filter needs a nonempty base")
        if not self.base <= set(self.index_set):
            raise OrderError("filter base must be a subset of the index set")

    def __contains__(self, subset) -> bool:
        subset = frozenset(subset)
        return self.base <= subset <= set(self.index_set)

    def is_ultra(self) -> bool:
        return len(self.base) == 1

    def members(self) -> Iterator[frozenset]:
        """Every member, smallest first, in index-set order within a size."""
        rest = [i for i in self.index_set if i not in self.base]
        for k in range(len(rest) + 1):
            for extra in combinations(rest, k):
                yield self.base | frozenset(extra)

    def ordered_base(self) -> tuple:
        return tuple(i for i in self.index_set if i in self.base)


def principal_filter(index_set: Iterable, base: Iterable) -> Filter:
    return Filter(tuple(index_set), frozenset(base))


def is_directed_filter(p: Poset, f: Filter) -> bool:
    if set(f.index_set) != set(p.elements):
        raise OrderError("filter carrier differs from the poset's elements")
    return all(f.base <= up_set(p, i) for i in p.elements)


def directed_ultrafilter(p: Poset) -> Filter:
    """The ultrafilter at the maximum, found by folding pairwise upper bounds."""
    if not is_upward_directed(p):
        raise OrderError("poset is not upward directed")
    m = p.elements[0]
    for i in p.elements[1:]:
        m = upper_bounds(p, (m, i))[0]
    # m dominates every element; antisymmetry makes it the unique maximum
    return Filter(p.elements, frozenset([m]))
