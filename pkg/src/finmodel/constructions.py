"""Limits and colimits in the category of finite L-structures.

Element naming is deterministic throughout:

* product elements are tuples in family order (``()`` for the empty family);
* reduced-product classes are named by their lexicographically least
  representative (coordinates off the filter base set to each factor's
  first element);
* colimit classes are named by their least ``(index, element)`` pair.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product as cartesian
from typing import Iterable, Mapping, Sequence

import numpy as np

from .formulas import Formula, Signature, free_variables, is_conjunctive_quantified
from .orders import Filter, OrderError, Poset, is_upward_directed, upper_bounds
from .structures import (
    Morphism,
    Structure,
    _UnionFind,
    evaluate,
    homomorphisms,
    identity,
    is_homomorphism,
    substructure,
)
from .vectorized import _generic_arrays, product_arrays, satisfaction_array


class ConstructionError(ValueError):
    pass


# ----------------------------------------------------------- lazy tables


_UNSET = object()


class LazyStructure(Structure):
    """A structure whose operations are computed (and memoized) on demand."""

    def __init__(self, signature: Signature, universe, constants):
        self.signature = signature
        self.universe = tuple(universe)
        self._pos = {e: i for i, e in enumerate(self.universe)}
        self.constants = dict(constants)
        self._memo = {name: {} for name in signature.functions}
        self._rel_memo = {}

    def _compute(self, symbol, args):
        raise NotImplementedError

    def _holds(self, symbol, args) -> bool:
        raise NotImplementedError

    def _relation_tuples(self, symbol) -> Iterable[tuple]:
        arity = self.signature.relations[symbol]
        return [t for t in cartesian(self.universe, repeat=arity) if self._holds(symbol, t)]

    def apply(self, symbol, args):
        memo = self._memo[symbol]
        value = memo.get(args, _UNSET)
        if value is _UNSET:
            value = memo[args] = self._compute(symbol, args)
        return value

    def holds(self, symbol, args) -> bool:
        return self._holds(symbol, args)

    def relation_tuples(self, symbol):
        ts = self._rel_memo.get(symbol)
        if ts is None:
            ts = self._rel_memo[symbol] = frozenset(self._relation_tuples(symbol))
        return ts

    def function_items(self, symbol):
        arity = self.signature.functions[symbol]
        for args in cartesian(self.universe, repeat=arity):
            yield args, self.apply(symbol, args)

    @property
    def functions(self) -> dict:
        return {name: dict(self.function_items(name)) for name in self.signature.functions}

    @property
    def relations(self) -> dict:
        return {name: self.relation_tuples(name) for name in self.signature.relations}


def _check_family(factors, signature=None) -> Signature:
    if not factors:
        if signature is None:
            raise ConstructionError("an empty family needs an explicit signature")
        return signature
    sig = signature or factors[0].signature
    for m in factors:
        if m.signature != sig:
            raise ConstructionError("family members have different signatures")
    return sig


def _family_items(family) -> tuple:
    if isinstance(family, Mapping):
        return tuple(family.keys()), tuple(family.values())
    factors = tuple(family)
    return tuple(range(1, len(factors) + 1)), factors


class ProductStructure(LazyStructure):
    """Coordinatewise product; coordinate ``k`` belongs to ``indices[k]``."""

    def __init__(self, indices: Sequence, factors: Sequence[Structure], signature: Signature | None = None):
        self.indices = tuple(indices)
        self.factors = tuple(factors)
        sig = _check_family(self.factors, signature)
        if len(self.indices) != len(self.factors):
            raise ConstructionError("one index per factor")
        universe = cartesian(*(m.universe for m in self.factors))
        constants = {c: tuple(m.constants[c] for m in self.factors) for c in sig.constants}
        super().__init__(sig, universe, constants)

    def _compute(self, symbol, args):
        return tuple(m.apply(symbol, tuple(a[k] for a in args)) for k, m in enumerate(self.factors))

    def _holds(self, symbol, args) -> bool:
        return all(m.holds(symbol, tuple(a[k] for a in args)) for k, m in enumerate(self.factors))

    def _relation_tuples(self, symbol):
        arity = self.signature.relations[symbol]
        if not self.factors:
            return [((),) * arity]
        return [tuple(zip(*combo)) for combo in cartesian(*(m.relation_tuples(symbol) for m in self.factors))]

    def _build_arrays(self):
        if not self.factors:
            return _generic_arrays(self)
        return product_arrays(self.signature, self.factors)

    def coordinate(self, index) -> int:
        return self.indices.index(index)


def product(family, signature: Signature | None = None):
    """The product and its projections ``{index: pi_index}``."""
    indices, factors = _family_items(family)
    p = ProductStructure(indices, factors, signature)
    projections = {
        i: Morphism(p, m, {x: x[k] for x in p.universe}, check=False) for k, (i, m) in enumerate(zip(indices, factors))
    }
    return p, projections


def final_object(sig: Signature) -> Structure:
    """One element ``()``; every relation full, every operation constant."""
    point = ()
    return Structure(
        sig,
        [point],
        {c: point for c in sig.constants},
        {name: {(point,) * n: point} for name, n in sig.functions.items()},
        {name: {(point,) * n} for name, n in sig.relations.items()},
    )


def terminal_morphism(m: Structure) -> Morphism:
    return Morphism(m, final_object(m.signature), {e: () for e in m.universe}, check=False)


def equalizer(f: Morphism, g: Morphism):
    """The agreement substructure of two parallel morphisms and its inclusion."""
    if f.source is not g.source and f.source != g.source:
        raise ConstructionError("equalizer needs parallel morphisms (sources differ)")
    if f.target is not g.target and f.target != g.target:
        raise ConstructionError("equalizer needs parallel morphisms (targets differ)")
    agree = [a for a in f.source.universe if f(a) == g(a)]
    e = substructure(f.source, agree)
    return e, Morphism(e, f.source, {a: a for a in agree}, check=False)


# --------------------------------------------------------------- diagrams


class DiagramError(ValueError):
    pass


class Diagram:
    """Structures over a finite poset with a morphism for every comparable pair.

    ``maps[(a, b)]`` always runs from ``objects[a]`` to ``objects[b]``.
    Filtered diagrams have an arrow ``a -> b`` when ``a <= b``; cofiltered
    ones when ``b <= a``.  Missing arrows are synthesized by composition
    and every composite is checked for consistency.
    """

    upward = True

    def __init__(self, poset: Poset, objects: Mapping, maps: Mapping, *, check: bool = True):
        self.poset = poset
        if set(objects) != set(poset.elements):
            raise DiagramError("objects must be given for exactly the poset's elements")
        self.objects = {i: objects[i] for i in poset.elements}
        sigs = {m.signature for m in self.objects.values()}
        if len(sigs) > 1:
            raise DiagramError("diagram objects have different signatures")
        self.signature = next(iter(sigs)) if sigs else None
        self.maps = {}
        for (a, b), h in maps.items():
            if not self.comparable(a, b):
                raise DiagramError(f"no arrow {a!r} -> {b!r} in this diagram's shape")
            if h.source is not self.objects[a] and h.source != self.objects[a]:
                raise DiagramError(f"map {a!r} -> {b!r} has the wrong source")
            if h.target is not self.objects[b] and h.target != self.objects[b]:
                raise DiagramError(f"map {a!r} -> {b!r} has the wrong target")
            self.maps[(a, b)] = h
        self._complete()
        if check:
            self.validate()

    def comparable(self, a, b) -> bool:
        return self.poset.le(a, b) if self.upward else self.poset.le(b, a)

    def arrow(self, a, b) -> Morphism:
        return self.maps[(a, b)]

    def arrows(self) -> list:
        order = {i: k for k, i in enumerate(self.poset.elements)}
        return sorted(self.maps, key=lambda p: (order[p[0]], order[p[1]]))

    def _complete(self):
        for i in self.poset.elements:
            if (i, i) not in self.maps:
                self.maps[(i, i)] = identity(self.objects[i])
        changed = True
        while changed:
            changed = False
            for (a, b) in list(self.maps):
                for (c, d) in list(self.maps):
                    if c == b and (a, d) not in self.maps:
                        self.maps[(a, d)] = self.maps[(b, d)].after(self.maps[(a, b)])
                        changed = True
        for a in self.poset.elements:
            for b in self.poset.elements:
                if self.comparable(a, b) and (a, b) not in self.maps:
                    raise DiagramError(f"missing map {a!r} -> {b!r} (not a composite of given maps)")

    def validate(self):
        for i in self.poset.elements:
            if not self.maps[(i, i)].is_identity():
                raise DiagramError(f"map {i!r} -> {i!r} is not the identity")
        for (a, b), h in self.maps.items():
            if not is_homomorphism(h):
                raise DiagramError(f"map {a!r} -> {b!r} is not a homomorphism")
        for (a, b), h in self.maps.items():
            for (c, d), g in self.maps.items():
                if c == b and a != b and c != d:
                    if g.after(h).mapping != self.maps[(a, d)].mapping:
                        raise DiagramError(f"composite {a!r} -> {b!r} -> {d!r} disagrees with map {a!r} -> {d!r}")

    def covers(self) -> list:
        out = []
        for a, b in self.poset.covers():
            out.append((a, b) if self.upward else (b, a))
        return out


class FilteredDiagram(Diagram):
    upward = True


class CofilteredDiagram(Diagram):
    upward = False


@dataclass
class Cone:
    apex: Structure
    legs: dict


@dataclass
class Cocone:
    apex: Structure
    legs: dict


def is_cone(d: Diagram, cone: Cone) -> bool:
    for (a, b), h in d.maps.items():
        la, lb = cone.legs[a].mapping, cone.legs[b].mapping
        if any(h(la[x]) != lb[x] for x in cone.apex.universe):
            return False
    return all(is_homomorphism(leg) for leg in cone.legs.values())


def is_cocone(d: Diagram, cocone: Cocone) -> bool:
    for (a, b), h in d.maps.items():
        la, lb = cocone.legs[a].mapping, cocone.legs[b].mapping
        if any(lb[h(x)] != la[x] for x in d.objects[a].universe):
            return False
    return all(is_homomorphism(leg) for leg in cocone.legs.values())


# ------------------------------------------------------------------ limits


@dataclass
class Limit(Cone):
    product: Structure = None
    inclusion: Morphism = None
    projections: dict = field(default_factory=dict)


def threads(d: Diagram) -> list:
    """Compatible families ``x`` with ``arrow(a, b)(x_a) = x_b`` for every arrow, in product order."""
    idx = list(d.poset.elements)
    pos = {i: k for k, i in enumerate(idx)}
    checks = [[] for _ in idx]
    for (a, b), h in d.maps.items():
        if a != b:
            checks[max(pos[a], pos[b])].append((pos[a], pos[b], h.mapping))
    out = []
    current = [None] * len(idx)

    def search(k):
        if k == len(idx):
            out.append(tuple(current))
            return
        for x in d.objects[idx[k]].universe:
            current[k] = x
            if all(h[current[s]] == current[t] for s, t, h in checks[k]):
                search(k + 1)
        current[k] = None

    search(0)
    return out


def limit(d: Diagram) -> Limit:
    """Threads of the product with legs ``lambda_i = pi_i ∘ iota``."""
    p, projections = product({i: d.objects[i] for i in d.poset.elements}, d.signature)
    ts = threads(d)
    apex = substructure(p, ts)
    inclusion = Morphism(apex, p, {t: t for t in ts}, check=False)
    legs = {i: projections[i].after(inclusion) for i in d.poset.elements}
    return Limit(apex, legs, product=p, inclusion=inclusion, projections=projections)


# ------------------------------------------------------- filtered colimits


@dataclass
class Colimit(Cocone):
    diagram: Diagram = None
    class_of: dict = field(default_factory=dict)

    def members(self, cls) -> list:
        return [pair for pair, c in self.class_of.items() if c == cls]


def filtered_colimit(d: FilteredDiagram) -> Colimit:
    """Disjoint union modulo eventual equality, with legs ``alpha_i``."""
    if not d.upward:
        raise ConstructionError("filtered colimits need an upward diagram")
    if not is_upward_directed(d.poset):
        raise OrderError("filtered colimit needs an upward directed index poset")
    idx = list(d.poset.elements)
    pairs = [(i, x) for i in idx for x in d.objects[i].universe]
    uf = _UnionFind(pairs)
    # covers generate the whole eventual-equality relation
    for a, b in d.covers():
        h = d.arrow(a, b).mapping
        for x in d.objects[a].universe:
            uf.union((a, x), (b, h[x]))
    cls = {}
    for pair in pairs:  # first pair met is the least one
        cls.setdefault(uf.find(pair), pair)
    class_of = {pair: cls[uf.find(pair)] for pair in pairs}
    universe = [pair for pair in pairs if class_of[pair] == pair]
    sig = d.signature

    constants = {}
    if sig.constants:
        i0 = idx[0]
        for c in sig.constants:
            constants[c] = class_of[(i0, d.objects[i0].constants[c])]
    functions = {}
    for name, arity in sig.functions.items():
        table = {}
        for args in cartesian(universe, repeat=arity):
            ks = upper_bounds(d.poset, [i for i, _ in args])
            k = ks[0]
            pushed = tuple(d.arrow(i, k)(x) for i, x in args)
            table[args] = class_of[(k, d.objects[k].apply(name, pushed))]
        functions[name] = table
    relations = {}
    for name in sig.relations:
        ts = set()
        for k in idx:
            for t in d.objects[k].relation_tuples(name):
                ts.add(tuple(class_of[(k, x)] for x in t))
        relations[name] = ts
    apex = Structure(sig, universe, constants, functions, relations, check=False)
    legs = {i: Morphism(d.objects[i], apex, {x: class_of[(i, x)] for x in d.objects[i].universe}, check=False) for i in idx}
    return Colimit(apex, legs, diagram=d, class_of=class_of)


def eventually_equal(d: FilteredDiagram, p, q) -> bool:
    """Literal test: some ``k`` above both indices identifies the images."""
    (i, x), (j, y) = p, q
    return any(d.arrow(i, k)(x) == d.arrow(j, k)(y) for k in upper_bounds(d.poset, (i, j)))


# -------------------------------------------------------- reduced products


class ReducedProduct(LazyStructure):
    """``prod M_i / F``; a class is determined by its coordinates on the base."""

    def __init__(self, family, filt: Filter, signature: Signature | None = None):
        if not filt.index_set:
            raise ConstructionError("reduced product over an empty index set")
        if isinstance(family, Mapping):
            missing = set(filt.index_set) - set(family)
            if missing:
                raise ConstructionError(f"family has no factor at {sorted(map(str, missing))}")
            self.factors = tuple(family[i] for i in filt.index_set)
        else:
            self.factors = tuple(family)
            if len(self.factors) != len(filt.index_set):
                raise ConstructionError("one factor per index")
        sig = _check_family(self.factors, signature)
        for i, m in zip(filt.index_set, self.factors):
            if m.is_empty():
                raise ConstructionError(
                    f"factor {i!r} is empty; use reduced_product_via_colimit for families with empty factors"
                )
        self.filter = filt
        self.index_set = filt.index_set
        self._in_base = tuple(i in filt.base for i in filt.index_set)
        self._first = tuple(m.universe[0] for m in self.factors)
        self._base_factors = [m for m, b in zip(self.factors, self._in_base) if b]
        universe = [self._pad(t) for t in cartesian(*(m.universe for m in self._base_factors))]
        constants = {c: self.class_of(tuple(m.constants[c] for m in self.factors)) for c in sig.constants}
        super().__init__(sig, universe, constants)

    def _pad(self, base_coords) -> tuple:
        it = iter(base_coords)
        return tuple(next(it) if b else first for b, first in zip(self._in_base, self._first))

    def class_of(self, x: tuple) -> tuple:
        """Canonical name of the theta_F class of the tuple ``x`` (over the index set)."""
        if len(x) != len(self.factors):
            raise ConstructionError("tuple does not match the index set")
        return tuple(a if b else first for a, b, first in zip(x, self._in_base, self._first))

    def agreement(self, x, y) -> frozenset:
        return frozenset(i for i, a, b in zip(self.index_set, x, y) if a == b)

    def _compute(self, symbol, args):
        return tuple(
            m.apply(symbol, tuple(a[k] for a in args)) if b else first
            for k, (m, b, first) in enumerate(zip(self.factors, self._in_base, self._first))
        )

    def _holds(self, symbol, args) -> bool:
        return all(m.holds(symbol, tuple(a[k] for a in args)) for k, (m, b) in enumerate(zip(self.factors, self._in_base)) if b)

    def _relation_tuples(self, symbol):
        out = []
        for combo in cartesian(*(m.relation_tuples(symbol) for m in self._base_factors)):
            out.append(tuple(self._pad(coords) for coords in zip(*combo)))
        return out

    def _build_arrays(self):
        return product_arrays(self.signature, self._base_factors)


def reduced_product(family, filt: Filter):
    """The reduced product and the quotient homomorphism ``x -> x/F`` from the full product."""
    rp = ReducedProduct(family, filt)
    p, _ = product(dict(zip(filt.index_set, rp.factors)))
    q = Morphism(p, rp, {x: rp.class_of(x) for x in p.universe}, check=False)
    return rp, q


def ultraproduct(family, u: Filter):
    if not u.is_ultra():
        raise ConstructionError("an ultraproduct needs an ultrafilter (singleton base)")
    return reduced_product(family, u)


def diagonal(m: Structure, index_set: Sequence, filt: Filter) -> Morphism:
    """``a -> (a, ..., a)/F`` into the reduced power."""
    if m.is_empty():
        raise ConstructionError("diagonal of an empty structure")
    if tuple(index_set) != filt.index_set:
        raise ConstructionError("filter lives on a different index set")
    power = ReducedProduct({i: m for i in index_set}, filt)
    return Morphism(m, power, {a: power.class_of((a,) * len(power.factors)) for a in m.universe}, check=False)


# ----------------------------------------------------------------- Łoś


def _rep_tuple(rep, n):
    rep = tuple(rep)
    if len(rep) != n:
        raise ConstructionError("representative must have one coordinate per index")
    return rep


def los_sides(family, filt: Filter, f: Formula, assignment: Mapping | None = None):
    """Both sides of the Łoś equivalence at representatives ``assignment``.

    Returns ``(left, right, truth_set)`` where ``left`` is satisfaction in
    the reduced product and ``right`` is ``truth_set in filt``.
    """
    rp = family if isinstance(family, ReducedProduct) else ReducedProduct(family, filt)
    assignment = dict(assignment or {})
    missing = free_variables(f) - assignment.keys()
    if missing:
        raise ConstructionError(f"unbound free variables: {sorted(missing)}")
    n = len(rp.factors)
    reps = {v: _rep_tuple(x, n) for v, x in assignment.items()}
    for v, x in reps.items():
        for k, (a, m) in enumerate(zip(x, rp.factors)):
            if a not in m:
                raise ConstructionError(f"{v}: coordinate {rp.index_set[k]!r} is not an element of that factor")
    left = evaluate(rp, f, {v: rp.class_of(x) for v, x in reps.items()})
    truth_set = frozenset(
        i for k, (i, m) in enumerate(zip(rp.index_set, rp.factors)) if evaluate(m, f, {v: x[k] for v, x in reps.items()})
    )
    return left, truth_set in filt, truth_set


def verify_los(family, u: Filter, f: Formula, assignment: Mapping | None = None) -> bool:
    if not u.is_ultra():
        raise ConstructionError("verify_los needs an ultrafilter; use verify_los_pp for proper filters")
    left, right, _ = los_sides(family, u, f, assignment)
    return left == right


def verify_los_pp(family, filt: Filter, f: Formula, assignment: Mapping | None = None) -> bool:
    if not is_conjunctive_quantified(f):
        raise ConstructionError("formula must be built from atoms with conjunction and quantifiers only")
    left, right, _ = los_sides(family, filt, f, assignment)
    return left == right


@dataclass
class LosCounterexample:
    formula: Formula
    assignment: dict
    left: bool
    right: bool


def los_counterexample(family, filt: Filter, f: Formula):
    """First representative assignment (product order) where the Łoś sides differ, or ``None``.

    Every assignment of representatives is covered at once: satisfaction
    in the reduced product and in each factor is tabulated separately
    and compared through the class map.
    """
    rp = family if isinstance(family, ReducedProduct) else ReducedProduct(family, filt)
    variables = sorted(free_variables(f))
    k = len(variables)
    sizes = [len(m) for m in rp.factors]
    coords = np.indices(sizes, dtype=np.intp).reshape(len(sizes), -1)
    # position of x/F in the reduced product: mixed radix over base coordinates
    cls = np.zeros(coords.shape[1], dtype=np.intp)
    for c, m, b in zip(coords, rp.factors, rp._in_base):
        if b:
            cls = cls * len(m) + c
    left = satisfaction_array(rp, f, variables)[np.ix_(*([cls] * k))] if k else satisfaction_array(rp, f, ())
    right = np.ones((coords.shape[1],) * k, dtype=bool)
    for c, m, b in zip(coords, rp.factors, rp._in_base):
        if b:
            sat = satisfaction_array(m, f, variables)
            right = right & (sat[np.ix_(*([c] * k))] if k else sat)
    diff = np.argwhere(np.asarray(left != right).reshape((coords.shape[1],) * k))
    if not len(diff):
        return None
    where = tuple(int(w) for w in diff[0])
    reps = {}
    for v, w in zip(variables, where):
        reps[v] = tuple(m.universe[int(c[w])] for c, m in zip(coords, rp.factors))
    lv = bool(np.asarray(left)[where]) if k else bool(left)
    rv = bool(right[where]) if k else bool(right)
    return LosCounterexample(f, reps, lv, rv)


# -------------------------------------------- restricted-product diagram


def splice(j_set, s: Sequence, x: Sequence, index_set: Sequence) -> tuple:
    """``s * x``: ``s(i)`` on ``J``, ``x(i)`` elsewhere (``s`` listed in index order over ``J``)."""
    index_set = tuple(index_set)
    j_order = [i for i in index_set if i in set(j_set)]
    if set(j_set) - set(index_set):
        raise ConstructionError("J is not a subset of the index set")
    if len(s) != len(j_order) or len(x) != len(index_set):
        raise ConstructionError("splice shape mismatch")
    at = dict(zip(j_order, s))
    return tuple(at[i] if i in at else xi for i, xi in zip(index_set, x))


def restriction(index_set: Sequence, j_set, x: Sequence) -> tuple:
    return tuple(xi for i, xi in zip(index_set, x) if i in j_set)


@dataclass
class RestrictedDiagram:
    """``J -> M|J`` over the members of a filter ordered by reverse inclusion."""

    diagram: FilteredDiagram
    family: dict
    filter: Filter

    def obj(self, j_set) -> ProductStructure:
        return self.diagram.objects[frozenset(j_set)]


def restricted_product(family: Mapping, index_set: Sequence, j_set) -> ProductStructure:
    order = [i for i in index_set if i in j_set]
    return product({i: family[i] for i in order}, next(iter(family.values())).signature if family else None)[0]


def restricted_product_diagram(family: Mapping, filt: Filter, chain: bool | None = None, *, check: bool = False) -> RestrictedDiagram:
    """Objects ``M|J`` for ``J`` in the filter, maps forgetting coordinates outside the smaller set.

    With ``chain`` the members are cut down to the cofinal chain
    ``base ⊆ base ∪ {i1} ⊆ ... ⊆ I``; by default this happens when the
    index set has more than six elements.
    """
    index_set = filt.index_set
    if chain is None:
        chain = len(index_set) > 6
    if chain:
        members, cur = [filt.base], set(filt.base)
        for i in index_set:
            if i not in cur:
                cur.add(i)
                members.append(frozenset(cur))
    else:
        members = list(filt.members())
    leq = {(j, k) for j in members for k in members if j >= k}
    poset = Poset(tuple(members), frozenset(leq))
    objects = {j: restricted_product(family, index_set, j) for j in members}
    maps = {}
    for j in members:
        j_order = [i for i in index_set if i in j]
        for k in members:
            if j >= k:
                src, tgt = objects[j], objects[k]
                keep = [n for n, i in enumerate(j_order) if i in k]
                maps[(j, k)] = Morphism(src, tgt, {s: tuple(s[n] for n in keep) for s in src.universe}, check=False)
    d = FilteredDiagram(poset, objects, maps, check=check)
    return RestrictedDiagram(d, dict(family), filt)


def nu_map(j_set, family: Mapping, filt: Filter, anchor: Sequence | None = None, reduced: ReducedProduct | None = None) -> Morphism:
    """``nu_J(s) = (s * t)/F`` from ``M|J`` to the reduced product."""
    j_set = frozenset(j_set)
    if j_set not in filt:
        raise ConstructionError("nu_J needs J to be a member of the filter")
    rp = reduced or ReducedProduct(family, filt)
    if anchor is None:
        anchor = rp.universe[0] if rp.universe else None
        if anchor is None:
            raise ConstructionError("the full product is empty")
    src = restricted_product(family, filt.index_set, j_set)
    return Morphism(src, rp, {s: rp.class_of(splice(j_set, s, anchor, filt.index_set)) for s in src.universe}, check=False)


@dataclass
class ColimitIsomorphism:
    colimit: Colimit
    reduced: ReducedProduct
    forward: Morphism
    backward: Morphism
    nu: dict

    def composites_are_identities(self) -> bool:
        return self.backward.after(self.forward).is_identity() and self.forward.after(self.backward).is_identity()


def colimit_is_reduced_product(family: Mapping, filt: Filter, chain: bool | None = None) -> ColimitIsomorphism:
    """Colimit of the restricted-product diagram against the reduced product.

    ``forward`` is induced by the co-cone ``nu_J``; ``backward`` sends
    ``x/F`` to the class of ``(I, x)``.  Raises if ``forward`` is not
    well defined on classes.
    """
    rp = ReducedProduct(family, filt)
    rd = restricted_product_diagram(family, filt, chain)
    col = filtered_colimit(rd.diagram)
    nu = {j: nu_map(j, family, filt, reduced=rp) for j in rd.diagram.poset.elements}
    forward = {}
    for (j, s), c in col.class_of.items():
        v = nu[j](s)
        if forward.setdefault(c, v) != v:
            raise ConstructionError(f"nu maps the class {c!r} to two different elements")
    full = frozenset(filt.index_set)
    if full not in rd.diagram.objects:
        raise ConstructionError("the restricted diagram lacks M|I")
    backward = {x: col.class_of[(full, x)] for x in rp.universe}
    return ColimitIsomorphism(
        col,
        rp,
        Morphism(col.apex, rp, forward, check=False),
        Morphism(rp, col.apex, backward, check=False),
        nu,
    )


def reduced_product_via_colimit(family: Mapping, filt: Filter, chain: bool | None = None) -> Colimit:
    """The colimit form of the reduced product; defined even when some factors are empty."""
    return filtered_colimit(restricted_product_diagram(family, filt, chain).diagram)


# ------------------------------------------------- universal properties


@dataclass
class Factorization:
    mediator: Morphism | None
    count: int

    @property
    def unique(self) -> bool:
        return self.mediator is not None and self.count == 1


def factor_through_limit(lim: Limit, cone: Cone, d: Diagram) -> Factorization:
    """Mediator ``u(a) = (leg_i(a))_i`` and an exhaustive count of all mediators."""
    idx = list(d.poset.elements)
    apex = lim.apex
    mediator = None
    mapping = {a: tuple(cone.legs[i](a) for i in idx) for a in cone.apex.universe}
    if all(t in apex for t in mapping.values()):
        u = Morphism(cone.apex, apex, mapping, check=False)
        if is_homomorphism(u) and all(lim.legs[i].after(u) == cone.legs[i] for i in idx):
            mediator = u
    domains = {a: [t for t in apex.universe if all(lim.legs[i](t) == cone.legs[i](a) for i in idx)] for a in cone.apex.universe}
    count = sum(1 for _ in homomorphisms(cone.apex, apex, domains=domains))
    return Factorization(mediator, count)


def factor_through_colimit(col: Colimit, cocone: Cocone) -> Factorization:
    """Mediator ``u([i, x]) = leg_i(x)`` and an exhaustive count of all mediators."""
    mapping = {}
    ok = True
    for (i, x), c in col.class_of.items():
        v = cocone.legs[i](x)
        if mapping.setdefault(c, v) != v:
            ok = False
    mediator = None
    if ok:
        u = Morphism(col.apex, cocone.apex, mapping, check=False)
        if is_homomorphism(u) and all(u.after(col.legs[i]) == cocone.legs[i] for i in col.legs):
            mediator = u
    domains = {}
    for (i, x), c in col.class_of.items():
        domains.setdefault(c, set(cocone.apex.universe)).intersection_update({cocone.legs[i](x)})
    count = sum(1 for _ in homomorphisms(col.apex, cocone.apex, domains=domains))
    return Factorization(mediator, count)
