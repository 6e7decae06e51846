"""Profinite structures and the retraction onto them from an ultraproduct.

For a cofiltered diagram ``M`` of finite structures over a directed poset
``I`` and a directed ultrafilter ``U`` on ``I``, the limit ``P`` is a
retract of ``prod M_i / U``: the section is ``nu_I ∘ iota`` and the
retraction ``gamma`` is assembled from the local maps ``gamma_{J,i}``,
each picking the unique ``y`` whose V-set is ``U``-large.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .constructions import (
    ColimitIsomorphism,
    ConstructionError,
    CofilteredDiagram,
    ProductStructure,
    ReducedProduct,
    colimit_is_reduced_product,
    limit,
    nu_map,
    restricted_product,
)
from .formulas import Formula, is_geometric_axiom
from .orders import Filter, OrderError, directed_ultrafilter, is_directed_filter, is_upward_directed, maximum, up_set
from .structures import (
    Morphism,
    Structure,
    check_theory,
    find_retraction,
    first_failing_axiom,
    is_homomorphism,
    is_isomorphism,
    is_pure,
)


class ProfiniteError(ValueError):
    pass


@dataclass
class ProfiniteStructure:
    diagram: CofilteredDiagram
    threads: Structure
    legs: dict
    inclusion: Morphism
    product: ProductStructure

    @property
    def index_set(self) -> tuple:
        return self.diagram.poset.elements


def _require_cofiltered(d):
    if not isinstance(d, CofilteredDiagram):
        raise ProfiniteError("expected a cofiltered diagram (maps f_ji : M_j -> M_i for i <= j)")
    if not is_upward_directed(d.poset):
        raise OrderError("index poset is not upward directed")


def profinite_limit(d: CofilteredDiagram) -> ProfiniteStructure:
    _require_cofiltered(d)
    lim = limit(d)
    return ProfiniteStructure(d, lim.apex, lim.legs, lim.inclusion, lim.product)


def _j_order(d, j_set) -> list:
    return [i for i in d.poset.elements if i in j_set]


def v_set(d: CofilteredDiagram, j_set, i, x: Sequence, y) -> frozenset:
    """``{j in J ∩ i↑ : f_ji(x_j) = y}``, with ``x`` listed over ``J`` in index order."""
    order = _j_order(d, j_set)
    if len(order) != len(set(j_set)):
        raise ProfiniteError("J is not a subset of the index set")
    if len(x) != len(order):
        raise ProfiniteError("x must have one coordinate per element of J")
    if y not in d.objects[i]:
        raise ProfiniteError(f"{y!r} is not an element of M_{i}")
    above = up_set(d.poset, i)
    return frozenset(j for j, xj in zip(order, x) if j in above and d.arrow(j, i)(xj) == y)


def _require_directed(d, u):
    if not is_directed_filter(d.poset, u):
        raise ProfiniteError("filter is not directed (some up-set is not a member)")


def gamma_local(d: CofilteredDiagram, u: Filter, j_set, i, x: Sequence):
    """The unique ``y`` in ``M_i`` whose V-set is a member of ``u``."""
    _require_directed(d, u)
    if frozenset(j_set) not in u:
        raise ProfiniteError("J must be a member of the ultrafilter")
    if not u.is_ultra():
        raise ProfiniteError("gamma needs an ultrafilter")
    found = [y for y in d.objects[i].universe if v_set(d, j_set, i, x, y) in u]
    if len(found) != 1:
        raise ConstructionError(f"expected exactly one large V-set at index {i!r}, found {len(found)}")
    return found[0]


def gamma_local_map(d: CofilteredDiagram, u: Filter, j_set, i, source: ProductStructure | None = None) -> Morphism:
    """``gamma_{J,i} : M|J -> M_i`` as an explicit element map."""
    src = source or restricted_product(d.objects, d.poset.elements, frozenset(j_set))
    return Morphism(src, d.objects[i], {x: gamma_local(d, u, j_set, i, x) for x in src.universe}, check=False)


@dataclass
class GammaData:
    ultrafilter: Filter
    ultraproduct: ReducedProduct
    presentation: ColimitIsomorphism
    local: dict
    components: dict
    gamma: Morphism
    profinite: ProfiniteStructure


def gamma_global(d: CofilteredDiagram, u: Filter | None = None, pro: ProfiniteStructure | None = None) -> GammaData:
    """``gamma_i : M/U -> M_i`` through the colimit presentation, and ``gamma : M/U -> P``.

    On the colimit class of ``(J, s)`` the value of ``gamma_i`` is
    ``gamma_{J,i}(s)``; agreement over every member of every class is
    checked, which is exactly well-definedness.
    """
    _require_cofiltered(d)
    u = u or directed_ultrafilter(d.poset)
    _require_directed(d, u)
    if not u.is_ultra():
        raise ProfiniteError("gamma needs an ultrafilter")
    pro = pro or profinite_limit(d)
    family = dict(d.objects)
    iso = colimit_is_reduced_product(family, u)
    rd = iso.colimit.diagram
    idx = d.poset.elements
    local = {}
    for j_set in rd.poset.elements:
        for i in idx:
            local[(j_set, i)] = gamma_local_map(d, u, j_set, i, source=rd.objects[j_set])
    rp = iso.reduced
    components = {}
    for i in idx:
        on_class = {}
        for (j_set, s), c in iso.colimit.class_of.items():
            v = local[(j_set, i)](s)
            if on_class.setdefault(c, v) != v:
                raise ConstructionError(f"gamma_{i} is not well defined on the class {c!r}")
        components[i] = Morphism(rp, d.objects[i], {xi: on_class[iso.backward(xi)] for xi in rp.universe}, check=False)
    mapping = {}
    for xi in rp.universe:
        t = tuple(components[i](xi) for i in idx)
        if t not in pro.threads:
            raise ConstructionError(f"gamma of {xi!r} is not a thread")
        mapping[xi] = t
    gamma = Morphism(rp, pro.threads, mapping, check=False)
    return GammaData(u, rp, iso, local, components, gamma, pro)


def section(data: GammaData) -> Morphism:
    """``nu_I ∘ iota : P -> M/U``."""
    full = frozenset(data.profinite.index_set)
    nu_full = data.presentation.nu.get(full) or nu_map(full, data.profinite.diagram.objects, data.ultrafilter, reduced=data.ultraproduct)
    return nu_full.after(data.profinite.inclusion)


# ----------------------------------------------------------------- reports


@dataclass
class RetractionReport:
    identity_holds: bool
    facts: dict
    section: Morphism
    retraction: Morphism
    oracle_retraction: Morphism | None
    empty_limit: bool
    seconds: float
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.identity_holds and all(self.facts.values())


def _fact_checks(d: CofilteredDiagram, data: GammaData, purity_bound: int | None) -> tuple:
    u = data.ultrafilter
    idx = d.poset.elements
    rd = data.presentation.colimit.diagram
    members = rd.poset.elements
    facts = {}
    failures = []

    def record(name, ok, witness=None):
        facts[name] = facts.get(name, True) and ok
        if not ok and witness is not None and len(failures) < 20:
            failures.append((name, witness))

    for j_set in members:
        src = rd.objects[j_set]
        for i in idx:
            above = frozenset(up_set(d.poset, i)) & j_set
            for x in src.universe:
                vs = {y: v_set(d, j_set, i, x, y) for y in d.objects[i].universe}
                ys = list(vs)
                disjoint = all(not (vs[a] & vs[b]) for n, a in enumerate(ys) for b in ys[n + 1 :])
                record("v-sets-disjoint", disjoint, (sorted(map(str, j_set)), i, x))
                union = frozenset().union(*vs.values()) if vs else frozenset()
                record("v-sets-cover", union == above, (sorted(map(str, j_set)), i, x))
                large = [y for y, v in vs.items() if v in u]
                record("one-large-v-set", len(large) == 1, (sorted(map(str, j_set)), i, x))
            record("local-gamma-hom", is_homomorphism(data.local[(j_set, i)]), (sorted(map(str, j_set)), i))
    # gamma_{K,i} = gamma_{J,i} ∘ pi_KJ for J ⊆ K
    for (k_set, j_set), pi in rd.maps.items():
        for i in idx:
            ok = data.local[(j_set, i)].after(pi).mapping == data.local[(k_set, i)].mapping
            record("local-gamma-restricts", ok, (sorted(map(str, k_set)), sorted(map(str, j_set)), i))
    # gamma_{J,i} = f_ki ∘ gamma_{J,k} for i <= k
    for (k, i), f in d.maps.items():
        for j_set in members:
            ok = f.after(data.local[(j_set, k)]).mapping == data.local[(j_set, i)].mapping
            record("local-gamma-cone", ok, (sorted(map(str, j_set)), k, i))
    # gamma_{I,k} ∘ iota = lambda_k
    full = frozenset(idx)
    pro = data.profinite
    for k in idx:
        ok = data.local[(full, k)].after(pro.inclusion).mapping == pro.legs[k].mapping
        record("local-gamma-top", ok, k)
    # gamma_i ∘ nu_J = gamma_{J,i}
    for j_set in members:
        nu = data.presentation.nu[j_set]
        for i in idx:
            record("gamma-nu", data.components[i].after(nu).mapping == data.local[(j_set, i)].mapping, (sorted(map(str, j_set)), i))
    # the gamma_i form a cone, and lambda_i ∘ gamma = gamma_i
    for (k, i), f in d.maps.items():
        record("gamma-cone", f.after(data.components[k]).mapping == data.components[i].mapping, (k, i))
    for i in idx:
        record("gamma-hom", is_homomorphism(data.components[i]), i)
        record("lambda-gamma", pro.legs[i].after(data.gamma).mapping == data.components[i].mapping, i)
    record("gamma-hom", is_homomorphism(data.gamma))
    s = section(data)
    record("section-hom", is_homomorphism(s))
    if purity_bound is not None:
        record("section-pure", is_pure(s, purity_bound))
    return facts, failures


def retraction_theorem_check(d: CofilteredDiagram, *, purity_bound: int | None = None, oracle: bool = True) -> RetractionReport:
    """Build the section and retraction and check ``gamma ∘ nu_I ∘ iota = id_P`` element by element."""
    start = time.perf_counter()
    _require_cofiltered(d)
    for i, m in d.objects.items():
        if m.is_empty():
            raise ProfiniteError(f"object {i!r} is empty; the ultraproduct needs nonempty factors")
    data = gamma_global(d)
    s = section(data)
    composite = data.gamma.after(s)
    identity_holds = composite.is_identity()
    facts, failures = _fact_checks(d, data, purity_bound)
    if not identity_holds:
        bad = [x for x in data.profinite.threads.universe if composite(x) != x]
        failures.insert(0, ("identity", bad[0]))
    r = find_retraction(s) if oracle else None
    if oracle:
        facts["oracle-retraction-exists"] = r is not None
    return RetractionReport(
        identity_holds,
        facts,
        s,
        data.gamma,
        r,
        data.profinite.threads.is_empty(),
        time.perf_counter() - start,
        failures,
    )


def degenerate_oracle_check(d: CofilteredDiagram) -> dict:
    """Compare the generic pipeline with the principal-base shortcuts ``P ≅ M_m ≅ M/U``."""
    _require_cofiltered(d)
    m = maximum(d.poset)
    if m is None:
        raise ProfiniteError("no maximum")
    data = gamma_global(d)
    rp, pro = data.ultraproduct, data.profinite
    k = d.poset.elements.index(m)
    top = d.objects[m]
    lam = pro.legs[m]
    to_top = Morphism(rp, top, {xi: xi[k] for xi in rp.universe}, check=False)
    out = {
        "ultrafilter-at-maximum": data.ultrafilter.base == frozenset([m]),
        "P≅M_m": is_isomorphism(lam),
        "M/U≅M_m": is_isomorphism(to_top),
    }
    direct_gamma = {xi: tuple(d.arrow(m, i)(xi[k]) for i in d.poset.elements) for xi in rp.universe}
    out["gamma-direct"] = data.gamma.mapping == direct_gamma
    s = section(data)
    out["section-direct"] = all(s(t)[k] == t[k] for t in pro.threads.universe)
    out["retraction-via-top"] = lam.after(data.gamma).mapping == to_top.mapping
    return out


def closure_failure(d: CofilteredDiagram, axioms: Iterable[Formula]):
    """An axiom true in every object but false in the limit, or ``None`` (objects that fail are skipped)."""
    axioms = list(axioms)
    for m in d.objects.values():
        if not check_theory(m, axioms):
            return None
    pro = profinite_limit(d)
    return first_failing_axiom(pro.threads, axioms)


def profinite_closure_check(d: CofilteredDiagram, axioms: Iterable[Formula]) -> bool:
    axioms = list(axioms)
    for ax in axioms:
        if not is_geometric_axiom(ax):
            raise ProfiniteError("every axiom must be a geometric sentence")
    for i, m in d.objects.items():
        if not check_theory(m, axioms):
            raise ProfiniteError(f"object {i!r} is not a model of the axioms")
    return check_theory(profinite_limit(d).threads, axioms)
