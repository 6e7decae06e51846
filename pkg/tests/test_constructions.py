import itertools
import random

import pytest

from finmodel.constructions import (
    CofilteredDiagram, Cocone, Cone, ConstructionError, DiagramError, FilteredDiagram,
    ReducedProduct, colimit_is_reduced_product, diagonal, equalizer, eventually_equal,
    factor_through_colimit, factor_through_limit, filtered_colimit, final_object, limit,
    los_counterexample, los_sides, nu_map, product, reduced_product, reduced_product_via_colimit,
    restricted_product_diagram, splice, ultraproduct, verify_los, verify_los_pp,
)
from finmodel.generate import random_lsg, random_structure
from finmodel.library import GRAPH, LSG, empty_graph, graph, k2, z2_lsg
from finmodel.orders import Filter, Poset, maximum
from finmodel.parser import parse_formula
from finmodel.structures import (
    Morphism, evaluate, find_isomorphism, homomorphisms, identity, is_homomorphism, is_pure,
)

from oracles import naive_threads, theta_classes


def g(text, sig=GRAPH):
    return parse_formula(text, sig)


def chain_diagram(objects, maps, upward=False):
    """Objects 1..n on a chain; ``maps[k]`` goes between k+1 and k in the given direction."""
    n = len(objects)
    poset = Poset.chain(range(1, n + 1))
    arrows = {}
    for k, h in enumerate(maps, start=1):
        arrows[(k, k + 1) if upward else (k + 1, k)] = h
    cls = FilteredDiagram if upward else CofilteredDiagram
    return cls(poset, dict(enumerate(objects, start=1)), arrows)


class TestProduct:
    def test_empty_family_is_final(self):
        p, legs = product([], GRAPH)
        assert len(p) == 1 and legs == {}
        assert find_isomorphism(p, final_object(GRAPH)) is not None

    def test_empty_factor(self):
        p, _ = product([k2(), empty_graph()])
        assert p.is_empty()

    def test_k2_squared(self):
        p, legs = product([k2(), k2()])
        assert len(p) == 4
        # coordinatewise: ((a,b),(c,d)) is an edge iff a!=c and b!=d
        expected = {((a, b), (c, d)) for a, b, c, d in itertools.product((0, 1), repeat=4) if a != c and b != d}
        assert set(p.relation_tuples("E")) == expected
        assert len(expected) == 4
        assert all(is_homomorphism(h) for h in legs.values())

    def test_atomic_coordinatewise(self):
        rng = random.Random(0)
        for _ in range(20):
            fs = [random_structure(GRAPH, rng.randint(1, 3), rng) for _ in range(rng.randint(1, 3))]
            p, _ = product(fs)
            for s, t in itertools.product(p.universe, repeat=2):
                assert p.holds("E", (s, t)) == all(m.holds("E", (a, b)) for m, a, b in zip(fs, s, t))

    def test_lsg_operations_coordinatewise(self):
        z = z2_lsg()
        p, _ = product([z, z])
        assert p.apply("mul", ((1, -1), (-1, -1))) == (-1, 1)
        assert p.constants["minus_one"] == (-1, -1)

    def test_mixed_signatures(self):
        with pytest.raises(ConstructionError):
            product([k2(), z2_lsg()])


class TestFinalObject:
    def test_graph(self):
        one = final_object(GRAPH)
        assert len(one) == 1 and set(one.relation_tuples("E")) == {((), ())}

    def test_lsg(self):
        one = final_object(LSG)
        (e,) = one.universe
        assert one.constants == {"one": e, "minus_one": e}
        assert one.apply("mul", (e, e)) == e and one.holds("Iso", (e, e, e, e))


class TestEqualizer:
    def test_equal_maps(self):
        h = identity(k2())
        e, inc = equalizer(h, h)
        assert len(e) == 2 and inc.is_identity()

    def test_into_final(self):
        one = final_object(GRAPH)
        f = Morphism(k2(), one, {0: (), 1: ()})
        e, _ = equalizer(f, f)
        assert len(e) == 2

    def test_swap(self):
        e, _ = equalizer(identity(k2()), Morphism(k2(), k2(), {0: 1, 1: 0}))
        assert e.is_empty()

    def test_not_parallel(self):
        with pytest.raises(ConstructionError):
            equalizer(identity(k2()), identity(graph([0], [])))


class TestDiagram:
    def test_composites_synthesized(self):
        a = graph(["a"], [("a", "a")])
        d = chain_diagram([a, a, a], [identity(a), identity(a)])
        assert (3, 1) in d.maps and (2, 2) in d.maps

    def test_conflict_rejected(self):
        two = graph([0, 1], [(0, 0), (1, 1)])
        poset = Poset.from_relation([1, 2, 3, 4], [(1, 2), (1, 3), (2, 4), (3, 4)])
        maps = {
            (4, 2): identity(two),
            (4, 3): Morphism(two, two, {0: 1, 1: 0}),
            (2, 1): identity(two),
            (3, 1): identity(two),
        }
        with pytest.raises(DiagramError):
            CofilteredDiagram(poset, {1: two, 2: two, 3: two, 4: two}, maps)

    def test_non_homomorphism_rejected(self):
        a = graph([0, 1], [(0, 1)])
        with pytest.raises(DiagramError):
            chain_diagram([a, a], [Morphism(a, a, {0: 1, 1: 0})])


class TestLimit:
    def test_single_object(self):
        m = graph([0, 1], [(0, 1)])
        lim = limit(CofilteredDiagram(Poset.chain([1]), {1: m}, {}))
        assert find_isomorphism(lim.apex, m) is not None

    def test_bijective_chain(self):
        m = graph([0, 1, 2], [(0, 1), (1, 2)])
        n = graph(["a", "b", "c"], [("a", "b"), ("b", "c")])
        f = Morphism(n, m, {"a": 0, "b": 1, "c": 2})
        lim = limit(chain_diagram([m, n], [f]))
        iso = Morphism(lim.apex, n, {t: t[1] for t in lim.apex.universe})
        assert is_homomorphism(iso) and iso.is_injective() and iso.is_surjective()

    def test_threads_match_oracle(self, random_diagrams):
        for d in random_diagrams:
            assert set(limit(d).apex.universe) == set(naive_threads(d))

    def test_limit_axioms(self, random_diagrams):
        for d in random_diagrams:
            lim = limit(d)
            assert all(is_homomorphism(h) for h in lim.legs.values())
            for (a, b), h in d.maps.items():
                assert h.after(lim.legs[a]) == lim.legs[b]
            # relations hold on a thread exactly when they hold in every coordinate
            for s, t in itertools.product(lim.apex.universe, repeat=2):
                assert lim.apex.holds("E", (s, t)) == all(lim.legs[i].target.holds("E", (lim.legs[i](s), lim.legs[i](t))) for i in d.poset.elements)


class TestColimit:
    def test_single_object(self):
        m = graph([0, 1], [(0, 1)])
        col = filtered_colimit(FilteredDiagram(Poset.chain([1]), {1: m}, {}))
        assert find_isomorphism(col.apex, m) is not None

    def test_chain_collapses_to_top(self):
        a = graph([0, 1], [(0, 0)])
        b = graph(["p", "q", "r"], [("p", "p"), ("q", "r")])
        col = filtered_colimit(chain_diagram([a, b], [Morphism(a, b, {0: "p", 1: "q"})], upward=True))
        # oracle: direct isomorphism search against the top object
        assert find_isomorphism(col.apex, b) is not None
        alpha = col.legs[2]
        assert is_homomorphism(alpha) and alpha.is_injective() and alpha.is_surjective()

    def test_merging_map_shrinks(self):
        a = graph([0, 1], [])
        b = graph(["p"], [])
        col = filtered_colimit(chain_diagram([a, b], [Morphism(a, b, {0: "p", 1: "p"})], upward=True))
        assert len(col.apex) < len(a) + len(b)

    def test_classes_are_eventual_equality(self):
        rng = random.Random(4)
        for _ in range(20):
            d = _random_filtered(rng)
            col = filtered_colimit(d)
            pairs = list(col.class_of)
            for p, q in itertools.product(pairs, repeat=2):
                assert (col.class_of[p] == col.class_of[q]) == eventually_equal(d, p, q)
            for i, leg in col.legs.items():
                assert is_homomorphism(leg)

    def test_diamond_colimit(self):
        w = load_named("Rising")
        col = filtered_colimit(w)
        assert all(is_homomorphism(h) for h in col.legs.values())

    def test_cofiltered_rejected(self, random_diagrams):
        with pytest.raises(ConstructionError):
            filtered_colimit(random_diagrams[0])


def load_named(name):
    from finmodel.fileformat import load_examples

    return load_examples().diagrams[name]


def _random_filtered(rng):
    """A filtered diagram: the restricted-product diagram of a random family."""
    k = rng.randint(1, 3)
    fam = {i: random_structure(GRAPH, rng.randint(1, 2), rng) for i in range(1, k + 1)}
    base = frozenset(rng.sample(sorted(fam), rng.randint(1, k)))
    return restricted_product_diagram(fam, Filter(tuple(fam), base)).diagram


class TestReducedProduct:
    def test_full_base_is_product(self):
        fam = {1: k2(), 2: graph([0, 1, 2], [(0, 1)])}
        rp, q = reduced_product(fam, Filter((1, 2), frozenset({1, 2})))
        assert q.is_injective() and q.is_surjective() and is_homomorphism(q)

    def test_ultra_is_factor(self):
        fam = {1: k2(), 2: graph([0, 1, 2], [(0, 1)]), 3: graph([0], [])}
        rp, _ = ultraproduct(fam, Filter((1, 2, 3), frozenset({2})))
        assert find_isomorphism(rp, fam[2]) is not None

    def test_class_count(self):
        fam = {1: graph([0, 1, 2], []), 2: k2()}
        rp = ReducedProduct(fam, Filter((1, 2), frozenset({1})))
        assert len(rp) == 3
        assert len(rp) == len(theta_classes(rp.factors, [0]))

    def test_well_defined(self):
        # changing representatives inside a class changes nothing
        rng = random.Random(9)
        for _ in range(10):
            fam = {i: random_lsg(rng.choice([1, 2, 4]), rng) for i in (1, 2, 3)}
            filt = Filter((1, 2, 3), frozenset(rng.sample([1, 2, 3], 2)))
            rp = ReducedProduct(fam, filt)
            classes = theta_classes(rp.factors, [k for k, i in enumerate(filt.index_set) if i in filt.base])
            assert len(classes) == len(rp)
            for reps in classes.values():
                names = {rp.class_of(x) for x in reps}
                assert len(names) == 1 and names.pop() in rp
            some = [reps for reps in classes.values()][:3]
            for xs in itertools.product(*some[:2]):
                if len(xs) < 2:
                    continue
                outs = {rp.class_of(tuple(m.apply("mul", (a, b)) for m, a, b in zip(rp.factors, *xs)))}
                assert rp.apply("mul", (rp.class_of(xs[0]), rp.class_of(xs[1]))) in outs

    def test_empty_factor_error(self):
        with pytest.raises(ConstructionError):
            ReducedProduct({1: k2(), 2: empty_graph()}, Filter((1, 2), frozenset({1})))

    def test_ultraproduct_needs_ultrafilter(self):
        with pytest.raises(ConstructionError):
            ultraproduct({1: k2(), 2: k2()}, Filter((1, 2), frozenset({1, 2})))


class TestDiagonal:
    def test_single_index(self):
        m = graph([0, 1], [(0, 1)])
        h = diagonal(m, (1,), Filter((1,), frozenset({1})))
        assert is_homomorphism(h) and h.is_injective() and h.is_surjective()

    def test_ultra_projection(self):
        m = k2()
        h = diagonal(m, (1, 2, 3), Filter((1, 2, 3), frozenset({2})))
        back = Morphism(h.target, m, {x: x[1] for x in h.target.universe})
        assert back.after(h).is_identity()

    def test_proper_filter_pure(self):
        for m in (k2(), graph([0, 1, 2], [(0, 1), (1, 1)])):
            h = diagonal(m, (1, 2, 3), Filter((1, 2, 3), frozenset({1, 3})))
            assert is_pure(h, 2)


class TestLos:
    FAM = {1: k2(), 2: graph(["a"], [("a", "a")]), 3: graph([0, 1], [(0, 1)])}

    def test_ultra_reduces_to_factor(self):
        for m in (1, 2, 3):
            u = Filter((1, 2, 3), frozenset({m}))
            for s in ("exists x. E(x,x)", "forall x. exists y. E(x,y)", "exists x. ~E(x,x)"):
                left, right, _ = los_sides(self.FAM, u, g(s))
                assert left == right == evaluate(self.FAM[m], g(s))

    def test_negation_under_ultrafilter(self):
        u = Filter((1, 2, 3), frozenset({3}))
        assert verify_los(self.FAM, u, g("~E(x,y)"), {"x": (0, "a", 1), "y": (1, "a", 0)})

    def test_atomic_proper_filter(self):
        f = Filter((1, 2, 3), frozenset({1, 3}))
        assert verify_los_pp(self.FAM, f, g("E(x,y)"), {"x": (0, "a", 0), "y": (1, "a", 1)})

    def test_pp_and_forall_proper(self):
        f = Filter((1, 2, 3), frozenset({1, 3}))
        for s in ("exists x. exists y. E(x,y) & E(y,x)", "forall x. exists y. E(x,y)", "forall x. forall y. E(x,y)"):
            assert los_counterexample(self.FAM, f, g(s)) is None

    def test_disjunction_fails(self):
        fam = {1: k2(), 2: k2()}
        f = Filter((1, 2), frozenset({1, 2}))
        cx = los_counterexample(fam, f, g("E(x,y) | x = y"))
        assert cx is not None
        left, right, _ = los_sides(fam, f, cx.formula, cx.assignment)
        assert (left, right) == (cx.left, cx.right) and left != right

    def test_guards(self):
        with pytest.raises(ConstructionError):
            verify_los(self.FAM, Filter((1, 2, 3), frozenset({1, 2})), g("E(x,x)"), {"x": (0, "a", 0)})
        with pytest.raises(ConstructionError):
            verify_los_pp(self.FAM, Filter((1, 2, 3), frozenset({1})), g("~E(x,x)"), {"x": (0, "a", 0)})

    def test_vectorized_matches_pointwise(self):
        fam = {1: k2(), 2: graph([0, 1], [(0, 1), (1, 1)])}
        f = Filter((1, 2), frozenset({1, 2}))
        for s in ("E(x,y) | E(y,x)", "~E(x,y)", "E(x,y) -> x = y"):
            phi = g(s)
            cx = los_counterexample(fam, f, phi)
            pointwise = None
            for xs in itertools.product(itertools.product(*(m.universe for m in fam.values())), repeat=2):
                left, right, _ = los_sides(fam, f, phi, dict(zip("xy", xs)))
                if left != right:
                    pointwise = dict(zip("xy", xs))
                    break
            assert (cx is None) == (pointwise is None)
            if cx is not None:
                assert cx.assignment == pointwise


class TestRestrictedProducts:
    def test_splice(self):
        assert splice({1, 2}, ("a", "b"), ("x", "y"), (1, 2)) == ("a", "b")
        assert splice({1}, ("a",), ("x", "y"), (1, 2)) == ("a", "y")
        assert splice(set(), (), ("x", "y"), (1, 2)) == ("x", "y")

    def test_full_member_and_identity(self):
        fam = {1: k2(), 2: graph([0], [])}
        rd = restricted_product_diagram(fam, Filter((1, 2), frozenset({1})))
        full = frozenset({1, 2})
        p, _ = product(fam)
        assert rd.obj(full).universe == p.universe
        assert rd.diagram.arrow(full, full).is_identity()

    def test_chain_form(self):
        fam = {i: graph([0], []) for i in range(1, 4)}
        rd = restricted_product_diagram(fam, Filter((1, 2, 3), frozenset({2})), chain=True)
        assert [sorted(j) for j in rd.diagram.poset.elements] == [[2], [1, 2], [1, 2, 3]]

    def test_nu_full_is_quotient(self):
        fam = {1: k2(), 2: graph([0, 1], [(0, 1)])}
        filt = Filter((1, 2), frozenset({2}))
        rp, q = reduced_product(fam, filt)
        nu = nu_map(frozenset({1, 2}), fam, filt, reduced=rp)
        assert nu.mapping == q.mapping

    def test_nu_anchor_independent(self):
        fam = {1: k2(), 2: graph([0, 1], [(0, 1)]), 3: graph([0, 1, 2], [(1, 2)])}
        filt = Filter((1, 2, 3), frozenset({2}))
        p, _ = product(fam)
        for j in filt.members():
            maps = [nu_map(j, fam, filt, anchor=t).mapping for t in p.universe]
            assert all(m == maps[0] for m in maps)

    def test_nu_triangles(self):
        fam = {1: k2(), 2: graph([0, 1], [(0, 1)]), 3: graph([0, 1, 2], [(1, 2)])}
        filt = Filter((1, 2, 3), frozenset({1, 3}))
        rd = restricted_product_diagram(fam, filt)
        rp = ReducedProduct(fam, filt)
        nu = {j: nu_map(j, fam, filt, reduced=rp) for j in rd.diagram.poset.elements}
        for (j, k), pi in rd.diagram.maps.items():
            assert nu[k].after(pi).mapping == nu[j].mapping
        assert all(is_homomorphism(h) for h in nu.values())

    def test_ultra_nu_by_coordinate(self):
        fam = {1: k2(), 2: graph([0, 1], [(0, 1)])}
        filt = Filter((1, 2), frozenset({2}))
        rp = ReducedProduct(fam, filt)
        for j in filt.members():
            nu = nu_map(j, fam, filt, reduced=rp)
            order = [i for i in (1, 2) if i in j]
            for s in nu.source.universe:
                assert nu(s)[1] == s[order.index(2)]


class TestColimitIsomorphism:
    def test_singleton_index(self):
        m = graph([0, 1], [(0, 1)])
        iso = colimit_is_reduced_product({1: m}, Filter((1,), frozenset({1})))
        assert iso.composites_are_identities()
        assert find_isomorphism(iso.colimit.apex, m) is not None

    def test_full_base(self):
        fam = {1: k2(), 2: graph([0, 1], [(1, 1)])}
        iso = colimit_is_reduced_product(fam, Filter((1, 2), frozenset({1, 2})))
        assert iso.composites_are_identities()
        assert find_isomorphism(iso.colimit.apex, product(fam)[0]) is not None

    def test_random_ultra(self):
        rng = random.Random(12)
        for _ in range(10):
            fam = {i: random_structure(GRAPH, rng.randint(1, 3), rng) for i in (1, 2, 3)}
            m = rng.choice([1, 2, 3])
            iso = colimit_is_reduced_product(fam, Filter((1, 2, 3), frozenset({m})))
            assert iso.composites_are_identities()
            assert is_homomorphism(iso.forward) and is_homomorphism(iso.backward)
            assert find_isomorphism(iso.colimit.apex, fam[m]) is not None

    def test_lsg(self):
        fam = {1: z2_lsg(), 2: z2_lsg()}
        iso = colimit_is_reduced_product(fam, Filter((1, 2), frozenset({2})))
        assert iso.composites_are_identities() and is_homomorphism(iso.forward)


class TestEmptyDiscrepancy:
    FAM = {1: k2(), 2: empty_graph()}

    def test_classical_empty(self):
        assert product(self.FAM)[0].is_empty()

    def test_colimit_nonempty(self):
        filt = Filter((1, 2), frozenset({1}))
        assert frozenset({2}) not in filt
        col = reduced_product_via_colimit(self.FAM, filt)
        assert not col.apex.is_empty()
        assert evaluate(col.apex, g("exists v0. v0 = v0"))
        assert find_isomorphism(col.apex, k2()) is not None

    def test_empty_in_base(self):
        col = reduced_product_via_colimit(self.FAM, Filter((1, 2), frozenset({2})))
        assert col.apex.is_empty()


class TestUniversalProperties:
    def test_limit_factorization(self, random_diagrams):
        rng = random.Random(1)
        for d in random_diagrams[:10]:
            lim = limit(d)
            top = maximum(d.poset)
            for _ in range(5):
                a = random_structure(GRAPH, rng.randint(1, 3), rng)
                h = next(iter(homomorphisms(a, d.objects[top])), None)
                if h is None:
                    continue
                cone = Cone(a, {i: d.arrow(top, i).after(h) for i in d.poset.elements})
                fac = factor_through_limit(lim, cone, d)
                assert fac.unique

    def test_colimit_factorization(self):
        fam = {1: k2(), 2: graph([0, 1], [(0, 1)])}
        filt = Filter((1, 2), frozenset({1}))
        rd = restricted_product_diagram(fam, filt)
        col = filtered_colimit(rd.diagram)
        rp = ReducedProduct(fam, filt)
        nu = {j: nu_map(j, fam, filt, reduced=rp) for j in rd.diagram.poset.elements}
        fac = factor_through_colimit(col, Cocone(rp, nu))
        assert fac.unique
