"""Property tests driven by hypothesis; structures stay at desk scale."""
import itertools
import random

from hypothesis import given, settings, strategies as st

from finmodel.constructions import (
    ReducedProduct, colimit_is_reduced_product, los_counterexample, product, restricted_product_diagram,
)
from finmodel.formulas import classify, ep_to_pp_disjunction, free_variables, is_conjunctive_quantified, to_text
from finmodel.generate import random_conjunctive, random_directed_poset, random_ep, random_formula, random_lsg
from finmodel.library import GRAPH, LSG, POINTED_GRAPH
from finmodel.orders import Filter, directed_ultrafilter, is_directed_filter
from finmodel.parser import parse_formula
from finmodel.structures import (
    Morphism, Structure, evaluate, find_retraction, homomorphisms, is_homomorphism, is_pure,
)
from finmodel.vectorized import satisfaction_array

from oracles import naive_eval, subsets

seeds = st.integers(0, 2**32 - 1)


@st.composite
def graphs(draw, sig=GRAPH, max_size=3, min_size=1):
    n = draw(st.integers(min_size, max_size))
    pairs = list(itertools.product(range(n), repeat=2))
    edges = draw(st.sets(st.sampled_from(pairs))) if pairs else set()
    consts = {c: draw(st.integers(0, n - 1)) for c in sig.constants}
    return Structure(sig, range(n), consts, relations={"E": edges})


@st.composite
def families(draw, min_len=1, max_len=3):
    k = draw(st.integers(min_len, max_len))
    return {i: draw(graphs()) for i in range(1, k + 1)}


@st.composite
def filters_on(draw, index):
    base = draw(st.sets(st.sampled_from(list(index)), min_size=1))
    return Filter(tuple(index), frozenset(base))


@settings(max_examples=150, deadline=None)
@given(graphs(POINTED_GRAPH), seeds)
def test_evaluators_agree(m, seed):
    rng = random.Random(seed)
    f = random_formula(POINTED_GRAPH, rng, ("x", "y"), 2, 5)
    arr = satisfaction_array(m, f, ["x", "y"])
    for a, b in itertools.product(range(len(m)), repeat=2):
        env = {"x": m.universe[a], "y": m.universe[b]}
        assert evaluate(m, f, env) == naive_eval(m, f, env) == bool(arr[a, b])


@settings(max_examples=300, deadline=None)
@given(seeds, st.sampled_from([GRAPH, POINTED_GRAPH, LSG]))
def test_print_parse_round_trip(seed, sig):
    f = random_formula(sig, random.Random(seed), ("x",), 2, 6)
    assert parse_formula(to_text(f), sig) == f


@settings(max_examples=300, deadline=None)
@given(seeds)
def test_classification_chain(seed):
    f = random_formula(GRAPH, random.Random(seed), ("x", "y"), 2, 6)
    k = classify(f)
    assert k.is_existential_positive <= k.is_positive
    assert k.is_positive_primitive <= k.is_existential_positive


@settings(max_examples=60, deadline=None)
@given(seeds, st.lists(graphs(), min_size=1, max_size=6))
def test_ep_normal_form_equivalent(seed, structures):
    f = random_ep(GRAPH, random.Random(seed), ("x",), 2, 4)
    parts = ep_to_pp_disjunction(f)
    assert parts and all(classify(p).is_positive_primitive for p in parts)
    assert all(free_variables(p) <= {"x"} for p in parts)
    for m in structures:
        for a in m.universe:
            assert evaluate(m, f, {"x": a}) == any(evaluate(m, p, {"x": a}) for p in parts)


@settings(max_examples=80, deadline=None)
@given(graphs(), graphs(), seeds)
def test_homomorphisms_preserve_ep(a, b, seed):
    f = random_ep(GRAPH, random.Random(seed), ("x",), 2, 4)
    for h in itertools.islice(homomorphisms(a, b), 5):
        for e in a.universe:
            if evaluate(a, f, {"x": e}):
                assert evaluate(b, f, {"x": h(e)})


@settings(max_examples=60, deadline=None)
@given(graphs(max_size=2), graphs())
def test_sections_are_pure(a, b):
    for s in itertools.islice(homomorphisms(a, b, injective=True), 3):
        if find_retraction(s) is not None:
            assert is_pure(s, 1) and is_pure(s, 2)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 6).flatmap(lambda n: filters_on(range(n))))
def test_filter_coherence(f):
    members = set(f.members())
    for j in members:
        for k in members:
            assert j & k in f
    for j in subsets(f.index_set):
        assert (j in f) == (j in members) == (f.base <= j)


@settings(max_examples=100, deadline=None)
@given(seeds, st.integers(1, 8))
def test_directed_ultrafilter(seed, n):
    p = random_directed_poset(n, random.Random(seed))
    u = directed_ultrafilter(p)
    assert u.is_ultra() and is_directed_filter(p, u)


@settings(max_examples=60, deadline=None)
@given(families())
def test_product_coordinatewise(fam):
    p, legs = product(fam)
    for s, t in itertools.product(p.universe, repeat=2):
        assert p.holds("E", (s, t)) == all(m.holds("E", (a, b)) for m, a, b in zip(fam.values(), s, t))
    assert all(is_homomorphism(h) for h in legs.values())


@settings(max_examples=60, deadline=None)
@given(families().flatmap(lambda fam: st.tuples(st.just(fam), filters_on(sorted(fam)))), seeds)
def test_pp_los_under_any_filter(args, seed):
    fam, filt = args
    rng = random.Random(seed)
    for _ in range(5):
        f = random_conjunctive(GRAPH, rng, ("x",), 2, 4)
        assert is_conjunctive_quantified(f)
        assert los_counterexample(fam, filt, f) is None


@settings(max_examples=60, deadline=None)
@given(families().flatmap(lambda fam: st.tuples(st.just(fam), st.sampled_from(sorted(fam)))), seeds)
def test_los_under_ultrafilters(args, seed):
    fam, m = args
    u = Filter(tuple(fam), frozenset({m}))
    rng = random.Random(seed)
    for _ in range(5):
        assert los_counterexample(fam, u, random_formula(GRAPH, rng, ("x", "y"), 2, 5)) is None


@settings(max_examples=40, deadline=None)
@given(families().flatmap(lambda fam: st.tuples(st.just(fam), filters_on(sorted(fam)))))
def test_colimit_presentation(args):
    fam, filt = args
    iso = colimit_is_reduced_product(fam, filt)
    assert iso.composites_are_identities()
    assert is_homomorphism(iso.forward) and is_homomorphism(iso.backward)
    rd = restricted_product_diagram(fam, filt)
    for (j, k), pi in rd.diagram.maps.items():
        assert iso.nu[k].after(pi).mapping == iso.nu[j].mapping


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_lsg_reduced_products_well_defined(seed):
    rng = random.Random(seed)
    fam = {i: random_lsg(rng.choice([1, 2, 4]), rng) for i in (1, 2)}
    filt = Filter((1, 2), frozenset(rng.sample([1, 2], rng.randint(1, 2))))
    rp = ReducedProduct(fam, filt)
    p, _ = product(fam)
    q = Morphism(p, rp, {x: rp.class_of(x) for x in p.universe})
    assert is_homomorphism(q) and q.is_surjective()
