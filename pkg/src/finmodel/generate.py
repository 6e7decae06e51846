"""Seeded random structures, posets, diagrams and formula corpora."""
from __future__ import annotations

import random
from itertools import product

from .constructions import CofilteredDiagram, final_object
from .formulas import (
    FALSE,
    TRUE,
    And,
    Application,
    Constant,
    Equality,
    Exists,
    Forall,
    Formula,
    Implies,
    Not,
    Or,
    RelationAtom,
    Signature,
    Variable,
    all_variables,
    disjunction,
    conjunction,
    exists_all,
    forall_all,
    free_variables,
    quantifier_depth,
)
from .library import LSG
from .orders import Poset
from .structures import Morphism, Structure, _UnionFind, check_theory, quotient


def _rng(seed_or_rng) -> random.Random:
    return seed_or_rng if isinstance(seed_or_rng, random.Random) else random.Random(seed_or_rng)


# -------------------------------------------------------------- structures


def random_structure(sig: Signature, size: int, rng, density: float = 0.35) -> Structure:
    rng = _rng(rng)
    if size == 0 and sig.constants:
        raise ValueError("signature with constants has no empty structure")
    u = list(range(size))
    constants = {c: rng.choice(u) for c in sorted(sig.constants)}
    functions = {name: {args: rng.choice(u) for args in product(u, repeat=n)} for name, n in sorted(sig.functions.items())}
    relations = {name: {t for t in product(u, repeat=n) if rng.random() < density} for name, n in sorted(sig.relations.items())}
    return Structure(sig, u, constants, functions, relations)


def boolean_group(k: int, rng) -> Structure:
    """``(Z/2)^k`` as an L_SG structure; ``Iso(a,b,c,d)`` iff ``ab = cd`` and ``{a,b} ∩ {c,d}`` is nonempty."""
    rng = _rng(rng)
    u = list(range(2**k))
    mul = {(a, b): a ^ b for a in u for b in u}
    iso = {(a, b, c, d) for a, b, c, d in product(u, repeat=4) if a ^ b == c ^ d and {a, b} & {c, d}}
    return Structure(LSG, u, {"one": 0, "minus_one": rng.choice(u)}, {"mul": mul}, {"Iso": iso})


def random_lsg(size: int, rng, density: float = 0.08) -> Structure:
    """Boolean groups when the size allows, otherwise a magma with two-sided unit ``one``."""
    rng = _rng(rng)
    if size in (1, 2, 4) and rng.random() < 0.5:
        return boolean_group(size.bit_length() - 1, rng)
    u = list(range(size))
    one = 0
    mul = {}
    for a, b in product(u, repeat=2):
        mul[(a, b)] = b if a == one else a if b == one else rng.choice(u)
    iso = {t for t in product(u, repeat=4) if rng.random() < density}
    return Structure(LSG, u, {"one": one, "minus_one": rng.choice(u)}, {"mul": mul}, {"Iso": iso})


def random_model(sig: Signature, size: int, rng) -> Structure:
    rng = _rng(rng)
    if sig == LSG:
        return random_lsg(size, rng)
    return random_structure(sig, size, rng)


def random_quotient(m: Structure, rng, merges: int = 1):
    """Quotient by the congruence generated by a few random pairs."""
    rng = _rng(rng)
    pairs = [(rng.choice(m.universe), rng.choice(m.universe)) for _ in range(merges)] if m.universe else []
    return quotient(m, pairs)


# ------------------------------------------------------------------ posets


def random_directed_poset(n: int, rng, density: float = 0.4) -> Poset:
    """Elements ``1..n``; random order edges go upward in label, and ``n`` is the top."""
    rng = _rng(rng)
    elems = list(range(1, n + 1))
    pairs = [(a, b) for a in elems for b in elems if a < b and (b == n or rng.random() < density)]
    return Poset.from_relation(elems, pairs)


# ---------------------------------------------------------------- diagrams


def _upper_covers(p: Poset, i) -> list:
    above = [j for j in p.elements if j != i and p.le(i, j)]
    return [c for c in above if not any(d != c and p.le(d, c) for d in above)]


def _cover_maps(target: Structure, covers, objects, maps, above, rng, budget: int):
    """Compatible homomorphisms ``M_c -> target`` for every cover ``c``, or ``None``.

    Variables are pairs ``(c, x)``; the compatibility equations
    ``f_c1(f_j,c1(x)) = f_c2(f_j,c2(x))`` are merged up front with
    union-find, and the remaining homomorphism constraints are solved by
    backtracking with a node budget.
    """
    variables = [(c, x) for c in covers for x in objects[c].universe]
    uf = _UnionFind(variables)
    def down(j, c):
        return (lambda x: x) if j == c else maps[(j, c)]

    for j in above:
        below = [c for c in covers if c == j or (j, c) in maps]
        for c1, c2 in zip(below, below[1:]):
            f1, f2 = down(j, c1), down(j, c2)
            for x in objects[j].universe:
                uf.union((c1, f1(x)), (c2, f2(x)))
    roots = []
    seen = set()
    for v in variables:
        r = uf.find(v)
        if r not in seen:
            seen.add(r)
            roots.append(r)
    pos = {r: k for k, r in enumerate(roots)}
    fixed = {}
    checks = [[] for _ in roots]
    sig = target.signature
    for c in covers:
        src = objects[c]
        var = lambda x: uf.find((c, x))
        for k in sig.constants:
            r = var(src.constants[k])
            if fixed.setdefault(r, target.constants[k]) != target.constants[k]:
                return None
        for name in sig.relations:
            for t in src.relation_tuples(name):
                vs = tuple(var(a) for a in t)
                checks[max(pos[v] for v in vs)].append((0, name, vs, None))
        for name in sig.functions:
            for args, value in src.function_items(name):
                vs = tuple(var(a) for a in args)
                out = var(value)
                checks[max(pos[v] for v in vs + (out,))].append((1, name, vs, out))
    value = {}
    nodes = [0]

    def ok(k):
        for kind, name, vs, out in checks[k]:
            image = tuple(value[v] for v in vs)
            if kind == 0:
                if not target.holds(name, image):
                    return False
            elif target.apply(name, image) != value[out]:
                return False
        return True

    def search(k):
        if k == len(roots):
            return True
        nodes[0] += 1
        if nodes[0] > budget:
            return False
        r = roots[k]
        options = [fixed[r]] if r in fixed else rng.sample(list(target.universe), len(target.universe))
        for y in options:
            value[r] = y
            if ok(k) and search(k + 1):
                return True
            del value[r]
        return False

    if not search(0):
        return None
    return {c: Morphism(objects[c], target, {x: value[uf.find((c, x))] for x in objects[c].universe}, check=False) for c in covers}


def random_cofiltered_diagram(
    sig: Signature,
    seed,
    *,
    max_indices: int = 5,
    max_size: int = 4,
    max_product: int = 256,
    theory=None,
    budget: int = 5000,
) -> CofilteredDiagram:
    """A functorial cofiltered diagram over a random directed poset with a top.

    Objects are built from the top down; each candidate (a random
    structure, a random quotient of an object above, the final object as
    a last resort) is accepted once compatible maps from its upper covers
    exist.  The product of all object sizes stays within ``max_product``.
    """
    rng = _rng(seed)
    n = rng.randint(1, max_indices)
    poset = random_directed_poset(n, rng)
    theory = list(theory or [])
    objects, maps = {}, {}
    budget_left = max_product

    def acceptable(m):
        return not theory or check_theory(m, theory)

    order = sorted(poset.elements, reverse=True)
    top = order[0]
    cand = None
    for _ in range(20):
        cand = random_model(sig, rng.randint(1, max(1, min(max_size, budget_left))), rng)
        if acceptable(cand):
            break
        cand = None
    objects[top] = cand or final_object(sig)
    budget_left //= len(objects[top])
    for i in order[1:]:
        covers = _upper_covers(poset, i)
        above = [j for j in poset.elements if j != i and poset.le(i, j)]
        cap = max(1, min(max_size, budget_left))
        candidates = [random_model(sig, rng.randint(1, cap), rng) for _ in range(3)]
        q, _ = random_quotient(objects[rng.choice(covers)], rng, merges=rng.randint(1, 2))
        if len(q) <= cap:
            candidates.insert(rng.randint(0, len(candidates)), q)
        candidates.append(final_object(sig))
        found = None
        for m in candidates:
            if acceptable(m):
                found = _cover_maps(m, covers, objects, maps, above, rng, budget)
                if found is not None:
                    break
        if found is None:
            raise ValueError("no candidate object satisfies the theory")
        objects[i] = m
        budget_left = max(1, budget_left // len(m))
        for c, f in found.items():
            maps[(c, i)] = f
        for j in above:
            if j not in covers:
                c = next(c for c in covers if (j, c) in maps)
                maps[(j, i)] = found[c].after(maps[(j, c)])
    return CofilteredDiagram(poset, objects, maps)


# ----------------------------------------------------------------- formulas

_VARS = ("x", "y", "z")


def _random_term(sig, rng, scope, depth=1):
    options = [Variable(v) for v in scope] + [Constant(c) for c in sorted(sig.constants)]
    if depth > 0 and sig.functions and rng.random() < 0.25:
        name = rng.choice(sorted(sig.functions))
        return Application(name, tuple(_random_term(sig, rng, scope, depth - 1) for _ in range(sig.functions[name])))
    return rng.choice(options)


def _random_atom(sig, rng, scope):
    if sig.relations and rng.random() < 0.6:
        name = rng.choice(sorted(sig.relations))
        return RelationAtom(name, tuple(_random_term(sig, rng, scope) for _ in range(sig.relations[name])))
    return Equality(_random_term(sig, rng, scope), _random_term(sig, rng, scope))


def random_formula(sig, rng, free=(), depth=2, size=4) -> Formula:
    """Random formula whose quantifiers bind names from ``x, y, z``; free variables come from ``free``."""
    rng = _rng(rng)

    def gen(scope, depth, size):
        r = rng.random()
        if not scope and not sig.constants and depth > 0:
            r = 0.95  # nothing to talk about yet: quantify
        if size <= 1 or r < 0.3:
            if not scope and not sig.constants:
                return rng.choice([TRUE, FALSE])
            if rng.random() < 0.05:
                return rng.choice([TRUE, FALSE])
            return _random_atom(sig, rng, scope)
        if r < 0.45:
            return Not(gen(scope, depth, size - 1))
        if r < 0.8 or depth == 0:
            op = rng.choice([And, Or, Implies])
            return op(gen(scope, depth, size // 2), gen(scope, depth, size - size // 2))
        var = rng.choice(_VARS)
        q = rng.choice([Forall, Exists])
        return q(var, gen(tuple(sorted(set(scope) | {var})), depth - 1, size - 1))

    return gen(tuple(free), depth, size)


def formula_corpus(sig: Signature, seed, count: int = 500, max_depth: int = 2) -> list:
    """Distinct formulas of quantifier depth at most ``max_depth``.

    Roughly half are sentences, the rest have one or two free variables
    among ``x, y``.  A fixed block of conjunctive-quantified formulas
    is mixed in so that the restricted Łoś grid is never thin.
    """
    rng = _rng(seed)
    out, seen = [], set()

    def add(f):
        if f not in seen and quantifier_depth(f) <= max_depth and len(all_variables(f)) <= 3:
            seen.add(f)
            out.append(f)

    attempts = 0
    while len(out) < count and attempts < 50 * count:
        attempts += 1
        r = rng.random()
        free = () if r < 0.5 else ("x",) if r < 0.8 else ("x", "y")
        f = random_formula(sig, rng, free, depth=rng.randint(0, max_depth), size=rng.randint(1, 6))
        if r >= 0.5 and f is not None and not free_variables(f):
            continue
        add(f)
        if rng.random() < 0.25:
            add(random_conjunctive(sig, rng, free, depth=rng.randint(0, max_depth)))
    return out


def random_conjunctive(sig, rng, free=(), depth=2, size=4) -> Formula:
    """Random formula built from atoms with ``&``, ``forall`` and ``exists`` only."""
    rng = _rng(rng)

    def gen(scope, depth, size):
        if not scope and not sig.constants:
            if depth == 0:
                return TRUE
            var = rng.choice(_VARS)
            return rng.choice([Forall, Exists])(var, gen((var,), depth - 1, size - 1))
        if size <= 1 or rng.random() < 0.3:
            return _random_atom(sig, rng, scope)
        if depth == 0 or rng.random() < 0.5:
            return And(gen(scope, depth, size // 2), gen(scope, depth, size - size // 2))
        var = rng.choice(_VARS)
        return rng.choice([Forall, Exists])(var, gen(tuple(sorted(set(scope) | {var})), depth - 1, size - 1))

    return gen(tuple(free), depth, size)


def random_ep(sig, rng, scope, depth, size) -> Formula:
    rng = _rng(rng)

    def gen(scope, depth, size):
        if size <= 1 or rng.random() < 0.3:
            if not scope and not sig.constants:
                if depth == 0:
                    return TRUE
                var = rng.choice(_VARS)
                return Exists(var, gen((var,), depth - 1, size - 1))
            return _random_atom(sig, rng, scope)
        r = rng.random()
        if depth > 0 and r < 0.35:
            var = rng.choice(_VARS)
            return Exists(var, gen(tuple(sorted(set(scope) | {var})), depth - 1, size - 1))
        op = And if r < 0.7 else Or
        return op(gen(scope, depth, size // 2), gen(scope, depth, size - size // 2))

    return gen(tuple(scope), depth, size)


def _flat_atom(sig, rng, scope):
    """An atom that is already flat: ``R(vars)``, ``v = w`` or ``v = c``."""
    r = rng.random()
    if sig.relations and r < 0.6:
        name = rng.choice(sorted(sig.relations))
        return RelationAtom(name, tuple(Variable(rng.choice(scope)) for _ in range(sig.relations[name])))
    if sig.constants and r < 0.8:
        return Equality(Variable(rng.choice(scope)), Constant(rng.choice(sorted(sig.constants))))
    return Equality(Variable(rng.choice(scope)), Variable(rng.choice(scope)))


def random_geometric_sentence(sig: Signature, rng, max_depth: int = 2) -> Formula:
    """``forall xs (psi0 -> psi1)`` of quantifier depth at most ``max_depth``.

    ``psi1`` is a disjunction of flat pp formulas with at most two atoms
    each, so every disjunct lies inside the default purity budget.
    """
    rng = _rng(rng)
    n_univ = rng.randint(0, max_depth)
    univ = list(_VARS[:n_univ])
    room = max_depth - n_univ
    psi0 = random_ep(sig, rng, univ, rng.randint(0, room), rng.randint(1, 3)) if (univ or sig.constants or room) else TRUE
    disjuncts = []
    for _ in range(rng.randint(1, 2)):
        k = rng.randint(0, room)
        ex = [v for v in ("u", "v") if v not in univ][:k]
        scope = univ + ex
        if not scope:
            disjuncts.append(TRUE)
            continue
        atoms = [_flat_atom(sig, rng, scope) for _ in range(rng.randint(1, 2))]
        disjuncts.append(exists_all(ex, conjunction(atoms)))
    return forall_all(univ, Implies(psi0, disjunction(disjuncts)))
