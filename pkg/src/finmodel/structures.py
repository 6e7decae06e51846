"""Finite L-structures, model checking and morphism analysis."""
from __future__ import annotations

from functools import lru_cache
from itertools import combinations, combinations_with_replacement, permutations, product
from typing import Callable, Hashable, Iterable, Iterator, Mapping, Sequence

from .formulas import (
    And,
    Application,
    Constant,
    Equality,
    Exists,
    Falsity,
    Forall,
    Formula,
    Implies,
    Not,
    Or,
    RelationAtom,
    Signature,
    Truth,
    Variable,
    check_formula,
    conjunction,
    exists_all,
    free_variables,
    is_sentence,
)


class StructureError(ValueError):
    pass


class EvaluationError(ValueError):
    pass


class Structure:
    """A finite structure with explicit interpretation tables.

    ``universe`` is an ordered sequence of hashable element identifiers;
    ``functions`` maps each function symbol to a total table from argument
    tuples to elements and ``relations`` maps each relation symbol to a set
    of tuples.  Empty universes are only legal for constant-free signatures.
    """

    def __init__(
        self,
        signature: Signature,
        universe: Iterable[Hashable],
        constants: Mapping[str, Hashable] | None = None,
        functions: Mapping[str, Mapping[tuple, Hashable]] | None = None,
        relations: Mapping[str, Iterable[tuple]] | None = None,
        *,
        check: bool = True,
    ):
        self.signature = signature
        self.universe = tuple(universe)
        self._pos = {e: i for i, e in enumerate(self.universe)}
        self.constants = dict(constants or {})
        self._functions = {name: dict(table) for name, table in (functions or {}).items()}
        self._relations = {name: frozenset(tuple(t) for t in ts) for name, ts in (relations or {}).items()}
        if check:
            self.validate()

    # ---- interpretation access; lazy subclasses override these

    @property
    def functions(self) -> dict:
        return self._functions

    @property
    def relations(self) -> dict:
        return self._relations

    def apply(self, symbol: str, args: tuple):
        return self._functions[symbol][args]

    def holds(self, symbol: str, args: tuple) -> bool:
        return args in self._relations[symbol]

    def relation_tuples(self, symbol: str) -> Iterable[tuple]:
        return self._relations[symbol]

    def function_items(self, symbol: str) -> Iterable[tuple]:
        return self._functions[symbol].items()

    # ----

    def validate(self) -> None:
        sig = self.signature
        if len(self._pos) != len(self.universe):
            raise StructureError("universe has repeated elements")
        if not self.universe and sig.constants:
            raise StructureError("a signature with constants has no empty structures")
        if set(self.constants) != set(sig.constants):
            raise StructureError(f"constants interpreted {sorted(self.constants)}, declared {sorted(sig.constants)}")
        for c, e in self.constants.items():
            if e not in self._pos:
                raise StructureError(f"constant {c!r} interpreted outside the universe: {e!r}")
        if set(self._functions) != set(sig.functions):
            raise StructureError(f"functions interpreted {sorted(self._functions)}, declared {sorted(sig.functions)}")
        for name, arity in sig.functions.items():
            table = self._functions[name]
            if len(table) != len(self.universe) ** arity:
                raise StructureError(f"function {name!r} is not total")
            for args, value in table.items():
                if len(args) != arity or any(a not in self._pos for a in args):
                    raise StructureError(f"function {name!r}: bad argument tuple {args!r}")
                if value not in self._pos:
                    raise StructureError(f"function {name!r}: value {value!r} outside the universe")
        if set(self._relations) != set(sig.relations):
            raise StructureError(f"relations interpreted {sorted(self._relations)}, declared {sorted(sig.relations)}")
        for name, arity in sig.relations.items():
            for t in self._relations[name]:
                if len(t) != arity or any(a not in self._pos for a in t):
                    raise StructureError(f"relation {name!r}: bad tuple {t!r}")

    def __len__(self):
        return len(self.universe)

    def __contains__(self, element):
        return element in self._pos

    def __iter__(self):
        return iter(self.universe)

    def position(self, element) -> int:
        return self._pos[element]

    def is_empty(self) -> bool:
        return not self.universe

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Structure):
            return NotImplemented
        return (
            self.signature == other.signature
            and self.universe == other.universe
            and self.constants == other.constants
            and self.functions == other.functions
            and self.relations == other.relations
        )

    __hash__ = object.__hash__

    def __repr__(self):
        return f"<{type(self).__name__} |M|={len(self.universe)} {self.signature!r}>"

    def materialize(self) -> "Structure":
        """Plain table-backed copy (identity for already explicit structures)."""
        if type(self) is Structure:
            return self
        return Structure(
            self.signature,
            self.universe,
            self.constants,
            {name: dict(self.function_items(name)) for name in self.signature.functions},
            {name: set(self.relation_tuples(name)) for name in self.signature.relations},
            check=False,
        )


def substructure(m: Structure, elements: Iterable[Hashable]) -> Structure:
    """Induced substructure on ``elements`` (kept in the order of ``m``), which must be closed."""
    keep = set(elements)
    universe = [e for e in m.universe if e in keep]
    if len(universe) != len(keep):
        raise StructureError("substructure elements must belong to the universe")
    sig = m.signature
    for c, e in m.constants.items():
        if e not in keep:
            raise StructureError(f"constant {c!r} lies outside the subset")
    functions = {}
    for name, arity in sig.functions.items():
        table = {}
        for args in product(universe, repeat=arity):
            value = m.apply(name, args)
            if value not in keep:
                raise StructureError(f"subset not closed under {name!r}")
            table[args] = value
        functions[name] = table
    relations = {}
    for name, arity in sig.relations.items():
        relations[name] = {t for t in m.relation_tuples(name) if all(a in keep for a in t)}
    return Structure(sig, universe, dict(m.constants), functions, relations, check=False)


# ------------------------------------------------------------ evaluation


def _compile_term(t):
    if isinstance(t, Variable):
        name = t.name
        return lambda m, env: env[name]
    if isinstance(t, Constant):
        symbol = t.symbol
        return lambda m, env: m.constants[symbol]
    parts = [_compile_term(a) for a in t.args]
    symbol = t.symbol
    return lambda m, env: m.apply(symbol, tuple(p(m, env) for p in parts))


@lru_cache(maxsize=None)
def _compile(f: Formula) -> Callable:
    if isinstance(f, Equality):
        left, right = _compile_term(f.left), _compile_term(f.right)
        return lambda m, env: left(m, env) == right(m, env)
    if isinstance(f, RelationAtom):
        parts = [_compile_term(a) for a in f.args]
        symbol = f.symbol
        return lambda m, env: m.holds(symbol, tuple(p(m, env) for p in parts))
    if isinstance(f, Truth):
        return lambda m, env: True
    if isinstance(f, Falsity):
        return lambda m, env: False
    if isinstance(f, Not):
        body = _compile(f.body)
        return lambda m, env: not body(m, env)
    if isinstance(f, And):
        a, b = _compile(f.left), _compile(f.right)
        return lambda m, env: a(m, env) and b(m, env)
    if isinstance(f, Or):
        a, b = _compile(f.left), _compile(f.right)
        return lambda m, env: a(m, env) or b(m, env)
    if isinstance(f, Implies):
        a, b = _compile(f.left), _compile(f.right)
        return lambda m, env: (not a(m, env)) or b(m, env)
    if isinstance(f, (Forall, Exists)):
        body = _compile(f.body)
        var = f.var
        test = all if isinstance(f, Forall) else any

        def quantified(m, env):
            saved = env.get(var, _MISSING)
            try:
                return test(body(m, _bind(env, var, e)) for e in m.universe)
            finally:
                if saved is _MISSING:
                    env.pop(var, None)
                else:
                    env[var] = saved

        return quantified
    raise TypeError(f"not a formula: {f!r}")


_MISSING = object()


def _bind(env, var, value):
    env[var] = value
    return env


def evaluate(m: Structure, f: Formula, assignment: Mapping[str, Hashable] | None = None) -> bool:
    """Tarski satisfaction ``m |= f[assignment]`` by exhaustive quantifier expansion."""
    env = dict(assignment or {})
    missing = free_variables(f) - env.keys()
    if missing:
        raise EvaluationError(f"unbound free variables: {sorted(missing)}")
    for var, value in env.items():
        if value not in m:
            raise EvaluationError(f"{var} is assigned {value!r}, which is not in the universe")
    return _compile(f)(m, env)


def satisfying_tuples(m: Structure, f: Formula, variables: Sequence[str]) -> frozenset:
    """All tuples over ``variables`` (covering the free variables) at which ``f`` holds."""
    variables = tuple(variables)
    missing = free_variables(f) - set(variables)
    if missing:
        raise EvaluationError(f"unbound free variables: {sorted(missing)}")
    run = _compile(f)
    out = set()
    for values in product(m.universe, repeat=len(variables)):
        if run(m, dict(zip(variables, values))):
            out.add(values)
    return frozenset(out)


def check_theory(m: Structure, axioms: Iterable[Formula]) -> bool:
    axioms = list(axioms)
    for ax in axioms:
        if not is_sentence(ax):
            raise EvaluationError(f"axiom has free variables: {sorted(free_variables(ax))}")
        check_formula(ax, m.signature)
    return all(evaluate(m, ax) for ax in axioms)


def first_failing_axiom(m: Structure, axioms: Iterable[Formula]):
    for ax in axioms:
        if not evaluate(m, ax):
            return ax
    return None


# ------------------------------------------------------------- morphisms


class MorphismError(ValueError):
    pass


class Morphism:
    """A total function between the universes of two same-signature structures."""

    __slots__ = ("source", "target", "mapping")

    def __init__(self, source: Structure, target: Structure, mapping: Mapping, *, check: bool = True):
        self.source = source
        self.target = target
        self.mapping = dict(mapping)
        if check:
            if source.signature != target.signature:
                raise MorphismError("source and target have different signatures")
            if len(self.mapping) != len(source.universe) or any(e not in self.mapping for e in source.universe):
                raise MorphismError("mapping is not total on the source universe")
            for e, v in self.mapping.items():
                if v not in target:
                    raise MorphismError(f"{e!r} is sent to {v!r}, outside the target")

    def __call__(self, element):
        return self.mapping[element]

    def after(self, other: "Morphism") -> "Morphism":
        """Composite ``self ∘ other``."""
        if other.target is not self.source and other.target != self.source:
            raise MorphismError("morphisms are not composable")
        m = self.mapping
        return Morphism(other.source, self.target, {e: m[v] for e, v in other.mapping.items()}, check=False)

    def __eq__(self, other):
        if not isinstance(other, Morphism):
            return NotImplemented
        return (
            self.mapping == other.mapping
            and (self.source is other.source or self.source == other.source)
            and (self.target is other.target or self.target == other.target)
        )

    __hash__ = object.__hash__

    def is_identity(self) -> bool:
        return all(e == v for e, v in self.mapping.items())

    def is_injective(self) -> bool:
        return len(set(self.mapping.values())) == len(self.mapping)

    def is_surjective(self) -> bool:
        return set(self.mapping.values()) == set(self.target.universe)

    def image(self) -> list:
        seen = set(self.mapping.values())
        return [e for e in self.target.universe if e in seen]

    def __repr__(self):
        return f"<Morphism {len(self.source)} -> {len(self.target)}>"


def identity(m: Structure) -> Morphism:
    return Morphism(m, m, {e: e for e in m.universe}, check=False)


def homomorphism_violation(h: Morphism):
    """First preservation failure of ``h`` as a tuple describing it, or ``None``."""
    src, tgt, f = h.source, h.target, h.mapping
    for c in sorted(src.signature.constants):
        if f[src.constants[c]] != tgt.constants[c]:
            return ("constant", c)
    for name in sorted(src.signature.functions):
        for args, value in src.function_items(name):
            if f[value] != tgt.apply(name, tuple(f[a] for a in args)):
                return ("function", name, args)
    for name in sorted(src.signature.relations):
        for t in src.relation_tuples(name):
            if not tgt.holds(name, tuple(f[a] for a in t)):
                return ("relation", name, t)
    return None


def is_homomorphism(h: Morphism) -> bool:
    return homomorphism_violation(h) is None


def is_embedding(h: Morphism) -> bool:
    """Injective homomorphism that also reflects every relation."""
    if not h.is_injective() or not is_homomorphism(h):
        return False
    src, tgt, f = h.source, h.target, h.mapping
    for name, arity in src.signature.relations.items():
        rel = set(src.relation_tuples(name))
        for t in product(src.universe, repeat=arity):
            if t not in rel and tgt.holds(name, tuple(f[a] for a in t)):
                return False
    return True


def is_isomorphism(h: Morphism) -> bool:
    return is_embedding(h) and h.is_surjective()


# ------------------------------------------------------ backtracking search


def homomorphisms(
    source: Structure,
    target: Structure,
    *,
    fixed: Mapping | None = None,
    domains: Mapping | None = None,
    injective: bool = False,
) -> Iterator[Morphism]:
    """All homomorphisms ``source -> target`` in lexicographic order.

    ``fixed`` pins values, ``domains`` restricts the candidates of
    individual elements; constraints are checked as soon as every element
    they mention has a value.
    """
    elems = list(source.universe)
    pos = {e: i for i, e in enumerate(elems)}
    fixed = dict(fixed or {})
    for c in source.signature.constants:
        e, v = source.constants[c], target.constants[c]
        if fixed.get(e, v) != v:
            return
        fixed[e] = v
    candidates = []
    for e in elems:
        if e in fixed:
            cand = [fixed[e]] if fixed[e] in target else []
        elif domains is not None and e in domains:
            allowed = set(domains[e])
            cand = [v for v in target.universe if v in allowed]
        else:
            cand = list(target.universe)
        candidates.append(cand)
    checks = [[] for _ in elems]
    for name in source.signature.relations:
        for t in source.relation_tuples(name):
            checks[max(pos[a] for a in t)].append((0, name, t, None))
    for name in source.signature.functions:
        for args, value in source.function_items(name):
            checks[max(pos[a] for a in args + (value,))].append((1, name, args, value))

    assignment = {}
    used = set()

    def consistent(i):
        for kind, name, args, value in checks[i]:
            image = tuple(assignment[a] for a in args)
            if kind == 0:
                if not target.holds(name, image):
                    return False
            elif target.apply(name, image) != assignment[value]:
                return False
        return True

    def search(i):
        if i == len(elems):
            yield Morphism(source, target, dict(assignment), check=False)
            return
        e = elems[i]
        for v in candidates[i]:
            if injective and v in used:
                continue
            assignment[e] = v
            used.add(v)
            if consistent(i):
                yield from search(i + 1)
            used.discard(v)
            del assignment[e]

    yield from search(0)


def find_homomorphism(source: Structure, target: Structure, **kwargs) -> Morphism | None:
    return next(homomorphisms(source, target, **kwargs), None)


def find_isomorphism(a: Structure, b: Structure) -> Morphism | None:
    if len(a) != len(b):
        return None
    for h in homomorphisms(a, b, injective=True):
        if is_embedding(h):
            return h
    return None


def find_retraction(s: Morphism) -> Morphism | None:
    """A homomorphism ``r`` with ``r ∘ s = id`` (first in lexicographic order), or ``None``."""
    if not s.is_injective():
        return None
    fixed = {v: e for e, v in s.mapping.items()}
    return find_homomorphism(s.target, s.source, fixed=fixed)


def is_section(s: Morphism) -> bool:
    return is_homomorphism(s) and find_retraction(s) is not None


# ---------------------------------------------------------------- purity


class PPShape:
    """A flat positive-primitive formula ``exists E. conjunction(atoms)``.

    Variables are numbered ``0..n-1``; the atoms are ``("rel", R, vars)``,
    ``("eq", v, w)``, ``("const", v, c)`` and ``("fun", v, f, vars)``
    (meaning ``v = f(vars)``).
    """

    __slots__ = ("atoms", "nvars", "existential", "free")

    def __init__(self, atoms, nvars, existential):
        self.atoms = atoms
        self.nvars = nvars
        self.existential = tuple(existential)
        self.free = tuple(v for v in range(nvars) if v not in set(existential))

    def holds(self, m: Structure, values: Sequence) -> bool:
        for atom in self.atoms:
            kind = atom[0]
            if kind == "rel":
                if not m.holds(atom[1], tuple(values[v] for v in atom[2])):
                    return False
            elif kind == "eq":
                if values[atom[1]] != values[atom[2]]:
                    return False
            elif kind == "const":
                if values[atom[1]] != m.constants[atom[2]]:
                    return False
            elif m.apply(atom[2], tuple(values[v] for v in atom[3])) != values[atom[1]]:
                return False
        return True

    def formula(self) -> Formula:
        name = lambda v: Variable(f"v{v}")
        parts = []
        for atom in self.atoms:
            kind = atom[0]
            if kind == "rel":
                parts.append(RelationAtom(atom[1], tuple(name(v) for v in atom[2])))
            elif kind == "eq":
                parts.append(Equality(name(atom[1]), name(atom[2])))
            elif kind == "const":
                parts.append(Equality(name(atom[1]), Constant(atom[2])))
            else:
                parts.append(Equality(name(atom[1]), Application(atom[2], tuple(name(v) for v in atom[3]))))
        return exists_all([f"v{v}" for v in self.existential], conjunction(parts))


def _templates(sig: Signature) -> list:
    out = [("eq", 2)]
    out += [("const", 1, c) for c in sorted(sig.constants)]
    out += [("rel", arity, name) for name, arity in sorted(sig.relations.items())]
    out += [("fun", arity + 1, name) for name, arity in sorted(sig.functions.items())]
    return out


def _growth_strings(n: int) -> Iterator[tuple]:
    """Restricted growth strings: each set partition of ``range(n)`` once."""

    def rec(prefix, top):
        if len(prefix) == n:
            yield tuple(prefix)
            return
        for v in range(top + 2):
            prefix.append(v)
            yield from rec(prefix, max(top, v))
            prefix.pop()

    yield from rec([], -1)


def _make_atom(template, slots):
    kind = template[0]
    if kind == "eq":
        return ("eq",) + tuple(slots)
    if kind == "const":
        return ("const", slots[0], template[2])
    if kind == "rel":
        return ("rel", template[2], tuple(slots))
    return ("fun", slots[0], template[2], tuple(slots[1:]))


def _atom_vars(atom):
    kind = atom[0]
    if kind == "eq":
        return atom[1:]
    if kind == "const":
        return (atom[1],)
    if kind == "rel":
        return atom[2]
    return (atom[1],) + atom[3]


def _relabel(atoms):
    mapping = {}
    for atom in atoms:
        for v in _atom_vars(atom):
            mapping.setdefault(v, len(mapping))
    out = []
    for atom in atoms:
        kind = atom[0]
        if kind == "eq":
            out.append(("eq", mapping[atom[1]], mapping[atom[2]]))
        elif kind == "const":
            out.append(("const", mapping[atom[1]], atom[2]))
        elif kind == "rel":
            out.append(("rel", atom[1], tuple(mapping[v] for v in atom[2])))
        else:
            out.append(("fun", mapping[atom[1]], atom[2], tuple(mapping[v] for v in atom[3])))
    return tuple(out), len(mapping)


@lru_cache(maxsize=None)
def pp_shapes(sig: Signature, bound: int) -> tuple:
    """Flat pp formulas with at most ``bound`` atoms and ``bound`` quantified variables.

    Enumerated once per variable renaming and atom order.  Every pp formula
    is equivalent to a flat one, so raising ``bound`` exhausts pp(L).
    """
    if bound < 1:
        raise ValueError("purity budget must be at least 1")
    templates = _templates(sig)
    seen = set()
    shapes = []
    for size in range(1, bound + 1):
        for combo in combinations_with_replacement(templates, size):
            widths = [t[1] for t in combo]
            for rgs in _growth_strings(sum(widths)):
                atoms, start = [], 0
                for t, w in zip(combo, widths):
                    atoms.append(_make_atom(t, rgs[start : start + w]))
                    start += w
                if len(set(atoms)) < len(atoms):
                    continue
                key = min(_relabel(p) for p in permutations(atoms))
                if key in seen:
                    continue
                seen.add(key)
                canon, nvars = key
                for k in range(0, min(bound, nvars) + 1):
                    for ex in combinations(range(nvars), k):
                        shapes.append(PPShape(canon, nvars, ex))
    return tuple(shapes)


def _pp_satisfied(shape: PPShape, m: Structure) -> set:
    """Free-variable tuples (in ``shape.free`` order) of ``m`` satisfying ``shape``."""
    out = set()
    for values in product(m.universe, repeat=shape.nvars):
        if shape.holds(m, values):
            out.add(tuple(values[v] for v in shape.free))
    return out


def _pp_holds_at(shape: PPShape, m: Structure, free_values: tuple) -> bool:
    values = [None] * shape.nvars
    for v, x in zip(shape.free, free_values):
        values[v] = x
    for ys in product(m.universe, repeat=len(shape.existential)):
        for v, y in zip(shape.existential, ys):
            values[v] = y
        if shape.holds(m, values):
            return True
    return False


def purity_witness(h: Morphism, bound: int = 2):
    """A pp formula and source tuple whose validity ``h`` fails to reflect, or ``None``.

    ``h`` must be a homomorphism, so preservation is automatic and only
    reflection is checked: ``target |= phi[h(a)]`` must imply ``source |= phi[a]``
    for every enumerated ``phi`` (see :func:`pp_shapes`) and every tuple ``a``.
    """
    src, tgt, f = h.source, h.target, h.mapping
    for shape in pp_shapes(src.signature, bound):
        sat = _pp_satisfied(shape, src)
        for a in product(src.universe, repeat=len(shape.free)):
            if a in sat:
                continue
            if _pp_holds_at(shape, tgt, tuple(f[x] for x in a)):
                assignment = {f"v{v}": x for v, x in zip(shape.free, a)}
                return shape.formula(), assignment
    return None


def is_pure(h: Morphism, bound: int = 2) -> bool:
    if bound < 1:
        raise ValueError("purity budget must be at least 1")
    if not is_homomorphism(h):
        raise MorphismError("purity is only defined here for homomorphisms")
    return purity_witness(h, bound) is None


# -------------------------------------------------------------- quotients


class _UnionFind:
    def __init__(self, items=()):
        self.parent = {x: x for x in items}

    def add(self, x):
        self.parent.setdefault(x, x)

    def find(self, x):
        parent = self.parent
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    def union(self, x, y) -> bool:
        rx, ry = self.find(x), self.find(y)
        if rx == ry:
            return False
        self.parent[ry] = rx
        return True


def quotient(m: Structure, merges: Iterable[tuple] = (), extra_relations: Mapping | None = None):
    """Quotient of ``m`` by the congruence generated by ``merges``.

    Classes are named by their first element in universe order.  Relations
    are the images of those of ``m`` together with ``extra_relations``
    (tuples of ``m``'s elements).  Returns the quotient and the surjective
    quotient homomorphism.
    """
    uf = _UnionFind(m.universe)
    for a, b in merges:
        uf.union(a, b)
    sig = m.signature
    changed = True
    while changed:
        changed = False
        for name in sig.functions:
            seen = {}
            for args, value in m.function_items(name):
                key = tuple(uf.find(a) for a in args)
                if key in seen:
                    changed |= uf.union(seen[key], value)
                else:
                    seen[key] = value
    rep = {}
    for e in m.universe:
        rep.setdefault(uf.find(e), e)
    cls = {e: rep[uf.find(e)] for e in m.universe}
    universe = [e for e in m.universe if cls[e] == e]
    functions = {}
    for name, arity in sig.functions.items():
        functions[name] = {args: cls[m.apply(name, args)] for args in product(universe, repeat=arity)}
    relations = {}
    for name in sig.relations:
        ts = {tuple(cls[a] for a in t) for t in m.relation_tuples(name)}
        for t in (extra_relations or {}).get(name, ()):
            ts.add(tuple(cls[a] for a in t))
        relations[name] = ts
    q = Structure(sig, universe, {c: cls[e] for c, e in m.constants.items()}, functions, relations, check=False)
    return q, Morphism(m, q, cls, check=False)
