"""First-order signatures, terms and formulas.

Formulas are immutable trees of frozen dataclasses.  Besides the AST this
module holds the syntactic classification (positive, existential-positive,
positive-primitive, geometric axiom), free-variable computation, the
rewriting of existential-positive formulas into a disjunction of
positive-primitive ones, and a pretty-printer whose output the parser in
:mod:`finmodel.parser` reads back to the same tree.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import count
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping, Sequence, Union


class SignatureError(ValueError):
    pass


class FormulaError(ValueError):
    pass


@dataclass(frozen=True)
class Signature:
    """A first-order language: constant, function and relation symbols."""

    constants: frozenset = frozenset()
    functions: Mapping[str, int] = field(default_factory=dict)
    relations: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        constants = frozenset(self.constants)
        functions = dict(self.functions)
        relations = dict(self.relations)
        names = list(constants) + list(functions) + list(relations)
        if len(set(names)) != len(names):
            raise SignatureError("symbol names must be distinct across constants, functions and relations")
        for kind, table in (("function", functions), ("relation", relations)):
            for name, arity in table.items():
                if not isinstance(arity, int) or arity < 1:
                    raise SignatureError(f"{kind} {name!r} needs a positive arity, got {arity!r}")
        object.__setattr__(self, "constants", constants)
        object.__setattr__(self, "functions", MappingProxyType(functions))
        object.__setattr__(self, "relations", MappingProxyType(relations))

    def __eq__(self, other):
        if not isinstance(other, Signature):
            return NotImplemented
        return (
            self.constants == other.constants
            and dict(self.functions) == dict(other.functions)
            and dict(self.relations) == dict(other.relations)
        )

    def __hash__(self):
        return hash((self.constants, frozenset(self.functions.items()), frozenset(self.relations.items())))

    def __repr__(self):
        return (
            f"Signature(constants={sorted(self.constants)!r}, "
            f"functions={dict(self.functions)!r}, relations={dict(self.relations)!r})"
        )

    def symbol_kind(self, name: str) -> str | None:
        if name in self.constants:
            return "constant"
        if name in self.functions:
            return "function"
        if name in self.relations:
            return "relation"
        return None


# ---------------------------------------------------------------- terms


@dataclass(frozen=True)
class Variable:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Constant:
    symbol: str

    def __str__(self):
        return self.symbol


@dataclass(frozen=True)
class Application:
    symbol: str
    args: tuple

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))

    def __str__(self):
        return f"{self.symbol}({','.join(map(str, self.args))})"


Term = Union[Variable, Constant, Application]


# ------------------------------------------------------------- formulas


@dataclass(frozen=True)
class Equality:
    left: Term
    right: Term


@dataclass(frozen=True)
class RelationAtom:
    symbol: str
    args: tuple

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))


@dataclass(frozen=True)
class Truth:
    pass


@dataclass(frozen=True)
class Falsity:
    pass


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Not:
    body: "Formula"


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Forall:
    var: str
    body: "Formula"


@dataclass(frozen=True)
class Exists:
    var: str
    body: "Formula"


Formula = Union[Equality, RelationAtom, Truth, Falsity, And, Or, Not, Implies, Forall, Exists]

ATOMS = (Equality, RelationAtom)
BINARY = (And, Or, Implies)
QUANTIFIERS = (Forall, Exists)

TRUE = Truth()
FALSE = Falsity()


def conjunction(parts: Sequence[Formula]) -> Formula:
    """Right-nested conjunction; the empty conjunction is ``true``."""
    parts = list(parts)
    if not parts:
        return TRUE
    result = parts[-1]
    for part in reversed(parts[:-1]):
        result = And(part, result)
    return result


def disjunction(parts: Sequence[Formula]) -> Formula:
    parts = list(parts)
    if not parts:
        return FALSE
    result = parts[-1]
    for part in reversed(parts[:-1]):
        result = Or(part, result)
    return result


def exists_all(variables: Iterable[str], body: Formula) -> Formula:
    for var in reversed(list(variables)):
        body = Exists(var, body)
    return body


def forall_all(variables: Iterable[str], body: Formula) -> Formula:
    for var in reversed(list(variables)):
        body = Forall(var, body)
    return body


# ------------------------------------------------------------ traversal


def term_variables(t: Term) -> set:
    if isinstance(t, Variable):
        return {t.name}
    if isinstance(t, Constant):
        return set()
    out = set()
    for arg in t.args:
        out |= term_variables(arg)
    return out


def free_variables(f: Formula) -> frozenset:
    if isinstance(f, Equality):
        return frozenset(term_variables(f.left) | term_variables(f.right))
    if isinstance(f, RelationAtom):
        out = set()
        for arg in f.args:
            out |= term_variables(arg)
        return frozenset(out)
    if isinstance(f, (Truth, Falsity)):
        return frozenset()
    if isinstance(f, Not):
        return free_variables(f.body)
    if isinstance(f, BINARY):
        return free_variables(f.left) | free_variables(f.right)
    if isinstance(f, QUANTIFIERS):
        return free_variables(f.body) - {f.var}
    raise TypeError(f"not a formula: {f!r}")


def is_sentence(f: Formula) -> bool:
    return not free_variables(f)


def all_variables(f: Formula) -> set:
    """Every variable name occurring in ``f``, bound or free."""
    out = set(free_variables(f))
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, QUANTIFIERS):
            out.add(g.var)
            stack.append(g.body)
        elif isinstance(g, Not):
            stack.append(g.body)
        elif isinstance(g, BINARY):
            stack.extend((g.left, g.right))
    return out


def quantifier_depth(f: Formula) -> int:
    if isinstance(f, QUANTIFIERS):
        return 1 + quantifier_depth(f.body)
    if isinstance(f, Not):
        return quantifier_depth(f.body)
    if isinstance(f, BINARY):
        return max(quantifier_depth(f.left), quantifier_depth(f.right))
    return 0


def subformulas(f: Formula) -> Iterator[Formula]:
    yield f
    if isinstance(f, QUANTIFIERS) or isinstance(f, Not):
        yield from subformulas(f.body)
    elif isinstance(f, BINARY):
        yield from subformulas(f.left)
        yield from subformulas(f.right)


def check_term(t: Term, sig: Signature) -> None:
    if isinstance(t, Variable):
        return
    if isinstance(t, Constant):
        if t.symbol not in sig.constants:
            raise FormulaError(f"undeclared constant {t.symbol!r}")
        return
    arity = sig.functions.get(t.symbol)
    if arity is None:
        raise FormulaError(f"undeclared function symbol {t.symbol!r}")
    if arity != len(t.args):
        raise FormulaError(f"function {t.symbol!r} has arity {arity}, applied to {len(t.args)} arguments")
    for arg in t.args:
        check_term(arg, sig)


def check_formula(f: Formula, sig: Signature) -> None:
    """Raise :class:`FormulaError` unless every symbol is declared with the right arity."""
    for g in subformulas(f):
        if isinstance(g, Equality):
            check_term(g.left, sig)
            check_term(g.right, sig)
        elif isinstance(g, RelationAtom):
            arity = sig.relations.get(g.symbol)
            if arity is None:
                raise FormulaError(f"undeclared relation symbol {g.symbol!r}")
            if arity != len(g.args):
                raise FormulaError(f"relation {g.symbol!r} has arity {arity}, applied to {len(g.args)} arguments")
            for arg in g.args:
                check_term(arg, sig)


# -------------------------------------------------------- classification


@dataclass(frozen=True)
class FormulaClass:
    is_atomic: bool
    is_positive: bool
    is_existential_positive: bool
    is_positive_primitive: bool
    is_geometric_axiom: bool

    def labels(self) -> list:
        names = [
            ("atomic", self.is_atomic),
            ("positive", self.is_positive),
            ("existential-positive", self.is_existential_positive),
            ("positive-primitive", self.is_positive_primitive),
            ("geometric-axiom", self.is_geometric_axiom),
        ]
        return [name for name, flag in names if flag]


def _uses_only(f: Formula, allowed: tuple) -> bool:
    return all(isinstance(g, ATOMS + allowed) for g in subformulas(f))


def is_positive(f: Formula) -> bool:
    # both quantifiers admitted; falsity excluded so positive formulas hold in the final object
    return _uses_only(f, (Truth, And, Or, Forall, Exists))


def is_existential_positive(f: Formula) -> bool:
    return _uses_only(f, (Truth, And, Or, Exists))


def is_positive_primitive(f: Formula) -> bool:
    while isinstance(f, Exists):
        f = f.body
    return _uses_only(f, (Truth, And))


def is_conjunctive_quantified(f: Formula) -> bool:
    """Built from atoms and ``true`` using only conjunction and both quantifiers."""
    return _uses_only(f, (Truth, And, Forall, Exists))


def geometric_parts(f: Formula):
    """Split ``forall xs. (premise -> conclusion)``; ``None`` if ``f`` has another shape."""
    variables = []
    while isinstance(f, Forall):
        variables.append(f.var)
        f = f.body
    if not isinstance(f, Implies):
        return None
    return variables, f.left, f.right


def is_geometric_axiom(f: Formula) -> bool:
    parts = geometric_parts(f)
    if parts is None or not is_sentence(f):
        return False
    _, premise, conclusion = parts
    return is_existential_positive(premise) and is_existential_positive(conclusion)


def classify(f: Formula) -> FormulaClass:
    return FormulaClass(
        is_atomic=isinstance(f, ATOMS),
        is_positive=is_positive(f),
        is_existential_positive=is_existential_positive(f),
        is_positive_primitive=is_positive_primitive(f),
        is_geometric_axiom=is_geometric_axiom(f),
    )


# ------------------------------------------- e.p. -> disjunction of p.p.


def _fresh_names(used: set, base: str) -> Iterator[str]:
    root = base.rstrip("0123456789") or "v"
    for n in count(1):
        name = f"{root}{n}"
        if name not in used:
            used.add(name)
            yield name


def rename_term(t: Term, mapping: Mapping[str, str]) -> Term:
    if isinstance(t, Variable):
        return Variable(mapping.get(t.name, t.name))
    if isinstance(t, Constant):
        return t
    return Application(t.symbol, tuple(rename_term(a, mapping) for a in t.args))


def rename_atom(a: Formula, mapping: Mapping[str, str]) -> Formula:
    if isinstance(a, Equality):
        return Equality(rename_term(a.left, mapping), rename_term(a.right, mapping))
    if isinstance(a, RelationAtom):
        return RelationAtom(a.symbol, tuple(rename_term(t, mapping) for t in a.args))
    return a


class _Disjunct:
    """``exists variables. conjunction(atoms)``."""

    __slots__ = ("variables", "atoms")

    def __init__(self, variables, atoms):
        self.variables = list(variables)
        self.atoms = list(atoms)

    def free(self) -> set:
        out = set()
        for a in self.atoms:
            out |= free_variables(a)
        return out - set(self.variables)

    def renamed(self, clashes: set, used: set) -> "_Disjunct":
        mapping = {}
        for v in self.variables:
            if v in clashes:
                mapping[v] = next(_fresh_names(used, v))
        if not mapping:
            return self
        return _Disjunct([mapping.get(v, v) for v in self.variables], [rename_atom(a, mapping) for a in self.atoms])

    def to_formula(self) -> Formula:
        return exists_all(self.variables, conjunction(self.atoms))


def _dnf(f: Formula, used: set) -> list:
    if isinstance(f, ATOMS):
        return [_Disjunct([], [f])]
    if isinstance(f, Truth):
        return [_Disjunct([], [])]
    if isinstance(f, Or):
        return _dnf(f.left, used) + _dnf(f.right, used)
    if isinstance(f, And):
        out = []
        for d1 in _dnf(f.left, used):
            for d2 in _dnf(f.right, used):
                # keep each side's bound variables away from the other side
                d1r = d1.renamed(set(d1.variables) & d2.free(), used)
                d2r = d2.renamed(set(d2.variables) & (set(d1r.variables) | d1r.free()), used)
                out.append(_Disjunct(d1r.variables + d2r.variables, d1r.atoms + d2r.atoms))
        return out
    if isinstance(f, Exists):
        out = []
        for d in _dnf(f.body, used):
            var = f.var
            if var in d.variables:
                # outer quantifier is vacuous; keep it under a fresh name
                var = next(_fresh_names(used, var))
            out.append(_Disjunct([var] + d.variables, d.atoms))
        return out
    raise FormulaError(f"not existential-positive: {type(f).__name__} occurs")


def ep_to_pp_disjunction(f: Formula) -> list:
    """Positive-primitive formulas whose disjunction is equivalent to ``f``.

    Existential quantifiers are pushed through disjunctions and
    conjunctions are distributed over disjunctions; bound variables are
    renamed only where two conjuncts would capture each other.  The result
    is equivalent to ``f`` in every structure, the empty one included.
    """
    if not is_existential_positive(f):
        raise FormulaError("ep_to_pp_disjunction needs an existential-positive formula")
    used = all_variables(f)
    return [d.to_formula() for d in _dnf(f, used)]


# -------------------------------------------------------------- printing

_PREC = {Implies: 1, Or: 2, And: 3}
_OPS = {Implies: "->", Or: "|", And: "&"}


def term_to_text(t: Term) -> str:
    return str(t)


def to_text(f: Formula) -> str:
    """Concrete syntax accepted by :func:`finmodel.parser.parse_formula`."""
    if isinstance(f, Equality):
        return f"{term_to_text(f.left)} = {term_to_text(f.right)}"
    if isinstance(f, RelationAtom):
        return f"{f.symbol}({','.join(term_to_text(a) for a in f.args)})"
    if isinstance(f, Truth):
        return "true"
    if isinstance(f, Falsity):
        return "false"
    if isinstance(f, QUANTIFIERS):
        word = "forall" if isinstance(f, Forall) else "exists"
        return f"{word} {f.var}. {to_text(f.body)}"
    if isinstance(f, Not):
        inner = to_text(f.body)
        if isinstance(f.body, ATOMS + (Truth, Falsity, Not)):
            return f"~{inner}"
        return f"~({inner})"
    if isinstance(f, BINARY):
        op = type(f)
        prec = _PREC[op]

        def side(g, is_left):
            text = to_text(g)
            if isinstance(g, QUANTIFIERS):
                return f"({text})"
            if isinstance(g, BINARY):
                gp = _PREC[type(g)]
                if gp < prec:
                    return f"({text})"
                if gp == prec:
                    # & and | associate left, -> associates right
                    if (op is Implies) == is_left:
                        return f"({text})"
            return text

        return f"{side(f.left, True)} {_OPS[op]} {side(f.right, False)}"
    raise TypeError(f"not a formula: {f!r}")
