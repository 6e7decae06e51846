"""Line-oriented text format for signatures, structures, posets, diagrams.

::

    # comment
    signature graph { relation E/2; }
    structure K2 : graph { universe 0 1; E = { (0,1) (1,0) }; }
    poset chain { elements 1 2 3; leq 1<=2 2<=3; }
    diagram D : graph over chain { object 1 = A; object 2 = B; map 2->1 { a->x b->y }; }
    family F : graph { 1 = A; 2 = B; }
    morphism h : A -> B { a->x b->y }

Bare words made of digits are read as integers.  Diagram direction
follows the arrows (``map j->i`` with ``i <= j`` is cofiltered); a
diagram without arrows may say ``filtered`` or ``cofiltered`` after the
poset name and is cofiltered otherwise.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from itertools import product as cartesian
from pathlib import Path

from .constructions import CofilteredDiagram, Diagram, DiagramError, FilteredDiagram
from .formulas import Signature, SignatureError
from .library import SIGNATURES
from .orders import OrderError, Poset
from .structures import Morphism, MorphismError, Structure, StructureError


class LoadError(ValueError):
    def __init__(self, message: str, source: str = "<input>", line: int = 0, col: int = 0):
        self.message = message
        self.source = source
        self.line = line
        self.col = col
        super().__init__(f"{source}:{line}:{col}: {message}")


_TOKEN = re.compile(
    r"(?P<ws>[ \t\r]+)|(?P<nl>\n)|(?P<comment>#[^\n]*)"
    r"|(?P<op>->|<=|[{}();,:=/])"
    r"|(?P<word>-?[A-Za-z0-9_'.+]+)"
)


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokens(text: str, source: str) -> list:
    out, pos, line, col0 = [], 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise LoadError(f"unexpected character {text[pos]!r}", source, line, pos - col0 + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            col0 = m.end()
        elif kind in ("op", "word"):
            out.append(_Tok(kind, m.group(), line, pos - col0 + 1))
        pos = m.end()
    out.append(_Tok("eof", "", line, pos - col0 + 1))
    return out


def _atom(text: str):
    return int(text) if re.fullmatch(r"-?[0-9]+", text) else text


# signatures of the bundled library may be used without a declaration
BUILTIN = "<builtin>"


@dataclass
class Workspace:
    signatures: dict = field(default_factory=dict)
    structures: dict = field(default_factory=dict)
    posets: dict = field(default_factory=dict)
    diagrams: dict = field(default_factory=dict)
    families: dict = field(default_factory=dict)
    morphisms: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def lookup(self, kind: str, name: str):
        table = getattr(self, kind)
        if name not in table:
            known = ", ".join(sorted(map(str, table))) or "none"
            raise KeyError(f"no {kind[:-1]} named {name!r} (known: {known})")
        return table[name]

    def signature_name(self, sig: Signature) -> str | None:
        for name, s in self.signatures.items():
            if s == sig:
                return name
        return None


class _Reader:
    def __init__(self, text: str, source: str, ws: Workspace):
        self.toks = _tokens(text, source)
        self.i = 0
        self.source = source
        self.ws = ws

    def error(self, message, tok=None):
        tok = tok or self.peek()
        return LoadError(message, self.source, tok.line, tok.col)

    def peek(self, k=0):
        return self.toks[self.i + k]

    def next(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def at(self, text):
        t = self.peek()
        return t.kind != "eof" and t.text == text

    def expect(self, text):
        tok = self.next()
        if tok.text != text or tok.kind == "eof":
            raise self.error(f"expected {text!r}, found {tok.text or 'end of input'!r}", tok)
        return tok

    def word(self, what="a name"):
        tok = self.next()
        if tok.kind != "word":
            raise self.error(f"expected {what}, found {tok.text or 'end of input'!r}", tok)
        return tok

    def define(self, kind, name_tok, value):
        table = getattr(self.ws, kind)
        builtin = self.ws.provenance.get((kind, name_tok.text)) == BUILTIN
        if builtin and table[name_tok.text] == value:
            return
        if name_tok.text in table:
            where = self.ws.provenance.get((kind, name_tok.text), "?")
            raise self.error(f"{kind[:-1]} {name_tok.text!r} already defined at {where}", name_tok)
        table[name_tok.text] = value
        self.ws.provenance[(kind, name_tok.text)] = f"{self.source}:{name_tok.line}"

    def resolve(self, kind, tok):
        table = getattr(self.ws, kind)
        if kind == "signatures" and tok.text not in table and tok.text in SIGNATURES:
            table[tok.text] = SIGNATURES[tok.text]
            self.ws.provenance[(kind, tok.text)] = BUILTIN
        if tok.text not in table:
            raise self.error(f"undeclared {kind[:-1]} {tok.text!r}", tok)
        return table[tok.text]

    # ---- items

    def read(self):
        while self.peek().kind != "eof":
            tok = self.word("a declaration keyword")
            handler = getattr(self, f"_item_{tok.text}", None)
            if handler is None:
                raise self.error(f"unknown declaration {tok.text!r}", tok)
            handler(tok)

    def _item_signature(self, head):
        name = self.word("a signature name")
        self.expect("{")
        constants, functions, relations = [], {}, {}
        while not self.at("}"):
            kind = self.word("constant, function or relation")
            sym = self.word("a symbol name")
            if kind.text == "constant":
                constants.append(sym.text)
            elif kind.text in ("function", "relation"):
                self.expect("/")
                arity_tok = self.word("an arity")
                if not arity_tok.text.isdigit():
                    raise self.error("arity must be a positive integer", arity_tok)
                (functions if kind.text == "function" else relations)[sym.text] = int(arity_tok.text)
            else:
                raise self.error(f"expected constant, function or relation, found {kind.text!r}", kind)
            self.expect(";")
        self.expect("}")
        try:
            sig = Signature(frozenset(constants), functions, relations)
        except SignatureError as exc:
            raise self.error(str(exc), name) from None
        if len(set(constants)) != len(constants):
            raise self.error("repeated constant symbol", name)
        self.define("signatures", name, sig)

    def _tuple(self):
        self.expect("(")
        items = [_atom(self.word("an element").text)]
        while self.at(","):
            self.next()
            items.append(_atom(self.word("an element").text))
        self.expect(")")
        return tuple(items)

    def _args(self):
        """A function argument list: ``(a,b)`` or a bare element for unary symbols."""
        if self.at("("):
            return self._tuple()
        return (_atom(self.word("an element").text),)

    def _item_structure(self, head):
        name = self.word("a structure name")
        self.expect(":")
        sig_tok = self.word("a signature name")
        sig = self.resolve("signatures", sig_tok)
        self.expect("{")
        universe = None
        constants, functions, relations = {}, {}, {}
        while not self.at("}"):
            key = self.word("universe or a symbol")
            if key.text == "universe" and sig.symbol_kind("universe") is None:
                universe = []
                while not self.at(";"):
                    universe.append(_atom(self.word("an element").text))
                self.expect(";")
                continue
            kind = sig.symbol_kind(key.text)
            if kind is None:
                raise self.error(f"symbol {key.text!r} is not declared in signature {sig_tok.text!r}", key)
            self.expect("=")
            if kind == "constant":
                constants[key.text] = _atom(self.word("an element").text)
            elif kind == "function":
                self.expect("{")
                table = {}
                while not self.at("}"):
                    args = self._args()
                    self.expect("->")
                    table[args] = _atom(self.word("an element").text)
                self.expect("}")
                functions[key.text] = table
            else:
                self.expect("{")
                ts = set()
                while not self.at("}"):
                    ts.add(self._tuple())
                self.expect("}")
                relations[key.text] = ts
            self.expect(";")
        self.expect("}")
        if universe is None:
            raise self.error("structure has no universe line", name)
        for rel in sig.relations:
            relations.setdefault(rel, set())
        try:
            m = Structure(sig, universe, constants, functions, relations)
        except StructureError as exc:
            raise self.error(f"structure {name.text!r}: {exc}", name) from None
        self.define("structures", name, m)

    def _item_poset(self, head):
        name = self.word("a poset name")
        self.expect("{")
        elements, pairs = None, []
        while not self.at("}"):
            key = self.word("elements or leq")
            if key.text == "elements":
                elements = []
                while not self.at(";"):
                    elements.append(_atom(self.word("an element").text))
            elif key.text == "leq":
                while not self.at(";"):
                    a = _atom(self.word("an element").text)
                    self.expect("<=")
                    b = _atom(self.word("an element").text)
                    pairs.append((a, b))
            else:
                raise self.error(f"expected elements or leq, found {key.text!r}", key)
            self.expect(";")
        self.expect("}")
        if elements is None:
            raise self.error("poset has no elements line", name)
        try:
            p = Poset.from_relation(elements, pairs)
        except OrderError as exc:
            raise self.error(f"poset {name.text!r}: {exc}", name) from None
        self.define("posets", name, p)

    def _mapping(self):
        self.expect("{")
        mapping = {}
        while not self.at("}"):
            a = _atom(self.word("an element").text)
            self.expect("->")
            mapping[a] = _atom(self.word("an element").text)
        self.expect("}")
        return mapping

    def _item_diagram(self, head):
        name = self.word("a diagram name")
        self.expect(":")
        sig = self.resolve("signatures", self.word("a signature name"))
        over = self.word("'over'")
        if over.text != "over":
            raise self.error("expected 'over'", over)
        poset = self.resolve("posets", self.word("a poset name"))
        direction = None
        if self.peek().kind == "word" and self.peek().text in ("filtered", "cofiltered"):
            direction = self.next().text
        self.expect("{")
        objects, raw_maps = {}, []
        while not self.at("}"):
            key = self.word("object or map")
            if key.text == "object":
                idx_tok = self.word("an index")
                idx = _atom(idx_tok.text)
                if idx not in poset.elements:
                    raise self.error(f"index {idx_tok.text!r} is not in the poset", idx_tok)
                self.expect("=")
                st_tok = self.word("a structure name")
                m = self.resolve("structures", st_tok)
                if m.signature != sig:
                    raise self.error(f"structure {st_tok.text!r} has a different signature", st_tok)
                objects[idx] = m
                self.expect(";")
            elif key.text == "map":
                a_tok = self.word("an index")
                self.expect("->")
                b_tok = self.word("an index")
                mapping = self._mapping()
                if self.at(";"):
                    self.next()
                raw_maps.append((a_tok, _atom(a_tok.text), _atom(b_tok.text), mapping))
            else:
                raise self.error(f"expected object or map, found {key.text!r}", key)
        self.expect("}")
        missing = [i for i in poset.elements if i not in objects]
        if missing:
            raise self.error(f"diagram {name.text!r} has no object at {missing[0]!r}", name)
        for tok, a, b, _ in raw_maps:
            if a not in poset.elements or b not in poset.elements:
                raise self.error(f"map {a!r}->{b!r} mentions an index outside the poset", tok)
            guess = "filtered" if poset.le(a, b) and a != b else "cofiltered" if poset.le(b, a) and a != b else None
            if guess is None:
                raise self.error(f"indices {a!r} and {b!r} are not strictly comparable", tok)
            if direction is None:
                direction = guess
            elif direction != guess:
                raise self.error(f"map {a!r}->{b!r} runs against the diagram's direction", tok)
        cls = FilteredDiagram if direction == "filtered" else CofilteredDiagram
        maps = {}
        for tok, a, b, mapping in raw_maps:
            try:
                maps[(a, b)] = Morphism(objects[a], objects[b], mapping)
            except MorphismError as exc:
                raise self.error(f"map {a!r}->{b!r}: {exc}", tok) from None
        try:
            d = cls(poset, objects, maps)
        except DiagramError as exc:
            raise self.error(f"diagram {name.text!r}: {exc}", name) from None
        self.define("diagrams", name, d)

    def _item_family(self, head):
        name = self.word("a family name")
        self.expect(":")
        sig = self.resolve("signatures", self.word("a signature name"))
        self.expect("{")
        family = {}
        while not self.at("}"):
            idx = _atom(self.word("an index").text)
            self.expect("=")
            st_tok = self.word("a structure name")
            m = self.resolve("structures", st_tok)
            if m.signature != sig:
                raise self.error(f"structure {st_tok.text!r} has a different signature", st_tok)
            family[idx] = m
            self.expect(";")
        self.expect("}")
        self.define("families", name, family)

    def _item_morphism(self, head):
        name = self.word("a morphism name")
        self.expect(":")
        src = self.resolve("structures", self.word("a structure name"))
        self.expect("->")
        tgt = self.resolve("structures", self.word("a structure name"))
        mapping = self._mapping()
        try:
            h = Morphism(src, tgt, mapping)
        except MorphismError as exc:
            raise self.error(f"morphism {name.text!r}: {exc}", name) from None
        self.define("morphisms", name, h)


def loads(text: str, source: str = "<input>", workspace: Workspace | None = None) -> Workspace:
    ws = workspace if workspace is not None else Workspace()
    _Reader(text, source, ws).read()
    return ws


def load(paths, workspace: Workspace | None = None) -> Workspace:
    """Read every file into one workspace; later files may refer to earlier names."""
    ws = workspace if workspace is not None else Workspace()
    for path in paths:
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise LoadError(f"cannot read file: {exc.strerror}", str(path)) from None
        loads(text, str(path), ws)
    return ws


def bundled_examples_path() -> Path:
    return Path(__file__).with_name("data") / "examples.fm"


def load_examples(workspace: Workspace | None = None) -> Workspace:
    return load([bundled_examples_path()], workspace)


# ------------------------------------------------------------------ dumping

_WORD = re.compile(r"-?[A-Za-z0-9_'.+]+\Z")


def element_names(m: Structure) -> dict:
    """Printable names: elements already shaped like words keep theirs, otherwise ``e0, e1, ...``."""
    plain = all(isinstance(e, (int, str)) and _WORD.match(str(e)) for e in m.universe)
    texts = [str(e) for e in m.universe]
    if plain and len(set(texts)) == len(texts):
        return {e: str(e) for e in m.universe}
    return {e: f"e{k}" for k, e in enumerate(m.universe)}


def dump_structure(name: str, m: Structure, sig_name: str, names: dict | None = None) -> str:
    names = names or element_names(m)
    lines = []
    if any(names[e] != str(e) for e in m.universe):
        for e in m.universe:
            lines.append(f"# {names[e]} = {e!r}")
    lines.append(f"structure {name} : {sig_name} {{")
    lines.append("  universe " + " ".join(names[e] for e in m.universe) + ";")
    for c in sorted(m.signature.constants):
        lines.append(f"  {c} = {names[m.constants[c]]};")
    for f, n in sorted(m.signature.functions.items()):
        entries = []
        for args in cartesian(m.universe, repeat=n):
            arg_text = "(" + ",".join(names[a] for a in args) + ")"
            entries.append(f"{arg_text}->{names[m.apply(f, args)]}")
        lines.append(f"  {f} = {{ " + " ".join(entries) + " };")
    for r in sorted(m.signature.relations):
        order = {e: k for k, e in enumerate(m.universe)}
        ts = sorted(m.relation_tuples(r), key=lambda t: [order[a] for a in t])
        lines.append(f"  {r} = {{ " + " ".join("(" + ",".join(names[a] for a in t) + ")" for t in ts) + " };")
    lines.append("}")
    return "\n".join(lines)


def dump_signature(name: str, sig: Signature) -> str:
    parts = [f"constant {c};" for c in sorted(sig.constants)]
    parts += [f"function {f}/{n};" for f, n in sorted(sig.functions.items())]
    parts += [f"relation {r}/{n};" for r, n in sorted(sig.relations.items())]
    return f"signature {name} {{ " + " ".join(parts) + " }"


def dump_poset(name: str, p: Poset) -> str:
    covers = " ".join(f"{a}<={b}" for a, b in p.covers())
    return f"poset {name} {{ elements {' '.join(map(str, p.elements))}; leq {covers}; }}"


def dump_diagram(name: str, d: Diagram, sig_name: str, poset_name: str | None = None) -> str:
    """Objects as separate structures ``<name>_<index>``, then the poset and the cover maps."""
    poset_name = poset_name or f"{name}_shape"
    out = []
    obj_names = {}
    for i in d.poset.elements:
        obj_names[i] = f"{name}_{i}"
        out.append(dump_structure(obj_names[i], d.objects[i], sig_name))
    out.append(dump_poset(poset_name, d.poset))
    kind = "filtered" if d.upward else "cofiltered"
    lines = [f"diagram {name} : {sig_name} over {poset_name} {kind} {{"]
    for i in d.poset.elements:
        lines.append(f"  object {i} = {obj_names[i]};")
    for a, b in d.covers():
        h = d.arrow(a, b)
        src, tgt = element_names(h.source), element_names(h.target)
        pairs = " ".join(f"{src[x]}->{tgt[h(x)]}" for x in h.source.universe)
        lines.append(f"  map {a}->{b} {{ {pairs} }};")
    lines.append("}")
    out.append("\n".join(lines))
    return "\n".join(out) + "\n"
