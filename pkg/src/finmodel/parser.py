"""Recursive-descent parser for the concrete formula syntax.

Grammar, loosest binding first::

    formula  := disj ('->' formula)?            right associative
    disj     := conj ('|' conj)*
    conj     := unary ('&' unary)*
    unary    := '~' unary | quant | primary
    quant    := ('forall' | 'exists') VAR '.' formula
    primary  := 'true' | 'false' | '(' formula ')' | R '(' terms ')' | term '=' term

A quantifier's scope extends as far right as possible.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

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
)

VARIABLE_RE = re.compile(r"[a-z][a-zA-Z0-9_]*\Z")

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<arrow>->)
  | (?P<punct>[()&|~=,.])
  | (?P<ident>[A-Za-z0-9_][A-Za-z0-9_']*)
    """,
    re.VERBOSE,
)

KEYWORDS = {"forall", "exists", "true", "false"}


class FormulaSyntaxError(ValueError):
    def __init__(self, message: str, position: int, source: str = ""):
        self.position = position
        self.source = source
        super().__init__(f"{message} at position {position}")


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    pos: int


def tokenize(source: str) -> list:
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise FormulaSyntaxError(f"unexpected character {source[pos]!r}", pos, source)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(Token("op" if kind in ("arrow", "punct") else "ident", m.group(), pos))
        pos = m.end()
    tokens.append(Token("eof", "", len(source)))
    return tokens


class _Parser:
    def __init__(self, source: str, sig: Signature):
        self.source = source
        self.sig = sig
        self.tokens = tokenize(source)
        self.i = 0

    def error(self, message, tok=None):
        tok = tok or self.peek()
        return FormulaSyntaxError(message, tok.pos, self.source)

    def peek(self) -> Token:
        return self.tokens[self.i]

    def next(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def accept(self, text):
        if self.peek().kind == "op" and self.peek().text == text:
            return self.next()
        return None

    def expect(self, text):
        tok = self.accept(text)
        if tok is None:
            found = self.peek().text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        return tok

    def parse(self) -> Formula:
        f = self.formula()
        if self.peek().kind != "eof":
            raise self.error(f"unexpected {self.peek().text!r}")
        return f

    def formula(self) -> Formula:
        left = self.disj()
        if self.accept("->"):
            return Implies(left, self.formula())
        return left

    def disj(self) -> Formula:
        f = self.conj()
        while self.accept("|"):
            f = Or(f, self.conj())
        return f

    def conj(self) -> Formula:
        f = self.unary()
        while self.accept("&"):
            f = And(f, self.unary())
        return f

    def unary(self) -> Formula:
        if self.accept("~"):
            return Not(self.unary())
        tok = self.peek()
        if tok.kind == "ident" and tok.text in ("forall", "exists"):
            self.next()
            var_tok = self.next()
            if var_tok.kind != "ident" or not VARIABLE_RE.match(var_tok.text) or var_tok.text in KEYWORDS:
                raise self.error("expected a variable after quantifier", var_tok)
            if self.sig.symbol_kind(var_tok.text) is not None:
                raise self.error(f"cannot quantify over symbol {var_tok.text!r}", var_tok)
            self.expect(".")
            body = self.formula()
            return (Forall if tok.text == "forall" else Exists)(var_tok.text, body)
        return self.primary()

    def primary(self) -> Formula:
        tok = self.peek()
        if tok.kind == "op" and tok.text == "(":
            # a parenthesis opens either a formula or nothing else: terms never start with '('
            self.next()
            f = self.formula()
            self.expect(")")
            return f
        if tok.kind != "ident":
            found = tok.text or "end of input"
            raise self.error(f"expected a formula, found {found!r}")
        if tok.text == "true":
            self.next()
            return TRUE
        if tok.text == "false":
            self.next()
            return FALSE
        if self.sig.symbol_kind(tok.text) == "relation":
            self.next()
            args = self.arguments(tok)
            arity = self.sig.relations[tok.text]
            if len(args) != arity:
                raise self.error(f"arity mismatch: relation {tok.text!r} takes {arity} arguments, got {len(args)}", tok)
            return RelationAtom(tok.text, tuple(args))
        left = self.term()
        eq = self.peek()
        if not self.accept("="):
            raise self.error("expected '=' after term", eq)
        right = self.term()
        return Equality(left, right)

    def arguments(self, head: Token) -> list:
        if not self.accept("("):
            raise self.error(f"expected '(' after {head.text!r}")
        args = [self.term()]
        while self.accept(","):
            args.append(self.term())
        self.expect(")")
        return args

    def term(self):
        tok = self.next()
        if tok.kind != "ident" or tok.text in KEYWORDS:
            found = tok.text or "end of input"
            raise self.error(f"expected a term, found {found!r}", tok)
        kind = self.sig.symbol_kind(tok.text)
        if kind == "constant":
            return Constant(tok.text)
        if kind == "function":
            args = self.arguments(tok)
            arity = self.sig.functions[tok.text]
            if len(args) != arity:
                raise self.error(f"arity mismatch: function {tok.text!r} takes {arity} arguments, got {len(args)}", tok)
            return Application(tok.text, tuple(args))
        if kind == "relation":
            raise self.error(f"relation symbol {tok.text!r} used as a term", tok)
        if self.peek().kind == "op" and self.peek().text == "(":
            raise self.error(f"undeclared symbol {tok.text!r}", tok)
        if not VARIABLE_RE.match(tok.text):
            raise self.error(f"undeclared symbol {tok.text!r}", tok)
        return Variable(tok.text)


def parse_formula(source: str, sig: Signature) -> Formula:
    return _Parser(source, sig).parse()
