"""Bundled signatures and small named structures."""
from __future__ import annotations

from .formulas import Signature
from .structures import Structure

GRAPH = Signature(frozenset(), {}, {"E": 2})
POINTED_GRAPH = Signature(frozenset({"c"}), {}, {"E": 2})
# special-groups language: constants 1 and -1, multiplication, isometry of binary forms
LSG = Signature(frozenset({"one", "minus_one"}), {"mul": 2}, {"Iso": 4})

SIGNATURES = {"graph": GRAPH, "pointed_graph": POINTED_GRAPH, "lsg": LSG}


def k2() -> Structure:
    """Two vertices joined by an edge in both directions."""
    return Structure(GRAPH, [0, 1], relations={"E": {(0, 1), (1, 0)}})


def graph(universe, edges) -> Structure:
    return Structure(GRAPH, universe, relations={"E": set(edges)})


def empty_graph() -> Structure:
    return Structure(GRAPH, [], relations={"E": set()})


def z2_lsg() -> Structure:
    """``{1, -1}`` under multiplication; ``Iso(a,b,c,d)`` iff ``ab = cd`` and ``{a,b} = {c,d}``."""
    u = [1, -1]
    mul = {(a, b): a * b for a in u for b in u}
    iso = {(a, b, c, d) for a in u for b in u for c in u for d in u if a * b == c * d and {a, b} == {c, d}}
    return Structure(LSG, u, {"one": 1, "minus_one": -1}, {"mul": mul}, {"Iso": iso})
