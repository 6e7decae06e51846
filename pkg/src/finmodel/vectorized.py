"""Array-based satisfaction: every assignment at once.

A formula over variables ``x1..xk`` becomes a boolean array with one
axis per variable; quantifiers reduce their axis with ``any``/``all``
(keeping it as a length-1 axis so shadowed names stay correct).  This
is a second evaluator, independent of the recursive one in
:mod:`finmodel.structures`, and fast enough for exhaustive grids.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .formulas import (
    And,
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
    Truth,
    Variable,
    all_variables,
    free_variables,
)


@dataclass
class StructureArrays:
    """Interpretations over element positions ``0..n-1``."""

    size: int
    constants: dict
    functions: dict
    relations: dict


def build_arrays(m) -> StructureArrays:
    """Arrays for any structure exposing the table API (cached on ``m``)."""
    cached = getattr(m, "_array_cache", None)
    if cached is not None:
        return cached
    builder = getattr(m, "_build_arrays", None)
    arrays = builder() if builder is not None else _generic_arrays(m)
    m._array_cache = arrays
    return arrays


def _generic_arrays(m) -> StructureArrays:
    n = len(m.universe)
    pos = m.position
    sig = m.signature
    constants = {c: pos(e) for c, e in m.constants.items()}
    functions = {}
    for name, arity in sig.functions.items():
        table = np.zeros((n,) * arity, dtype=np.intp)
        for args, value in m.function_items(name):
            table[tuple(pos(a) for a in args)] = pos(value)
        functions[name] = table
    relations = {}
    for name, arity in sig.relations.items():
        rel = np.zeros((n,) * arity, dtype=bool)
        for t in m.relation_tuples(name):
            rel[tuple(pos(a) for a in t)] = True
        relations[name] = rel
    return StructureArrays(n, constants, functions, relations)


def product_arrays(signature, factors) -> StructureArrays:
    """Arrays of the coordinatewise product, elements in lexicographic order."""
    parts = [build_arrays(f) for f in factors]
    sizes = [p.size for p in parts]
    n = int(np.prod(sizes, dtype=np.int64))
    # coordinate k of element e (mixed radix, last factor fastest)
    coords = np.indices(sizes, dtype=np.intp).reshape(len(sizes), -1)
    weights = [int(np.prod(sizes[k + 1 :], dtype=np.int64)) for k in range(len(sizes))]
    constants, functions, relations = {}, {}, {}
    for c in signature.constants:
        constants[c] = sum(p.constants[c] * w for p, w in zip(parts, weights))
    for name, arity in signature.functions.items():
        acc = np.zeros((n,) * arity, dtype=np.intp)
        for k, (p, w) in enumerate(zip(parts, weights)):
            idx = np.ix_(*([coords[k]] * arity))
            acc += p.functions[name][idx] * w
        functions[name] = acc
    for name, arity in signature.relations.items():
        acc = np.ones((n,) * arity, dtype=bool)
        for k, p in enumerate(parts):
            idx = np.ix_(*([coords[k]] * arity))
            acc &= p.relations[name][idx]
        relations[name] = acc
    return StructureArrays(n, constants, functions, relations)


def _axis_shape(nvars, axis, n):
    shape = [1] * nvars
    shape[axis] = n
    return tuple(shape)


def _term(t, arrays, axes, nvars):
    if isinstance(t, Variable):
        return np.arange(arrays.size, dtype=np.intp).reshape(_axis_shape(nvars, axes[t.name], arrays.size))
    if isinstance(t, Constant):
        return np.full((1,) * nvars, arrays.constants[t.symbol], dtype=np.intp)
    args = [_term(a, arrays, axes, nvars) for a in t.args]
    return arrays.functions[t.symbol][tuple(args)]


def _formula(f, arrays, axes, nvars):
    if isinstance(f, Equality):
        return _term(f.left, arrays, axes, nvars) == _term(f.right, arrays, axes, nvars)
    if isinstance(f, RelationAtom):
        args = [_term(a, arrays, axes, nvars) for a in f.args]
        return arrays.relations[f.symbol][tuple(args)]
    if isinstance(f, Truth):
        return np.ones((1,) * nvars, dtype=bool)
    if isinstance(f, Falsity):
        return np.zeros((1,) * nvars, dtype=bool)
    if isinstance(f, Not):
        return ~_formula(f.body, arrays, axes, nvars)
    if isinstance(f, And):
        return _formula(f.left, arrays, axes, nvars) & _formula(f.right, arrays, axes, nvars)
    if isinstance(f, Or):
        return _formula(f.left, arrays, axes, nvars) | _formula(f.right, arrays, axes, nvars)
    if isinstance(f, Implies):
        return ~_formula(f.left, arrays, axes, nvars) | _formula(f.right, arrays, axes, nvars)
    if isinstance(f, (Forall, Exists)):
        body = _formula(f.body, arrays, axes, nvars)
        # make sure the quantified axis has full length before reducing
        body = np.broadcast_to(body, np.broadcast_shapes(body.shape, _axis_shape(nvars, axes[f.var], arrays.size)))
        reduce = np.all if isinstance(f, Forall) else np.any
        return reduce(body, axis=axes[f.var], keepdims=True)
    raise TypeError(f"not a formula: {f!r}")


def satisfaction_array(m, f: Formula, variables) -> np.ndarray:
    """Boolean array ``A`` with ``A[p1..pk]`` the truth of ``f`` at the elements in positions ``p``."""
    variables = tuple(variables)
    missing = free_variables(f) - set(variables)
    if missing:
        raise ValueError(f"unbound free variables: {sorted(missing)}")
    arrays = build_arrays(m)
    names = list(variables) + sorted(all_variables(f) - set(variables))
    axes = {v: k for k, v in enumerate(names)}
    out = _formula(f, arrays, axes, len(names))
    out = np.broadcast_to(out, np.broadcast_shapes(out.shape, (arrays.size,) * len(variables) + (1,) * (len(names) - len(variables))))
    # bound-only axes have been reduced to length 1
    return np.array(out.reshape(out.shape[: len(variables)]), dtype=bool)


def truth_value(m, sentence: Formula) -> bool:
    return bool(satisfaction_array(m, sentence, ()))
