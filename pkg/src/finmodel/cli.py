"""Command-line front end.

Exit status: 0 pass, 1 verification failure, 2 usage or parse error.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field

from . import constructions as C
from . import profinite as PF
from .fileformat import LoadError, Workspace, dump_diagram, dump_structure, element_names, load, load_examples
from .formulas import FormulaError, classify, ep_to_pp_disjunction, is_conjunctive_quantified, to_text
from .generate import formula_corpus, random_cofiltered_diagram
from .library import SIGNATURES
from .orders import Filter, OrderError
from .parser import FormulaSyntaxError, parse_formula
from .structures import (
    EvaluationError,
    evaluate,
    find_retraction,
    homomorphism_violation,
    is_embedding,
    is_homomorphism,
    purity_witness,
)

PASS, FAIL, VALUE = "pass", "fail", "value"


class UsageError(Exception):
    pass


@dataclass
class Report:
    command: str
    outcome: str
    value: object = None
    witness: object = None
    seconds: float = 0.0
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "command": self.command,
            "outcome": self.outcome,
            "value": self.value,
            "witness": self.witness,
            "details": self.details,
            "seconds": round(self.seconds, 6),
        }

    def to_text(self) -> str:
        lines = [f"command: {self.command}", f"outcome: {self.outcome}"]
        if self.value is not None:
            lines.append("value:" + _block(self.value))
        if self.witness is not None:
            lines.append("witness:" + _block(self.witness))
        for key, val in self.details.items():
            lines.append(f"{key}:" + _block(val))
        lines.append(f"time: {self.seconds:.3f}s")
        return "\n".join(lines)

    @property
    def exit_code(self) -> int:
        return 1 if self.outcome == FAIL else 0


def _block(val) -> str:
    if isinstance(val, str) and "\n" in val:
        return "\n" + "\n".join("  " + line for line in val.splitlines())
    if isinstance(val, (dict, list)):
        return " " + json.dumps(val, default=str)
    return " " + (json.dumps(val) if isinstance(val, bool) else str(val))


# ----------------------------------------------------------------- helpers


def _get(ws: Workspace, kind: str, name: str):
    try:
        return ws.lookup(kind, name)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None


def _sig_name(ws, sig) -> str:
    name = ws.signature_name(sig)
    if name is None:
        for k, s in SIGNATURES.items():
            if s == sig:
                return k
        return "sig"
    return name


def _signature(ws, name):
    if name in ws.signatures:
        return ws.signatures[name]
    if name in SIGNATURES:
        return SIGNATURES[name]
    raise UsageError(f"no signature named {name!r}")


def _formula(text, sig):
    try:
        return parse_formula(text, sig)
    except FormulaSyntaxError as exc:
        raise UsageError(f"formula: {exc}") from None


def _element(m, text):
    for e in m.universe:
        if str(e) == text:
            return e
    raise UsageError(f"{text!r} is not an element")


def _assignment(m, pairs):
    out = {}
    for item in pairs or []:
        if "=" not in item:
            raise UsageError(f"assignment {item!r} should look like var=element")
        var, val = item.split("=", 1)
        out[var.strip()] = _element(m, val.strip())
    return out


def _filter_for(family, base_items):
    index_set = tuple(family)
    if not base_items:
        raise UsageError("--base needs at least one index")
    lookup = {str(i): i for i in index_set}
    try:
        base = frozenset(lookup[b] for b in base_items)
    except KeyError as exc:
        raise UsageError(f"base index {exc.args[0]!r} is not in the family") from None
    return Filter(index_set, base)


def _table(h) -> dict:
    src, tgt = element_names(h.source), element_names(h.target)
    return {src[x]: tgt[h(x)] for x in h.source.universe}


def _dump(ws, name, m) -> str:
    return dump_structure(name, m.materialize() if hasattr(m, "materialize") else m, _sig_name(ws, m.signature))


def _fmt_assignment(a: dict) -> dict:
    return {k: str(v) for k, v in a.items()}


# ---------------------------------------------------------------- commands


def cmd_eval(ws, args):
    m = _get(ws, "structures", args.structure)
    f = _formula(args.formula, m.signature)
    try:
        value = evaluate(m, f, _assignment(m, args.assign))
    except EvaluationError as exc:
        raise UsageError(str(exc)) from None
    return Report("", PASS if value else FAIL, value)


def cmd_classify(ws, args):
    f = _formula(args.formula, _signature(ws, args.signature))
    labels = classify(f).labels()
    flags = {k: v for k, v in vars(classify(f)).items()}
    return Report("", VALUE, labels or ["unclassified"], details={"flags": flags})


def cmd_normalize(ws, args):
    f = _formula(args.formula, _signature(ws, args.signature))
    try:
        parts = ep_to_pp_disjunction(f)
    except FormulaError as exc:
        raise UsageError(str(exc)) from None
    return Report("", VALUE, [to_text(p) for p in parts])


def cmd_check_hom(ws, args):
    h = _get(ws, "morphisms", args.morphism)
    bad = homomorphism_violation(h)
    return Report("", PASS if bad is None else FAIL, bad is None, witness=None if bad is None else [str(b) for b in bad])


def cmd_check_embed(ws, args):
    h = _get(ws, "morphisms", args.morphism)
    ok = is_embedding(h)
    return Report("", PASS if ok else FAIL, ok)


def cmd_check_pure(ws, args):
    h = _get(ws, "morphisms", args.morphism)
    if not is_homomorphism(h):
        return Report("", FAIL, False, witness=["not a homomorphism"] + [str(b) for b in homomorphism_violation(h)])
    if args.bound < 1:
        raise UsageError("--bound must be at least 1")
    w = purity_witness(h, args.bound)
    if w is None:
        return Report("", PASS, True, details={"bound": args.bound})
    f, a = w
    return Report("", FAIL, False, witness={"formula": to_text(f), "assignment": _fmt_assignment(a)}, details={"bound": args.bound})


def cmd_check_retraction(ws, args):
    h = _get(ws, "morphisms", args.morphism)
    r = find_retraction(h)
    if r is None:
        return Report("", FAIL, False)
    return Report("", PASS, True, details={"retraction": _table(r)})


def cmd_product(ws, args):
    family = [_get(ws, "structures", n) for n in args.structures]
    sig = _signature(ws, args.signature) if args.signature else None
    if not family and sig is None:
        raise UsageError("an empty product needs --signature")
    try:
        p, _ = C.product(family, sig)
    except C.ConstructionError as exc:
        raise UsageError(str(exc)) from None
    return Report("", VALUE, _dump(ws, args.name, p), details={"size": len(p)})


def cmd_equalizer(ws, args):
    f, g = _get(ws, "morphisms", args.f), _get(ws, "morphisms", args.g)
    try:
        e, _ = C.equalizer(f, g)
    except C.ConstructionError as exc:
        raise UsageError(str(exc)) from None
    return Report("", VALUE, _dump(ws, args.name, e), details={"size": len(e)})


def cmd_limit(ws, args):
    d = _get(ws, "diagrams", args.diagram)
    lim = C.limit(d)
    return Report("", VALUE, _dump(ws, args.name, lim.apex), details={"threads": len(lim.apex)})


def cmd_colimit(ws, args):
    d = _get(ws, "diagrams", args.diagram)
    try:
        col = C.filtered_colimit(d)
    except (C.ConstructionError, OrderError) as exc:
        raise UsageError(str(exc)) from None
    return Report("", VALUE, _dump(ws, args.name, col.apex), details={"classes": len(col.apex)})


def cmd_reduced(ws, args, ultra=False):
    family = _get(ws, "families", args.family)
    filt = _filter_for(family, args.base)
    if ultra and not filt.is_ultra():
        raise UsageError("an ultraproduct needs a single base index")
    if any(m.is_empty() for m in family.values()):
        # the quotient of the product is empty, the colimit form need not be
        col = C.reduced_product_via_colimit(family, filt)
        return Report("", VALUE, _dump(ws, args.name, col.apex), details={"classes": len(col.apex), "form": "colimit of restricted products"})
    try:
        rp, _ = (C.ultraproduct if ultra else C.reduced_product)(family, filt)
    except C.ConstructionError as exc:
        raise UsageError(str(exc)) from None
    return Report("", VALUE, _dump(ws, args.name, rp), details={"classes": len(rp), "form": "quotient of the product"})


def cmd_diagonal(ws, args):
    m = _get(ws, "structures", args.structure)
    index_set = tuple(args.index)
    filt = Filter(index_set, frozenset(args.base))
    try:
        h = C.diagonal(m, index_set, filt)
    except (C.ConstructionError, OrderError) as exc:
        raise UsageError(str(exc)) from None
    return Report("", VALUE, _table(h), details={"power": _dump(ws, "Power", h.target)})


def _corpus(sig, args, restricted=False):
    if args.formula:
        return [_formula(t, sig) for t in args.formula]
    corpus = [f for f in formula_corpus(sig, args.seed, args.count, args.depth)]
    if restricted:
        corpus = [f for f in corpus if is_conjunctive_quantified(f)]
    return corpus


def cmd_verify_los(ws, args, restricted=False):
    family = _get(ws, "families", args.family)
    filt = _filter_for(family, args.base)
    if not restricted and not filt.is_ultra() and not args.allow_proper:
        raise UsageError("verify los needs a single base index (an ultrafilter); use los-pp for proper filters")
    sig = next(iter(family.values())).signature
    corpus = _corpus(sig, args, restricted)
    if restricted:
        bad = [to_text(f) for f in corpus if not is_conjunctive_quantified(f)]
        if bad:
            raise UsageError(f"not built from atoms with & and quantifiers: {bad[0]}")
    try:
        rp = C.ReducedProduct(family, filt)
    except C.ConstructionError as exc:
        raise UsageError(str(exc)) from None
    for f in corpus:
        cx = C.los_counterexample(rp, filt, f)
        if cx is not None:
            return Report(
                "",
                FAIL,
                False,
                witness={"formula": to_text(f), "assignment": {k: list(map(str, v)) for k, v in cx.assignment.items()}, "reduced_product": cx.left, "filter_side": cx.right},
            )
    return Report("", PASS, True, details={"formulas_checked": len(corpus)})


def cmd_verify_colim(ws, args):
    family = _get(ws, "families", args.family)
    filt = _filter_for(family, args.base)
    try:
        iso = C.colimit_is_reduced_product(family, filt)
    except C.ConstructionError as exc:
        raise UsageError(str(exc)) from None
    ok = iso.composites_are_identities() and is_homomorphism(iso.forward) and is_homomorphism(iso.backward)
    return Report("", PASS if ok else FAIL, ok, details={"classes": len(iso.reduced), "forward": _table(iso.forward)})


def cmd_verify_retraction(ws, args):
    d = _get(ws, "diagrams", args.diagram)
    try:
        rep = PF.retraction_theorem_check(d, purity_bound=args.bound)
    except (PF.ProfiniteError, OrderError) as exc:
        raise UsageError(str(exc)) from None
    witness = [[n, str(w)] for n, w in rep.failures] or None
    return Report(
        "",
        PASS if rep.passed else FAIL,
        rep.passed,
        witness=witness,
        details={
            "section": _table(rep.section),
            "retraction": _table(rep.retraction),
            "facts": rep.facts,
            "empty_limit": rep.empty_limit,
        },
    )


def cmd_verify_closure(ws, args):
    d = _get(ws, "diagrams", args.diagram)
    axioms = [_formula(t, d.signature) for t in args.axiom]
    try:
        ok = PF.profinite_closure_check(d, axioms)
    except PF.ProfiniteError as exc:
        raise UsageError(str(exc)) from None
    return Report("", PASS if ok else FAIL, ok, details={"axioms": len(axioms)})


def cmd_generate(ws, args):
    sig = _signature(ws, args.signature)
    d = random_cofiltered_diagram(sig, args.seed, max_indices=args.indices, max_size=args.size)
    text = dump_diagram(args.name, d, args.signature)
    details = {"seed": args.seed}
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text + "\n")
        details["written"] = args.output
    return Report("", VALUE, text, details=details)


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    def global_options(parser, suppress):
        # subcommands repeat the options without defaults so they do not mask earlier values
        extra = {"default": argparse.SUPPRESS} if suppress else {}
        parser.add_argument("-f", "--file", action="append", help="workspace file (repeatable)", **extra)
        parser.add_argument("--examples", action="store_true", help="load the bundled example workspace", **extra)
        parser.add_argument("--json", action="store_true", help="emit a JSON report", **extra)
        return parser

    common = global_options(argparse.ArgumentParser(add_help=False), True)
    p = global_options(argparse.ArgumentParser(prog="finmodel", description="Finite model theory toolkit."), False)
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_text, parent=sub):
        sp = parent.add_parser(name, help=help_text, parents=[common])
        sp.set_defaults(func=func)
        return sp

    sp = add("eval", cmd_eval, "evaluate a formula in a structure")
    sp.add_argument("--structure", required=True)
    sp.add_argument("--formula", required=True)
    sp.add_argument("--assign", action="append", help="var=element (repeatable)")

    for name, func, text in (("classify", cmd_classify, "syntactic class of a formula"), ("normalize-ep", cmd_normalize, "rewrite an existential-positive formula as a pp disjunction")):
        sp = add(name, func, text)
        sp.add_argument("--signature", required=True)
        sp.add_argument("--formula", required=True)

    for name, func in (("check-hom", cmd_check_hom), ("check-embed", cmd_check_embed), ("check-pure", cmd_check_pure), ("check-retraction", cmd_check_retraction)):
        sp = add(name, func, f"{name[6:]} check on a named morphism")
        sp.add_argument("--morphism", required=True)
        if name == "check-pure":
            sp.add_argument("--bound", type=int, default=2)

    sp = add("product", cmd_product, "product of named structures")
    sp.add_argument("--structures", nargs="*", default=[])
    sp.add_argument("--signature")
    sp.add_argument("--name", default="Product")

    sp = add("equalizer", cmd_equalizer, "equalizer of two parallel morphisms")
    sp.add_argument("--f", required=True)
    sp.add_argument("--g", required=True)
    sp.add_argument("--name", default="Equalizer")

    sp = add("limit", cmd_limit, "limit of a diagram (compatible threads)")
    sp.add_argument("--diagram", required=True)
    sp.add_argument("--name", default="Limit")

    sp = add("colimit", cmd_colimit, "colimit of a filtered diagram")
    sp.add_argument("--diagram", required=True)
    sp.add_argument("--name", default="Colimit")

    for name, ultra in (("reduced-product", False), ("ultraproduct", True)):
        sp = add(name, lambda ws, a, u=ultra: cmd_reduced(ws, a, u), name.replace("-", " "))
        sp.add_argument("--family", required=True)
        sp.add_argument("--base", nargs="+", required=True)
        sp.add_argument("--name", default="Reduced")

    sp = add("diagonal", cmd_diagonal, "diagonal map into a reduced power")
    sp.add_argument("--structure", required=True)
    sp.add_argument("--index", nargs="+", required=True)
    sp.add_argument("--base", nargs="+", required=True)

    verify = sub.add_parser("verify", help="theorem checks", parents=[common])
    vsub = verify.add_subparsers(dest="check", required=True)
    for name, func in (("los", cmd_verify_los), ("los-pp", lambda ws, a: cmd_verify_los(ws, a, True))):
        sp = add(name, func, "Łoś equivalence over a formula corpus", vsub)
        sp.add_argument("--family", required=True)
        sp.add_argument("--base", nargs="+", required=True)
        sp.add_argument("--depth", type=int, default=2)
        sp.add_argument("--count", type=int, default=500)
        sp.add_argument("--seed", type=int, default=0, help="corpus seed (the corpus is a fixed function of it)")
        sp.add_argument("--formula", action="append", help="check these formulas instead of the corpus")
        if name == "los":
            sp.add_argument("--allow-proper", action="store_true", help="run under a proper filter to search for failures")
    sp = add("colim-iso", cmd_verify_colim, "colimit of restricted products against the reduced product", vsub)
    sp.add_argument("--family", required=True)
    sp.add_argument("--base", nargs="+", required=True)
    sp = add("retraction", cmd_verify_retraction, "the limit is a retract of the ultraproduct", vsub)
    sp.add_argument("--diagram", required=True)
    sp.add_argument("--bound", type=int, default=None, help="also check purity of the section at this budget")
    sp = add("closure", cmd_verify_closure, "limit of models of geometric axioms is a model", vsub)
    sp.add_argument("--diagram", required=True)
    sp.add_argument("--axiom", action="append", default=[])

    gen = sub.add_parser("generate", help="random objects", parents=[common])
    gsub = gen.add_subparsers(dest="what", required=True)
    sp = add("diagram", cmd_generate, "random cofiltered diagram in file format", gsub)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--signature", default="graph")
    sp.add_argument("--indices", type=int, default=5)
    sp.add_argument("--size", type=int, default=4)
    sp.add_argument("--name", default="G")
    sp.add_argument("-o", "--output", help="also write the diagram to this file")
    return p


def _workspace(args) -> Workspace:
    ws = Workspace()
    if args.examples:
        load_examples(ws)
    if args.file:
        load(args.file, ws)
    return ws


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    start = time.perf_counter()
    try:
        ws = _workspace(args)
        report = args.func(ws, args)
    except (UsageError, LoadError, OrderError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    report.command = " ".join(argv)
    report.seconds = time.perf_counter() - start
    if args.json:
        print(json.dumps(report.to_json(), indent=2, default=str))
    else:
        print(report.to_text())
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
