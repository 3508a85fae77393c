"""Command-line front end.

One executable, nine subcommands: parse/validate inputs, classify query
shape, materialize a chase prefix, rewrite, evaluate counting queries,
compute and decide certain counts, generate hardness-gadget instances, and
run the embedded self-test.  Exit codes: 0 success, 1 input parse error,
2 precondition rejection (wrong dialect or query shape; argparse usage
errors also exit 2), 3 a decide run that ends "unknown".

Output goes through one of three formats.  ``plain`` prints answer rows as
``x=a<TAB>6`` plus ``# key: value`` trailers; ``tsv`` prints the data rows
only; ``json-lines`` mirrors plain line for line, one object per line, so
scripts can diff either stream.  All three are byte-deterministic for fixed
inputs and flags.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
from typing import Optional

from .certain import (
    ENGINES,
    Bounds,
    CertainCountRequest,
    EngineError,
    certcount_bruteforce,
    certcount_chase,
    certcount_rewrite,
    decide_count,
    default_depth,
    pick_engine,
)
from .cq import CQAtom, ConjunctiveQuery, Var, classify_shape, count_matches
from .focount import emit_sql, evaluate, evaluate_set, from_cq
from .interp import InterpError, Named, from_abox, restricted_chase
from .reductions import (
    ReductionError,
    gen_3col_branching,
    gen_3col_disconnected,
    gen_nand_circuit,
    parse_circuit,
    parse_graph,
)
from .rewriter import RewriteError, saturate
from .syntax import (
    ABox,
    Atomic,
    ConceptInclusion,
    CORE_NM,
    DIALECTS,
    Fact,
    KB,
    MinCard,
    Role,
    SyntaxError_,
    TBox,
    exists,
    validate_dialect,
)
from .textio import (
    parse_abox,
    parse_cq,
    parse_focount_set,
    parse_tbox,
    serialize_abox,
    serialize_cq,
    serialize_focount_set,
    serialize_interpretation,
    serialize_tbox,
)


class _Out:
    """Format-aware line emitter; every plain line maps to one json object."""

    def __init__(self, fmt: str):
        self.fmt = fmt

    def _emit(self, obj: dict, plain: str, tsv: Optional[str]) -> None:
        if self.fmt == "json-lines":
            print(json.dumps(obj, ensure_ascii=False))
        elif self.fmt == "tsv":
            if tsv is not None:
                print(tsv)
        else:
            print(plain)

    def row(self, binding: str, count: int) -> None:
        line = f"{binding}\t{count}"
        self._emit({"binding": binding, "count": count}, line, line)

    def meta(self, key: str, value) -> None:
        shown = str(value).lower() if isinstance(value, bool) else value
        self._emit({key: value}, f"# {key}: {shown}", None)

    def line(self, field: str, value: str) -> None:
        self._emit({field: value}, value, value)


def _positive(text: str) -> int:
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer: {text}")
    return n


def _read(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _load_kb(args) -> tuple:
    """(tbox, abox, query) for whichever of -t/-a/-q were given.

    The ABox is parsed first: its individuals name the query's constants and
    its binary predicates are role evidence for bare `X sub Y` TBox lines.
    """
    abox = parse_abox(_read(args.abox)) if getattr(args, "abox", None) else None
    hints = sorted({f.predicate for f in abox if len(f.args) == 2}) if abox else ()
    tbox = parse_tbox(_read(args.tbox), role_hints=hints) if getattr(args, "tbox", None) else None
    inds = abox.individuals() if abox else ()
    query = parse_cq(_read(args.query), individuals=inds) if getattr(args, "query", None) else None
    return tbox, abox, query


def _binding_str(names: list, binding: tuple) -> str:
    if not binding:
        return "()"
    return ",".join(f"{n}={e}" for n, e in zip(names, binding))


def _print_counts(out: _Out, names: list, result, boolean: bool) -> None:
    if isinstance(result, int):
        got = {(): result}
    else:
        got = {a.binding: a.count for a in result}
    if boolean:
        out.row("()", got.get((), 0))
        return
    for b in sorted(got, key=lambda b: tuple(str(e) for e in b)):
        out.row(_binding_str(names, b), got[b])


def _require_engine_fit(tbox: TBox, q: ConjunctiveQuery) -> None:
    violations = validate_dialect(tbox, CORE_NM)
    if violations:
        raise EngineError(
            "rewriting covers core with number restrictions only; offending: "
            + "; ".join(str(v) for v in violations)
        )
    shape = classify_shape(q)
    if not (shape.connected and shape.rooted):
        raise EngineError(
            f"rewriting needs a connected rooted query, got: {shape.words()}"
        )


# ---------------------------------------------------------------------------
# subcommands


def cmd_validate(args) -> int:
    out = _Out(args.format)
    tbox, _, _ = _load_kb(args)
    if args.dialect and tbox is not None:
        violations = validate_dialect(tbox, DIALECTS[args.dialect])
        if violations:
            for v in violations:
                out.line("violation", str(v))
            return 2
    return 0


def cmd_classify(args) -> int:
    out = _Out(args.format)
    _, _, query = _load_kb(args)
    out.line("shape", classify_shape(query).words())
    return 0


def cmd_chase(args) -> int:
    out = _Out(args.format)
    tbox, abox, query = _load_kb(args)
    depth = args.depth
    if depth is None and query is not None:
        depth = default_depth(query)
    res = restricted_chase(KB(tbox, abox), depth_limit=depth)
    for raw in serialize_interpretation(res.interpretation).splitlines():
        out.line("fact" if "(" in raw else "element", raw)
    out.meta("saturated", res.saturated)
    if query is not None:
        out.meta("matches", count_matches(query, res.interpretation))
    return 0


def cmd_rewrite(args) -> int:
    out = _Out(args.format)
    tbox, _, query = _load_kb(args)
    dialect = DIALECTS[args.dialect] if args.dialect else CORE_NM
    _require_engine_fit(tbox, query)
    queries = saturate(query, tbox, dialect=dialect)
    if args.emit_sql:
        for q in queries:
            out.line("sql", emit_sql(q) + ";")
        return 0
    if out.fmt == "json-lines":
        for q in queries:
            out.line("query", str(q))
    else:
        sys.stdout.write(serialize_focount_set(queries))
    return 0


def cmd_eval(args) -> int:
    out = _Out(args.format)
    abox = parse_abox(_read(args.abox))
    text = _read(args.query)
    try:
        queries = parse_focount_set(text, individuals=abox.individuals())
    except SyntaxError_:
        queries = (from_cq(parse_cq(text, individuals=abox.individuals())),)
    if not queries:
        raise SyntaxError_("empty counting-query file")
    if args.emit_sql:
        for q in queries:
            out.line("sql", emit_sql(q) + ";")
        return 0
    names = [v.name for v in queries[0].group_by]
    result = evaluate_set(queries, from_abox(abox))
    _print_counts(out, names, result, boolean=not names)
    return 0


def cmd_certcount(args) -> int:
    out = _Out(args.format)
    tbox, abox, query = _load_kb(args)
    kb = KB(tbox, abox)
    engine = args.engine or pick_engine(kb, query)
    bounds = Bounds(chase_depth=args.depth, extra_elements=args.extras)
    result = CertainCountRequest(kb, query, engine, bounds).run()
    names = [v.name for v in query.head]
    _print_counts(out, names, result, boolean=not query.head)
    out.meta("engine", engine)
    out.meta("exact", engine != "brute-force")
    return 0


def cmd_decide(args) -> int:
    out = _Out(args.format)
    tbox, abox, query = _load_kb(args)
    bounds = Bounds(chase_depth=args.depth, extra_elements=args.extras)
    verdict = decide_count(
        KB(tbox, abox), query, args.threshold, engine=args.engine, bounds=bounds
    )
    if verdict is None:
        out.line("decision", "unknown")
        return 3
    out.line("decision", "true" if verdict else "false")
    return 0


_GEN_KINDS = {
    "3col-disc": (parse_graph, gen_3col_disconnected),
    "3col-branch": (parse_graph, gen_3col_branching),
    "nand": (parse_circuit, gen_nand_circuit),
}


def cmd_gen(args) -> int:
    out = _Out(args.format)
    parse, generate = _GEN_KINDS[args.kind]
    source = parse(_read(args.infile))
    if args.kind == "nand" and args.dialect:
        instance = generate(source, dialect=DIALECTS[args.dialect])
    else:
        instance = generate(source)
    os.makedirs(args.out_dir, exist_ok=True)
    hints = sorted({f.predicate for f in instance.kb.abox if len(f.args) == 2})
    files = (
        ("kb.tbox", serialize_tbox(instance.kb.tbox, role_hints=hints)),
        ("kb.abox", serialize_abox(instance.kb.abox)),
        ("query.cq", serialize_cq(instance.query)),
        ("meta.txt", f"threshold: {instance.threshold}\nclaim: {instance.claim}\n"),
    )
    for name, payload in files:
        path = os.path.join(args.out_dir, name)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(payload)
        out.line("wrote", path)
    return 0


# ---------------------------------------------------------------------------
# selftest


def _example2() -> tuple:
    tbox = TBox(
        (
            ConceptInclusion(Atomic("A"), MinCard(2, Role("P1"))),
            ConceptInclusion(exists(Role("P1", True)), MinCard(3, Role("P2"))),
        )
    )
    abox = ABox(
        (
            Fact("A", ("a",)),
            Fact("P1", ("a", "b")),
            Fact("P2", ("b", "d")),
            Fact("P2", ("b", "e")),
        )
    )
    query = ConjunctiveQuery(
        (Var("x"),),
        (
            CQAtom("A", (Var("x"),)),
            CQAtom("P1", (Var("x"), Var("y1"))),
            CQAtom("P2", (Var("y1"), Var("y2"))),
        ),
    )
    return KB(tbox, abox), query


def _sweep_case(rng: random.Random) -> tuple:
    concepts, roles, inds = ["A", "B", "C"], ["R", "S"], ["a", "b", "c", "d"]

    def basic(creating: bool):
        if rng.random() < 0.5:
            return Atomic(rng.choice(concepts))
        n = rng.randint(1, 3) if creating else 1
        return MinCard(n, Role(rng.choice(roles), rng.random() < 0.5))

    axioms = []
    for _ in range(rng.randint(1, 3)):
        lhs, rhs = basic(False), basic(True)
        neg = isinstance(rhs, Atomic) and rng.random() < 0.2
        axioms.append(ConceptInclusion(lhs, rhs, negated_rhs=neg))
    facts = []
    for _ in range(rng.randint(1, 5)):
        if rng.random() < 0.5:
            facts.append(Fact(rng.choice(concepts), (rng.choice(inds),)))
        else:
            facts.append(Fact(rng.choice(roles), (rng.choice(inds), rng.choice(inds))))
    x = Var("x")
    atoms = [CQAtom(rng.choice(concepts), (x,))]
    frontier = [x]
    for j in range(rng.randint(0, 2)):
        src = rng.choice(frontier)
        y = Var(f"y{j}")
        pair = (src, y) if rng.random() < 0.7 else (y, src)
        atoms.append(CQAtom(rng.choice(roles), pair))
        frontier.append(y)
    kb = KB(TBox(tuple(axioms)), ABox(tuple(facts)))
    return kb, ConjunctiveQuery((x,), tuple(atoms))


def cmd_selftest(args) -> int:
    out = _Out(args.format)
    failures = 0

    def report(name: str, ok: bool, detail: str = "") -> None:
        nonlocal failures
        if out.fmt == "json-lines":
            print(json.dumps({"check": name, "ok": ok}))
        else:
            print(f"{'ok' if ok else 'FAIL'} {name}" + (f": {detail}" if detail and not ok else ""))
        failures += 0 if ok else 1

    kb, query = _example2()
    a = Named("a")

    rewritten = saturate(query, kb.tbox)
    got = {x.binding: x.count for x in evaluate_set(rewritten, from_abox(kb.abox))}
    report("example-2 rewrite answer", got == {(a,): 6}, f"got {got}")
    contributions = sorted(
        c
        for q in rewritten
        if (c := {x.binding: x.count for x in evaluate(q, from_abox(kb.abox))}.get((a,), 0))
    )
    report("example-2 contributions", contributions == [1, 2, 3], f"got {contributions}")

    res = restricted_chase(kb, depth_limit=2)
    p1 = res.interpretation.role_ext(Role("P1"))
    p2 = res.interpretation.role_ext(Role("P2"))
    witnesses = [y for x, y in p1 if x == a and not isinstance(y, Named)]
    report(
        "example-2 chase structure",
        res.saturated
        and len([p for p in p1 if p[0] == a]) == 2
        and len([p for p in p2 if p[0] == Named("b")]) == 3
        and len(witnesses) == 1
        and len([p for p in p2 if p[0] == witnesses[0]]) == 3
        and count_matches(query, res.interpretation) == 6,
        f"saturated={res.saturated}",
    )

    got = {x.binding: x.count for x in certcount_chase(kb, query)}
    report("example-2 chase engine", got == {(a,): 6}, f"got {got}")
    got = {x.binding: x.count for x in certcount_bruteforce(kb, query)}
    report("example-2 brute-force engine", got == {(a,): 6}, f"got {got}")

    rng = random.Random(int(os.environ.get("LITECOUNT_SEED", "20240824")))
    agreements = disagreements = attempts = 0
    while agreements + disagreements < 20 and attempts < 200:
        attempts += 1
        case_kb, case_q = _sweep_case(rng)
        try:
            r1 = {x.binding: x.count for x in certcount_rewrite(case_kb, case_q)}
            r2 = {x.binding: x.count for x in certcount_chase(case_kb, case_q)}
            r3 = {x.binding: x.count for x in certcount_bruteforce(case_kb, case_q)}
        except (EngineError, RewriteError, InterpError):
            continue
        if r1 == r2 == r3:
            agreements += 1
        else:
            disagreements += 1
    report(
        "engine agreement sweep",
        disagreements == 0 and agreements == 20,
        f"{agreements} agree, {disagreements} disagree",
    )
    return 1 if failures else 0


# ---------------------------------------------------------------------------
# wiring


def _add_common(p: argparse.ArgumentParser, *, tbox=False, abox=False, query=False) -> None:
    if tbox:
        p.add_argument("-t", "--tbox", required=tbox == "req", metavar="FILE")
    if abox:
        p.add_argument("-a", "--abox", required=abox == "req", metavar="FILE")
    if query:
        p.add_argument("-q", "--query", required=query == "req", metavar="FILE")
    p.add_argument(
        "--format",
        choices=("plain", "tsv", "json-lines"),
        default="plain",
        help="output format (default: plain)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="litecount",
        description="Counting-query answering over DL-Lite knowledge bases.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="parse inputs; optionally check a dialect")
    _add_common(p, tbox=True, abox=True, query=True)
    p.add_argument("--dialect", choices=sorted(DIALECTS))
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("classify", help="report the query's Gaifman shape")
    _add_common(p, abox=True, query="req")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("chase", help="materialize a restricted-chase prefix")
    _add_common(p, tbox="req", abox="req", query=True)
    p.add_argument("--depth", type=_positive, help="generations (default: |body(q)|+1 with -q)")
    p.set_defaults(func=cmd_chase)

    p = sub.add_parser("rewrite", help="saturate a query against the TBox")
    _add_common(p, tbox="req", abox=True, query="req")
    p.add_argument("--dialect", choices=sorted(DIALECTS))
    p.add_argument("--emit-sql", action="store_true", help="print SQL instead of rule text")
    p.set_defaults(func=cmd_rewrite)

    p = sub.add_parser("eval", help="evaluate counting queries over the ABox")
    _add_common(p, abox="req", query="req")
    p.add_argument("--emit-sql", action="store_true", help="print SQL instead of evaluating")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("certcount", help="certain count of a query over a KB")
    _add_common(p, tbox="req", abox="req", query="req")
    p.add_argument("--engine", choices=ENGINES, help="default: best applicable")
    p.add_argument("--depth", type=_positive, help="chase depth bound")
    p.add_argument("--extras", type=int, default=2, help="brute-force extra elements (default 2)")
    p.set_defaults(func=cmd_certcount)

    p = sub.add_parser("decide", help="is k the certain count? (boolean query)")
    _add_common(p, tbox="req", abox="req", query="req")
    p.add_argument("-k", "--threshold", type=int, required=True)
    p.add_argument("--engine", choices=ENGINES)
    p.add_argument("--depth", type=_positive)
    p.add_argument("--extras", type=int, default=2)
    p.set_defaults(func=cmd_decide)

    p = sub.add_parser("gen", help="generate a hardness-gadget instance")
    p.add_argument("kind", choices=sorted(_GEN_KINDS))
    p.add_argument("--in", dest="infile", required=True, metavar="FILE")
    p.add_argument("--out-dir", required=True, metavar="DIR")
    p.add_argument("--dialect", choices=sorted(DIALECTS), help="nand only: target dialect")
    p.add_argument("--format", choices=("plain", "tsv", "json-lines"), default="plain")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("selftest", help="run the embedded golden checks")
    p.add_argument("--format", choices=("plain", "tsv", "json-lines"), default="plain")
    p.set_defaults(func=cmd_selftest)

    return parser


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "gen" and args.dialect and args.kind != "nand":
        parser.error("--dialect applies to the nand kind only")
    if args.command == "validate" and not (args.tbox or args.abox or args.query):
        parser.error("validate needs at least one of -t/-a/-q")
    try:
        return args.func(args)
    except (SyntaxError_, ReductionError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (EngineError, RewriteError, InterpError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
