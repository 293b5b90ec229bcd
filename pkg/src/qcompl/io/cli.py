"""Command line driver.

Exit status: 0 when the query is complete, the containment holds or the
model is valid; 1 when completeness is not guaranteed or the containment
fails; 2 on usage, parse or validation errors.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from typing import List, Optional, Sequence, TextIO

from .. import __version__
from ..containment import ContainmentStats, find_counterexample
from ..model import ConjunctiveQuery, Database, UnionQuery, ValidationError, fact_key, term_str
from ..oracle import SearchBounds, refute_sequence
from ..qats import SimulationBudget, simulate
from ..verify import (
    AFTER,
    TRACE,
    DimensionReport,
    Verdict,
    dimension_analysis,
    path_complete,
    path_complete_with_db,
    path_from_actions,
    reduce_containment_to_qats,
    sequence_complete,
    state_complete,
)
from .parser import Model, ParseError, format_model, parse_facts, parse_model, parse_queries
from .report import ContainmentResult, Report, _development_dict, digest

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_ERROR = 2


class _Inputs:
    """Reads input files once and remembers their digests."""

    def __init__(self):
        self.digests = {}

    def read(self, path: str) -> str:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
        self.digests[path] = digest(text)
        return text

    def model(self, path: str) -> Model:
        return _located(path, parse_model, self.read(path))

    def facts(self, path: str) -> Database:
        return _located(path, parse_facts, self.read(path))

    def queries(self, path: str) -> List[ConjunctiveQuery]:
        return _located(path, parse_queries, self.read(path))


def _located(path, fn, text):
    try:
        return fn(text)
    except ParseError as e:
        e.path = path
        raise


def _actions(text: str) -> List[str]:
    return [a.strip() for a in text.split(",") if a.strip()]


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--repair-window", choices=(TRACE, AFTER), default=TRACE)
    common.add_argument("--jobs", type=int, default=1, help="worker threads for state checks")
    common.add_argument("--explain", action="store_true", help="attach a bounded counterexample development")

    modelled = argparse.ArgumentParser(add_help=False, parents=[common])
    modelled.add_argument("--model", required=True)

    queried = argparse.ArgumentParser(add_help=False, parents=[modelled])
    queried.add_argument("--query", required=True)

    p = argparse.ArgumentParser(prog="qcompl", description="Query completeness over quality-aware transition systems.")
    p.add_argument("--version", action="version", version=f"qcompl {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("validate", parents=[modelled], help="parse and validate a model")

    s = sub.add_parser("check-state", parents=[queried], help="completeness at a state")
    s.add_argument("--state", required=True)

    s = sub.add_parser("check-path", parents=[queried], help="completeness after a path")
    s.add_argument("--path", required=True, help="comma-separated action labels")
    s.add_argument("--db", help="facts file with the current stored database")

    s = sub.add_parser("check-sequence", parents=[queried], help="completeness after an action sequence")
    s.add_argument("--sequence", required=True, help="comma-separated action labels")

    s = sub.add_parser("contain", parents=[common], help="containment of a query in a union")
    s.add_argument("--left", required=True, help="file with one query")
    s.add_argument("--right", required=True, help="comma-separated query files")

    s = sub.add_parser("dimension", parents=[queried], help="per-value completeness")
    s.add_argument("--dim", required=True, help="comma-separated head variables")
    s.add_argument("--db", required=True, help="facts file with the current stored database")
    where = s.add_mutually_exclusive_group(required=True)
    where.add_argument("--state")
    where.add_argument("--path")

    s = sub.add_parser("simulate", parents=[modelled], help="sample one development")
    s.add_argument("--sequence", required=True, help="comma-separated action labels")
    s.add_argument("--db", help="facts file with the initial database")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--max-new-facts", type=int, default=2)

    s = sub.add_parser("reduce", parents=[common], help="emit the model encoding a containment problem")
    s.add_argument("--left", required=True, help="file with one query")
    s.add_argument("--right", required=True, help="comma-separated query files")
    s.add_argument("--relation", help="name of the fresh relation (default: R, or R1, R2, ... if taken)")
    return p


def _left_right(args, inputs: _Inputs):
    left = inputs.queries(args.left)
    if len(left) != 1:
        raise ValidationError(f"{args.left}: expected exactly one query, found {len(left)}")
    right = []
    for path in _actions(args.right):
        right.extend(inputs.queries(path))
    if not right:
        raise ValidationError("no queries on the right-hand side")
    return left[0], UnionQuery(tuple(right))


def _fresh_relation(q0: ConjunctiveQuery, u: UnionQuery) -> str:
    taken = set(q0.relations()).union(*(d.relations() for d in u))
    name, k = "R", 0
    while name in taken:
        k += 1
        name = f"R{k}"
    return name


def _explain(v: Verdict, model: Model, q: ConjunctiveQuery):
    if v.complete or v.witness is None:
        return None
    return refute_sequence(v.witness.sequence, q, model.qats, SearchBounds())


def _facts_text(db: Database) -> str:
    return "{" + ", ".join(str(f) for f in sorted(db.facts, key=fact_key)) + "}"


def _verdict_text(v: Verdict) -> List[str]:
    lines = [f"{v.query} at {v.target}: {v.status.value}", f"  fragment: {v.fragment.value}"]
    if v.witness is not None:
        w = v.witness
        lines.append(f"  witness: effect {w.effect} at position {w.position} of {','.join(w.sequence)}")
        if w.counterexample is not None:
            lines.append(f"  unrepaired on: {_facts_text(w.counterexample)}")
    for k, n in sorted(v.stats.items()):
        lines.append(f"  {k}: {n}")
    if v.note:
        lines.append(f"  note: {v.note}")
    return lines


def _report_text(r: Report) -> str:
    p = r.payload
    if isinstance(p, Verdict):
        lines = _verdict_text(p)
    elif isinstance(p, DimensionReport):
        lines = [f"{p.query} by {','.join(p.dims)} at {p.target}"]
        for row in p.rows:
            vals = ",".join(term_str(c) for c in row.values)
            lines.append(f"  ({vals}): {row.verdict.status.value}")
        more = "possibly more values" if p.open_values else "no other values"
        lines.append(f"  other values: {more}")
        if p.open_sample is not None:
            lines.append(f"  e.g. ({','.join(term_str(c) for c in p.open_sample)})")
    else:
        lines = [f"{p.left} in {' | '.join(p.right)}: {'holds' if p.holds else 'fails'}"]
        if p.counterexample is not None:
            lines.append(f"  counterexample: {_facts_text(p.counterexample)}")
    if r.explanation is not None:
        lines.append("  development:")
        for j, (rw, is_) in enumerate(zip(r.explanation.rw, r.explanation.is_)):
            step = "initial" if j == 0 else r.explanation.actions[j - 1]
            lines.append(f"    {j} {step}: rw={_facts_text(rw)} is={_facts_text(is_)}")
    return "\n".join(lines) + "\n"


def _status(r: Report) -> int:
    p = r.payload
    if isinstance(p, Verdict):
        return EXIT_OK if p.complete else EXIT_FAIL
    if isinstance(p, DimensionReport):
        ok = all(row.verdict.complete for row in p.rows) and not p.open_values
        return EXIT_OK if ok else EXIT_FAIL
    return EXIT_OK if p.holds else EXIT_FAIL


def _run(args, out: TextIO) -> int:
    inputs = _Inputs()
    started = time.perf_counter()
    explanation = None

    if args.command == "validate":
        m = inputs.model(args.model)
        q = m.qats
        out.write(
            f"{args.model}: valid ({len(q.states)} states, {len(q.actions)} actions, "
            f"{len(q.edges)} edges, {len(m.queries)} queries)\n"
        )
        return EXIT_OK

    if args.command in ("contain", "reduce"):
        q0, u = _left_right(args, inputs)
        if args.command == "reduce":
            relation = args.relation or _fresh_relation(q0, u)
            qats, goal, _ = reduce_containment_to_qats(q0, u, relation)
            out.write(format_model(Model(qats, {goal.name: goal})))
            return EXIT_OK
        stats = ContainmentStats()
        cex = find_counterexample(q0, u, stats)
        payload = ContainmentResult(
            q0.name,
            tuple(d.name for d in u),
            cex is None,
            cex,
            {"containment_calls": stats.calls, "canonical_databases": stats.canonical_databases},
        )
    else:
        m = inputs.model(args.model)
        if args.command == "simulate":
            d0 = inputs.facts(args.db) if args.db else Database(frozenset())
            budget = SimulationBudget(max_new_facts=args.max_new_facts, seed=args.seed)
            dev = simulate(_actions(args.sequence), m.qats, d0, budget)
            if args.format == "json":
                out.write(json.dumps(_development_dict(dev), indent=2) + "\n")
            else:
                for j, (rw, is_) in enumerate(zip(dev.rw, dev.is_)):
                    step = "initial" if j == 0 else dev.actions[j - 1]
                    out.write(f"{j} {step}: rw={_facts_text(rw)} is={_facts_text(is_)}\n")
            return EXIT_OK
        q = m.query(args.query)
        w = args.repair_window
        if args.command == "check-state":
            payload = state_complete(args.state, q, m.qats, w, jobs=max(1, args.jobs))
        elif args.command == "check-sequence":
            payload = sequence_complete(_actions(args.sequence), q, m.qats, w)
        elif args.command == "check-path":
            pi = path_from_actions(_actions(args.path), m.qats)
            if args.db:
                payload = path_complete_with_db(pi, q, m.qats, inputs.facts(args.db), w)
            else:
                payload = path_complete(pi, q, m.qats, w)
        else:
            d_is = inputs.facts(args.db)
            target = args.state if args.state else path_from_actions(_actions(args.path), m.qats)
            payload = dimension_analysis(q, _actions(args.dim), target, m.qats, d_is, w)
        if args.explain and isinstance(payload, Verdict):
            explanation = _explain(payload, m, q)

    report = Report(
        payload,
        __version__,
        inputs.digests,
        round((time.perf_counter() - started) * 1000, 3),
        explanation,
    )
    out.write(report.to_json() + "\n" if args.format == "json" else _report_text(report))
    return _status(report)


def run_cli(argv: Optional[Sequence[str]] = None, out: TextIO = None, err: TextIO = None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_ERROR
    try:
        return _run(args, out)
    except ParseError as e:
        err.write(f"{getattr(e, 'path', '<input>')}:{e}\n")
    except (ValidationError, ValueError, OSError) as e:
        err.write(f"error: {e}\n")
    return EXIT_ERROR


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
