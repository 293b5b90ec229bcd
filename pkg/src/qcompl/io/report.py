"""JSON reports for verdicts, dimension analyses and containment checks.

Constants and facts travel as their literal text, so a report read back with
:func:`Report.from_dict` compares equal to the one that was written.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple, Union

from ..model import Database, Fragment, fact_key, term_str
from ..qats import Development
from ..verify import DimensionReport, DimensionRow, Status, Verdict, Witness
from .parser import parse_constant, parse_fact

KIND_VERDICT = "verdict"
KIND_DIMENSION = "dimension"
KIND_CONTAINMENT = "containment"


@dataclass(frozen=True)
class ContainmentResult:
    left: str
    right: Tuple[str, ...]
    holds: bool
    counterexample: Optional[Database] = None
    stats: Dict[str, int] = field(default_factory=dict)


Payload = Union[Verdict, DimensionReport, ContainmentResult]


@dataclass(frozen=True)
class Report:
    payload: Payload
    version: str
    digests: Dict[str, str] = field(default_factory=dict)
    elapsed_ms: float = 0.0
    explanation: Optional[Development] = None

    @property
    def kind(self) -> str:
        if isinstance(self.payload, Verdict):
            return KIND_VERDICT
        if isinstance(self.payload, DimensionReport):
            return KIND_DIMENSION
        return KIND_CONTAINMENT

    def to_dict(self) -> Dict[str, Any]:
        p = self.payload
        if isinstance(p, Verdict):
            out = _verdict_dict(p)
        elif isinstance(p, DimensionReport):
            out = {
                "query": p.query,
                "dims": list(p.dims),
                "target": p.target,
                "rows": [{"values": _values(r.values), "verdict": _verdict_dict(r.verdict)} for r in p.rows],
                "open_values": p.open_values,
                "open_sample": None if p.open_sample is None else _values(p.open_sample),
            }
        else:
            out = {
                "status": "holds" if p.holds else "fails",
                "left": p.left,
                "right": list(p.right),
                "counterexample_db": _facts(p.counterexample),
                "stats": dict(p.stats),
            }
        out["kind"] = self.kind
        out["version"] = self.version
        out["digests"] = dict(self.digests)
        out["elapsed_ms"] = self.elapsed_ms
        if self.explanation is not None:
            out["explanation"] = _development_dict(self.explanation)
        return out

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "Report":
        kind = d["kind"]
        if kind == KIND_VERDICT:
            payload: Payload = _verdict_from(d)
        elif kind == KIND_DIMENSION:
            payload = DimensionReport(
                d["query"],
                tuple(d["dims"]),
                d["target"],
                tuple(DimensionRow(_parse_values(r["values"]), _verdict_from(r["verdict"])) for r in d["rows"]),
                d["open_values"],
                None if d["open_sample"] is None else _parse_values(d["open_sample"]),
            )
        elif kind == KIND_CONTAINMENT:
            payload = ContainmentResult(
                d["left"],
                tuple(d["right"]),
                d["status"] == "holds",
                _parse_db(d["counterexample_db"]),
                dict(d["stats"]),
            )
        else:
            raise ValueError(f"unknown report kind {kind!r}")
        expl = d.get("explanation")
        return cls(
            payload,
            d["version"],
            dict(d.get("digests", {})),
            d.get("elapsed_ms", 0.0),
            None if expl is None else _development_from(expl),
        )

    def to_json(self, indent: Optional[int] = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "Report":
        return cls.from_dict(json.loads(text))


def digest(text: str) -> str:
    return "sha256:" + hashlib.sha256(text.encode("utf-8")).hexdigest()


def _values(values) -> list:
    return [term_str(c) for c in values]


def _parse_values(values) -> tuple:
    return tuple(parse_constant(v) for v in values)


def _facts(db: Optional[Database]) -> Optional[list]:
    if db is None:
        return None
    return [str(f) for f in sorted(db.facts, key=fact_key)]


def _parse_db(facts) -> Optional[Database]:
    if facts is None:
        return None
    return Database(frozenset(parse_fact(f) for f in facts))


def _verdict_dict(v: Verdict) -> Dict[str, Any]:
    out: Dict[str, Any] = {
        "status": v.status.value,
        "query": v.query,
        "target": v.target,
        "stats": dict(v.stats),
        "fragment": v.fragment.value,
    }
    if v.witness is not None:
        w = v.witness
        out["witness"] = {
            "sequence": list(w.sequence),
            "effect": w.effect,
            "position": w.position,
            "counterexample_db": _facts(w.counterexample),
        }
    if v.note:
        out["note"] = v.note
    return out


def _verdict_from(d: Dict[str, Any]) -> Verdict:
    w = d.get("witness")
    witness = None
    if w is not None:
        witness = Witness(tuple(w["sequence"]), w["effect"], w["position"], _parse_db(w["counterexample_db"]))
    return Verdict(
        Status(d["status"]),
        d["query"],
        d["target"],
        Fragment(d["fragment"]),
        witness,
        dict(d["stats"]),
        d.get("note", ""),
    )


def _development_dict(dev: Development) -> Dict[str, Any]:
    return {
        "actions": list(dev.actions),
        "rw": [_facts(db) for db in dev.rw],
        "is": [_facts(db) for db in dev.is_],
    }


def _development_from(d: Dict[str, Any]) -> Development:
    return Development(
        tuple(d["actions"]),
        tuple(_parse_db(x) for x in d["rw"]),
        tuple(_parse_db(x) for x in d["is"]),
    )


__all__ = [
    "ContainmentResult",
    "Report",
    "digest",
]
