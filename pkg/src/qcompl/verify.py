"""Completeness decisions over QATS: riskiness, repair, sequence/state/path
completeness, dimension analysis and the reduction from containment."""
from __future__ import annotations

import enum
import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

from .containment import ContainmentStats, find_counterexample, intersect, is_satisfiable, simplify
from .effects import CopyEffect, RealWorldEffect, associated_query, r_projection
from .model import (
    Atom,
    Comparison,
    ConjunctiveQuery,
    Database,
    Fragment,
    UnionQuery,
    ValidationError,
    Var,
    classify_fragment,
    constant_key,
    evaluate_query,
    num,
)
from .qats import Path, Qats, action_sequence_of, enumerate_normal_sequences

TRACE = "trace"
AFTER = "after"
SUFFICIENCY_NOTE = (
    "sufficient condition only: all risky effects repaired implies completeness; "
    "the current information-system database is not used to upgrade the verdict"
)


class Status(enum.Enum):
    COMPLETE = "complete"
    NOT_GUARANTEED = "not_guaranteed"


@dataclass(frozen=True)
class Witness:
    sequence: Tuple[str, ...]
    effect: str
    position: int
    counterexample: Optional[Database] = None


@dataclass(frozen=True)
class Verdict:
    status: Status
    query: str
    target: str
    fragment: Fragment
    witness: Optional[Witness] = None
    stats: Dict[str, int] = field(default_factory=dict)
    note: str = ""

    @property
    def complete(self) -> bool:
        return self.status is Status.COMPLETE


@dataclass(frozen=True)
class DimensionRow:
    values: tuple
    verdict: Verdict


@dataclass(frozen=True)
class DimensionReport:
    query: str
    dims: Tuple[str, ...]
    target: str
    rows: Tuple[DimensionRow, ...]
    open_values: bool
    open_sample: Optional[tuple] = None


def _rename_effect_apart(r: RealWorldEffect, q: ConjunctiveQuery) -> RealWorldEffect:
    taken = {v.name for v in q.variables()}
    sub = {}
    for v in r.variables():
        name = v.name
        while name in taken:
            name += "_r"
        sub[v] = Var(name)
    return RealWorldEffect(
        r.id,
        r.head.substitute(sub),
        tuple(a.substitute(sub) for a in r.guard_atoms),
        tuple(c.substitute(sub) for c in r.guard_comparisons),
    )


def is_risky(r: RealWorldEffect, q: ConjunctiveQuery) -> bool:
    """Some new fact allowed by ``r`` can take part in a valuation of ``q``.

    One disjunct per query atom over ``r``'s relation: the effect head is
    equated with that atom and the guard, query body and comparisons must be
    jointly satisfiable.
    """
    r2 = _rename_effect_apart(r, q)
    for atom in q.body:
        if atom.relation != r2.relation or atom.arity != r2.head.arity:
            continue
        eqs = tuple(Comparison(x, "=", t) for x, t in zip(r2.head.args, atom.args))
        joint = ConjunctiveQuery(
            "risk",
            (),
            q.body + r2.guard_atoms + (r2.head,),
            q.comparisons + r2.guard_comparisons + eqs,
        )
        if is_satisfiable(joint):
            return True
    return False


def _repair_problem(r: RealWorldEffect, copies: Iterable[CopyEffect], q: ConjunctiveQuery):
    p_r = associated_query(r, full_head=True)
    left = [intersect(p_r, proj, name=f"{p_r.name}_{proj.name}") for proj in r_projection(q, r.relation)]
    right = UnionQuery(
        tuple(
            associated_query(c, full_head=True)
            for c in copies
            if c.relation == r.relation and c.head.arity == r.head.arity
        )
    )
    return left, right


def repair_counterexample(
    r: RealWorldEffect,
    copies: Iterable[CopyEffect],
    q: ConjunctiveQuery,
    stats: Optional[ContainmentStats] = None,
) -> Optional[Database]:
    """A canonical database showing ``r`` is not repaired, or None if it is."""
    left, right = _repair_problem(r, copies, q)
    for l in left:
        cex = find_counterexample(l, right, stats)
        if cex is not None:
            return cex
    return None


def is_repaired(r: RealWorldEffect, copies: Iterable[CopyEffect], q: ConjunctiveQuery) -> bool:
    """``P_r ∩ Q^R ⊆ P_c1 ∪ … ∪ P_cm`` over the copies writing ``r``'s relation."""
    return repair_counterexample(r, copies, q) is None


class CompletenessChecker:
    """Decides completeness of one query over one QATS, caching the
    riskiness and repair checks shared between action sequences."""

    def __init__(self, qats: Qats, query: ConjunctiveQuery, repair_window: str = TRACE):
        if repair_window not in (TRACE, AFTER):
            raise ValueError(f"repair window must be {TRACE!r} or {AFTER!r}")
        self.qats = qats
        self.query = query
        self.window = repair_window
        self.fragment = classify_fragment(query)
        self.containment = ContainmentStats()
        self.sequences = 0
        self._risky: Dict[RealWorldEffect, bool] = {}
        self._repair: Dict[Tuple[RealWorldEffect, FrozenSet[CopyEffect]], Optional[Database]] = {}
        self._failure: Dict[Tuple[str, FrozenSet[str]], Optional[Tuple[str, Optional[Database]]]] = {}

    def risky(self, r: RealWorldEffect) -> bool:
        hit = self._risky.get(r)
        if hit is None:
            hit = self._risky[r] = is_risky(r, self.query)
        return hit

    def _unrepaired(self, r: RealWorldEffect, copy_actions: FrozenSet[str]) -> Optional[Database]:
        # only copies into r's relation can repair it; windows that differ
        # in other actions share one containment check
        copies = frozenset(
            c for a in copy_actions for c in self.qats.copy_effects(a) if c.head.relation == r.head.relation
        )
        key = (r, copies)
        if key not in self._repair:
            ordered = sorted(copies, key=lambda c: c.id)
            self._repair[key] = repair_counterexample(r, ordered, self.query, self.containment)
        return self._repair[key]

    def _position_failure(self, action: str, copy_actions: FrozenSet[str]):
        key = (action, copy_actions)
        if key in self._failure:
            return self._failure[key]
        result = None
        for r in self.qats.real_world_effects(action):
            if not self.risky(r):
                continue
            cex = self._unrepaired(r, copy_actions)
            if cex is not None:
                result = (r.id, cex)
                break
        self._failure[key] = result
        return result

    def failure(self, alpha: Sequence[str]) -> Optional[Witness]:
        """First position whose risky effect is not repaired, or None."""
        for a in alpha:
            if a not in self.qats.actions:
                raise ValidationError(f"unknown action {a}")
        self.sequences += 1
        for i, a in enumerate(alpha):
            window = alpha[i:] if self.window == TRACE else alpha[i + 1 :]
            hit = self._position_failure(a, frozenset(window))
            if hit is not None:
                return Witness(tuple(alpha), hit[0], i + 1, hit[1])
        return None

    def _verdict(self, target: str, witness: Optional[Witness], note: str = "") -> Verdict:
        return Verdict(
            Status.NOT_GUARANTEED if witness else Status.COMPLETE,
            self.query.name,
            target,
            self.fragment,
            witness,
            {
                "sequences_examined": self.sequences,
                "containment_calls": self.containment.calls,
                "canonical_databases": self.containment.canonical_databases,
            },
            note,
        )

    def sequence(self, alpha: Sequence[str]) -> Verdict:
        return self._verdict("sequence:" + ",".join(alpha), self.failure(alpha))

    def state(self, s: str, jobs: int = 1) -> Verdict:
        if s not in self.qats.states:
            raise ValidationError(f"unknown state {s}")
        seqs = enumerate_normal_sequences(s, self.qats)
        witness = None
        if jobs <= 1:
            for alpha in seqs:
                witness = self.failure(alpha)
                if witness:
                    break
        else:
            # order of results follows enumeration order, so the reported
            # witness does not depend on the number of workers
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                while witness is None:
                    chunk = list(itertools.islice(seqs, 256))
                    if not chunk:
                        break
                    witness = next((w for w in pool.map(self.failure, chunk) if w), None)
        return self._verdict(f"state:{s}", witness)


def sequence_complete(
    alpha: Sequence[str], q: ConjunctiveQuery, qats: Qats, repair_window: str = TRACE
) -> Verdict:
    return CompletenessChecker(qats, q, repair_window).sequence(alpha)


def state_complete(
    s: str, q: ConjunctiveQuery, qats: Qats, repair_window: str = TRACE, jobs: int = 1
) -> Verdict:
    return CompletenessChecker(qats, q, repair_window).state(s, jobs)


def check_path(pi: Path, qats: Qats) -> None:
    if pi.start is not None and pi.start != qats.initial:
        raise ValidationError(f"path starts at {pi.start}, not at the initial state {qats.initial}")
    edges = set(qats.edges)
    for t in pi.transitions:
        if t not in edges:
            raise ValidationError(f"transition {t[0]} -{t[1]}-> {t[2]} is not an edge")


def path_from_actions(actions: Sequence[str], qats: Qats) -> Path:
    """Resolve an action word to a path from the initial state (first matching
    edge at every step, backtracking when a branch dead-ends)."""

    def walk(state: str, i: int) -> Optional[List[Tuple[str, str, str]]]:
        if i == len(actions):
            return []
        for t in sorted(qats.successors(state, actions[i])):
            rest = walk(t, i + 1)
            if rest is not None:
                return [(state, actions[i], t)] + rest
        return None

    found = walk(qats.initial, 0)
    if found is None:
        raise ValidationError(f"no path from {qats.initial} is labelled {','.join(actions)}")
    return Path(tuple(found), start=qats.initial)


def _path_target(pi: Path) -> str:
    return "path:" + ",".join(action_sequence_of(pi))


def path_complete(pi: Path, q: ConjunctiveQuery, qats: Qats, repair_window: str = TRACE) -> Verdict:
    check_path(pi, qats)
    checker = CompletenessChecker(qats, q, repair_window)
    return checker._verdict(_path_target(pi), checker.failure(action_sequence_of(pi)))


def path_complete_with_db(
    pi: Path, q: ConjunctiveQuery, qats: Qats, d_is: Database, repair_window: str = TRACE
) -> Verdict:
    """Runtime check given the current stored database.

    Only the repair condition is decided; ``d_is`` contributes the current
    answer count to the report and never turns a failing check into Complete.
    """
    v = path_complete(pi, q, qats, repair_window)
    stats = dict(v.stats)
    stats["current_answers"] = len(evaluate_query(q, d_is))
    return Verdict(v.status, v.query, v.target, v.fragment, v.witness, stats, SUFFICIENCY_NOTE)


Target = Union[str, Path]


def instantiate(q: ConjunctiveQuery, dims: Sequence[Var], values: Sequence) -> Optional[ConjunctiveQuery]:
    """``Q[w̄/c̄]``; None when the substitution makes the comparisons contradictory."""
    sub = {v: num(c) if isinstance(c, int) else c for v, c in zip(dims, values)}
    name = f"{q.name}[{','.join(f'{v.name}={c}' for v, c in sub.items())}]"
    inst = q.substitute(sub, name=name)
    return simplify(inst) and inst


def dimension_analysis(
    q: ConjunctiveQuery,
    dims: Sequence[Union[str, Var]],
    target: Target,
    qats: Qats,
    d_is: Database,
    repair_window: str = TRACE,
) -> DimensionReport:
    dims = tuple(Var(d) if isinstance(d, str) else d for d in dims)
    head_vars = {t for t in q.head if isinstance(t, Var)}
    missing = [d.name for d in dims if d not in head_vars]
    if missing:
        raise ValidationError(f"dimension variables {missing} are not distinguished variables of {q.name}")
    checker_target = target
    if isinstance(target, Path):
        check_path(target, qats)
        label = _path_target(target)
    else:
        if target not in qats.states:
            raise ValidationError(f"unknown state {target}")
        label = f"state:{target}"

    def verdict_for(values) -> Verdict:
        inst = instantiate(q, dims, values)
        fragment = classify_fragment(q)
        if inst is None:
            return Verdict(Status.COMPLETE, q.name, label, fragment, note="instantiation has no answers")
        if isinstance(checker_target, Path):
            return path_complete(checker_target, inst, qats, repair_window)
        return state_complete(checker_target, inst, qats, repair_window)

    projected = ConjunctiveQuery(f"{q.name}_dims", dims, q.body, q.comparisons)
    tuples = sorted(evaluate_query(projected, d_is), key=lambda t: tuple(constant_key(c) for c in t))
    rows = tuple(DimensionRow(t, verdict_for(t)) for t in tuples)

    pool = sorted(d_is.constants(), key=constant_key)
    fresh = []
    taken = set(pool)
    k = 1
    while len(fresh) < len(dims):
        if f"_new{k}" not in taken:
            fresh.append(f"_new{k}")
        k += 1
    seen = set(tuples)
    sample = None
    candidates = itertools.product(*[pool + [fresh[i]] for i in range(len(dims))])
    for cand in candidates:
        if cand in seen:
            continue
        if not verdict_for(cand).complete:
            sample = cand
            break
    return DimensionReport(q.name, tuple(d.name for d in dims), label, rows, sample is not None, sample)


def reduce_containment_to_qats(
    q0: ConjunctiveQuery, u: UnionQuery, relation: str = "R"
) -> Tuple[Qats, ConjunctiveQuery, Tuple[str, str]]:
    """Encode ``q0 ⊆ ∪u`` as completeness of ``Q'(x̄) :- R(x̄)`` after ``(a1, a2)``."""
    if isinstance(u, ConjunctiveQuery):
        u = UnionQuery((u,))
    for d in u:
        if d.arity != q0.arity:
            raise ValidationError(f"arity mismatch: {q0.name}/{q0.arity} vs {d.name}/{d.arity}")
    schema: Dict[str, int] = {}
    for cq in (q0, *u):
        for a in cq.body:
            schema.setdefault(a.relation, a.arity)
    if relation in schema:
        raise ValidationError(f"relation name {relation} already occurs in the queries")
    schema[relation] = q0.arity
    re = {}
    if is_satisfiable(q0):
        re["a1"] = (RealWorldEffect("r0", Atom(relation, q0.head), q0.body, q0.comparisons),)
    ce = {
        "a2": tuple(
            CopyEffect(f"c{i}", Atom(relation, d.head), d.body, d.comparisons)
            for i, d in enumerate(u, start=1)
        )
    }
    qats = Qats(
        states=("s0", "s1", "s2"),
        initial="s0",
        actions=("a1", "a2"),
        edges=(("s0", "a1", "s1"), ("s1", "a2", "s2")),
        re=re,
        ce=ce,
        schema=schema,
    )
    xs = tuple(Var(f"x{i}") for i in range(1, q0.arity + 1))
    goal = ConjunctiveQuery("Qgoal", xs, (Atom(relation, xs),))
    return qats, goal, ("a1", "a2")
