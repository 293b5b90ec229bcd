"""Quality-aware transition systems: labelled transition systems whose actions
carry real-world and copy effects, plus paths, action sequences, normal forms
and developments."""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

from .effects import CopyEffect, RealWorldEffect, apply_copy, conforms, is_useless
from .model import Atom, Database, ValidationError, Var, assignments, compare, constant_key

Edge = Tuple[str, str, str]


@dataclass(frozen=True)
class Violation:
    message: str
    location: str = ""

    def __str__(self) -> str:
        return f"{self.location}: {self.message}" if self.location else self.message


@dataclass(frozen=True, eq=True)
class Qats:
    states: Tuple[str, ...]
    initial: str
    actions: Tuple[str, ...]
    edges: Tuple[Edge, ...]
    re: Mapping[str, Tuple[RealWorldEffect, ...]] = field(default_factory=dict)
    ce: Mapping[str, Tuple[CopyEffect, ...]] = field(default_factory=dict)
    schema: Mapping[str, int] = field(default_factory=dict)

    __hash__ = object.__hash__

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "actions", tuple(self.actions))
        object.__setattr__(self, "edges", tuple(self.edges))
        # actions without effects are simply absent, so equal systems compare equal
        object.__setattr__(self, "re", {a: tuple(es) for a, es in self.re.items() if es})
        object.__setattr__(self, "ce", {a: tuple(es) for a, es in self.ce.items() if es})
        object.__setattr__(self, "schema", dict(self.schema))

    def real_world_effects(self, action: str) -> Tuple[RealWorldEffect, ...]:
        return self.re.get(action, ())

    def copy_effects(self, action: str) -> Tuple[CopyEffect, ...]:
        return self.ce.get(action, ())

    def successors(self, state: str, action: str) -> List[str]:
        return [t for s, a, t in self.edges if s == state and a == action]

    def outgoing(self, state: str) -> List[Edge]:
        return [e for e in self.edges if e[0] == state]


@dataclass(frozen=True)
class Path:
    """A chain of transitions; the empty path sits at ``start``."""

    transitions: Tuple[Edge, ...] = ()
    start: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "transitions", tuple(tuple(t) for t in self.transitions))
        if self.start is None and self.transitions:
            object.__setattr__(self, "start", self.transitions[0][0])
        for (_, _, t), (s, _, _) in zip(self.transitions, self.transitions[1:]):
            if t != s:
                raise ValidationError(f"path transitions do not chain at {t} / {s}")

    @property
    def end(self) -> Optional[str]:
        return self.transitions[-1][2] if self.transitions else self.start

    def __len__(self) -> int:
        return len(self.transitions)


@dataclass(frozen=True)
class Development:
    """Real-world databases ``D_0..D_n`` and their information-system trace."""

    actions: Tuple[str, ...]
    rw: Tuple[Database, ...]
    is_: Tuple[Database, ...]

    @property
    def final(self) -> Tuple[Database, Database]:
        return self.rw[-1], self.is_[-1]


def validate(q: Qats) -> List[Violation]:
    """Every structural problem of ``q``; an empty list means valid."""
    out: List[Violation] = []
    states = set(q.states)
    actions = set(q.actions)
    if len(states) != len(q.states):
        out.append(Violation("duplicate state declaration"))
    if len(actions) != len(q.actions):
        out.append(Violation("duplicate action declaration"))
    if q.initial not in states:
        out.append(Violation(f"initial state {q.initial} is not declared"))
    for s, a, t in q.edges:
        loc = f"edge {s} -{a}-> {t}"
        for end in (s, t):
            if end not in states:
                out.append(Violation(f"unknown state {end}", loc))
        if a not in actions:
            out.append(Violation(f"unknown action {a}", loc))
    for kind, mapping in (("rweffect", q.re), ("copyeffect", q.ce)):
        for a, effects in mapping.items():
            if a not in actions:
                out.append(Violation(f"effects bound to unknown action {a}", kind))
            for e in effects:
                loc = f"{kind} {e.id} on {a}"
                for atom in (e.head,) + e.guard_atoms:
                    if atom.relation not in q.schema:
                        out.append(Violation(f"unknown relation {atom.relation}", loc))
                    elif q.schema[atom.relation] != atom.arity:
                        out.append(
                            Violation(
                                f"relation {atom.relation} has arity {q.schema[atom.relation]}, used with {atom.arity}",
                                loc,
                            )
                        )
                if kind == "rweffect" and is_useless(e):
                    out.append(Violation(f"useless effect {e.id}", loc))
    return out


def check(q: Qats) -> Qats:
    problems = validate(q)
    if problems:
        raise ValidationError("; ".join(map(str, problems)))
    return q


def action_sequence_of(p: Path) -> Tuple[str, ...]:
    return tuple(a for _, a, _ in p.transitions)


def normalize(alpha: Sequence[str]) -> Tuple[str, ...]:
    """Keep only the last occurrence of every action."""
    last = {a: i for i, a in enumerate(alpha)}
    return tuple(a for i, a in enumerate(alpha) if last[a] == i)


def remove_first_repeat(alpha: Sequence[str]) -> Tuple[str, ...]:
    """Drop the earliest occurrence of the first action that occurs twice."""
    seen: Dict[str, int] = {}
    for i, a in enumerate(alpha):
        if a in seen:
            j = seen[a]
            return tuple(alpha[:j]) + tuple(alpha[j + 1 :])
        seen[a] = i
    return tuple(alpha)


class _Reach:
    """Cached reachability for one QATS."""

    def __init__(self, q: Qats):
        self.q = q
        self.by_source: Dict[str, List[Tuple[str, str]]] = {}
        for s, a, t in q.edges:
            self.by_source.setdefault(s, []).append((a, t))
        self._closure: Dict[Tuple[FrozenSet[str], FrozenSet[str]], FrozenSet[str]] = {}
        self._component: Dict[Tuple[FrozenSet[str], str, FrozenSet[str]], FrozenSet[str]] = {}

    def closure(self, start: FrozenSet[str], allowed: FrozenSet[str]) -> FrozenSet[str]:
        key = (start, allowed)
        hit = self._closure.get(key)
        if hit is not None:
            return hit
        seen = set(start)
        stack = list(start)
        while stack:
            s = stack.pop()
            for a, t in self.by_source.get(s, ()):
                if a in allowed and t not in seen:
                    seen.add(t)
                    stack.append(t)
        out = frozenset(seen)
        self._closure[key] = out
        return out

    def component(self, cur: FrozenSet[str], action: str, allowed: FrozenSet[str]) -> FrozenSet[str]:
        """States reachable by any word over ``allowed`` followed by ``action``."""
        key = (cur, action, allowed)
        hit = self._component.get(key)
        if hit is not None:
            return hit
        pre = self.closure(cur, allowed)
        out = frozenset(t for s in pre for a, t in self.by_source.get(s, ()) if a == action)
        self._component[key] = out
        return out

    def run(self, alpha: Sequence[str]) -> FrozenSet[str]:
        cur = frozenset([self.q.initial])
        for i, a in enumerate(alpha):
            cur = self.component(cur, a, frozenset(alpha[i:]))
            if not cur:
                break
        return cur


def realizable(alpha: Sequence[str], s: str, q: Qats, _reach: Optional[_Reach] = None) -> bool:
    """Some path from the initial state to ``s`` has ``alpha`` as normal action sequence.

    The words with normal form ``a1..an`` are exactly
    ``{a1..an}* a1 {a2..an}* a2 … {an}* an``; each component is a closure over
    the still-allowed actions followed by one mandatory step.
    """
    if len(set(alpha)) != len(alpha):
        raise ValidationError(f"action sequence {list(alpha)} is not duplicate-free")
    if not alpha:
        return s == q.initial
    reach = _reach or _Reach(q)
    return s in reach.run(alpha)


def enumerate_normal_sequences(s: str, q: Qats) -> Iterator[Tuple[str, ...]]:
    """Normal action sequences realizable at ``s``, shortest first, then lexicographic."""
    reach = _Reach(q)
    acts = sorted(q.actions)
    if s == q.initial:
        yield ()
    for k in range(1, len(acts) + 1):
        yield from _dfs(reach, acts, k, (), frozenset([q.initial]), s)


def _dfs(reach: _Reach, acts, k, prefix, upper, target):
    # ``upper`` over-approximates the states reached by the prefix: every
    # not-yet-used action is still allowed in its closures
    if len(prefix) == k:
        if target in reach.run(prefix):
            yield prefix
        return
    used = set(prefix)
    for a in acts:
        if a in used:
            continue
        allowed = frozenset(x for x in acts if x not in used)
        nxt = reach.component(upper, a, allowed)
        # the rest of the word only uses actions that are still unused
        if nxt and target in reach.closure(nxt, allowed - {a}):
            yield from _dfs(reach, acts, k, prefix + (a,), nxt, target)


@dataclass(frozen=True)
class SimulationBudget:
    max_new_facts: int = 2
    min_new_facts: int = 0
    fresh_pool: int = 2
    seed: int = 0


def _candidate_facts(effects: Iterable[RealWorldEffect], d: Database, pool: Sequence) -> List[Tuple[Atom, str]]:
    out: Dict[Atom, str] = {}
    for e in effects:
        in_atoms = {v for a in e.guard_atoms for v in a.variables()}
        free = [v for v in dict.fromkeys(e.head.variables()) if v not in in_atoms]
        for env in assignments(e.guard_atoms, (), d):
            for values in itertools.product(pool, repeat=len(free)):
                full = dict(env)
                full.update(zip(free, values))
                if not all(_holds(c, full) for c in e.guard_comparisons):
                    continue
                f = e.head.substitute(full)
                if f not in d.facts and f not in out:
                    out[f] = e.id
    return sorted(out.items(), key=lambda kv: (kv[0].relation, tuple(constant_key(c) for c in kv[0].args)))


def _holds(c, env) -> bool:
    lv = env[c.left] if isinstance(c.left, Var) else c.left
    rv = env[c.right] if isinstance(c.right, Var) else c.right
    return compare(lv, c.op, rv)


def simulate(alpha: Sequence[str], q: Qats, d0: Database, budget: SimulationBudget = SimulationBudget()) -> Development:
    """Sample one development of ``alpha`` starting from ``d0``.

    Each step adds a random set of facts that conform to the action's
    real-world effects (between ``min_new_facts`` and ``max_new_facts`` when
    that many candidates exist), then applies the copy effects to the new
    real-world database.
    """
    for a in alpha:
        if a not in q.actions:
            raise ValidationError(f"unknown action {a}")
    rng = random.Random(budget.seed)
    fresh = [f"_n{i}" for i in range(1, budget.fresh_pool + 1)]
    rw = [d0]
    trace = [d0]
    for a in alpha:
        cur = rw[-1]
        pool = sorted(set(cur.constants()) | set(fresh) | _effect_constants(q, a), key=constant_key)
        cands = _candidate_facts(q.real_world_effects(a), cur, pool)
        hi = min(budget.max_new_facts, len(cands))
        lo = min(budget.min_new_facts, hi)
        n = rng.randint(lo, hi) if hi else 0
        chosen = rng.sample(cands, n)
        nxt = cur | {f for f, _ in chosen}
        rw.append(nxt)
        trace.append(trace[-1] | apply_copy(q.copy_effects(a), nxt))
    return Development(tuple(alpha), tuple(rw), tuple(trace))


def check_development(dev: Development, q: Qats) -> List[str]:
    """Problems with ``dev`` as a development of its actions; empty when sound."""
    problems = []
    n = len(dev.actions)
    if len(dev.rw) != n + 1 or len(dev.is_) != n + 1:
        return [f"expected {n + 1} databases on each side"]
    if dev.is_[0] != dev.rw[0]:
        problems.append("stored side does not start from the initial real-world database")
    for j, a in enumerate(dev.actions, start=1):
        if a not in q.actions:
            problems.append(f"step {j}: unknown action {a}")
            continue
        before, after = dev.rw[j - 1], dev.rw[j]
        if not before.facts <= after.facts:
            problems.append(f"step {j}: facts were removed")
        elif not conforms(before, after, q.real_world_effects(a)):
            problems.append(f"step {j}: new facts not justified by the effects of {a}")
        if dev.is_[j] != dev.is_[j - 1] | apply_copy(q.copy_effects(a), after):
            problems.append(f"step {j}: stored side does not follow the copy effects of {a}")
    return problems


def _effect_constants(q: Qats, a: str) -> set:
    out = set()
    for e in q.real_world_effects(a):
        for c in e.constants():
            out.add(c)
            if isinstance(c, Fraction):
                out.update((c - 1, c + 1))
    return out


__all__ = [
    "Development",
    "Path",
    "Qats",
    "SimulationBudget",
    "Violation",
    "action_sequence_of",
    "check",
    "check_development",
    "enumerate_normal_sequences",
    "normalize",
    "realizable",
    "remove_first_repeat",
    "simulate",
    "validate",
]
