"""Brute-force semantic ground truth for the decision procedures.

Nothing here uses riskiness, repair or order-type enumeration; the searches
only apply the definitions (conformance, copying, query evaluation) to
concrete databases over a bounded domain.

Why the searches may restrict themselves
----------------------------------------

*Containment.* Conjunctive queries are monotone, so if some database ``D``
has an answer ``t`` of ``q0`` missed by every disjunct, so does the frozen
body ``V(q0)`` for the valuation ``V`` producing ``t`` (it is a subset of
``D``). It is therefore enough to enumerate valuations of ``q0`` over the
domain and test the database made of the image of its body.

*Developments.* Take a refuting development and an answer valuation ``V``
over ``D^rw_n`` whose head is missing from ``Q(D^is_n)``. Collect ``W``: the
facts of ``V``'s body and, for every collected fact that was added by some
step, the guard facts that justified it (transitively). Intersecting every
``D^rw_j`` with ``W`` yields another development: each kept new fact keeps
its guard witness, and copying over smaller databases copies less, so the
stored side only shrinks while ``V`` still holds. The search below builds
exactly such witness-closed developments: it picks ``V``, then a birth step
for every fact (0 for the initial database), and for facts born later an
effect and a guard valuation whose facts must exist one step earlier.

*Values.* Queries and guards only compare values with ``=``, ``!=``, ``<`` and
``<=``, so only the order type of a witness against the instance constants
matters. Values are therefore drawn lazily: a new variable may equal a
constant or a value already in play, or fall into one of the open intervals
those values cut out, each represented by ``numeric_anchor_padding``
interpolated values (one suffices for the rationals since they are dense).
Without order comparisons a single unused fresh symbol stands for every new
value. ``max_active_constants`` caps how many values outside the instance
constants a witness may use.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterator, List, Optional, Sequence, Set, Tuple

from .effects import associated_query
from .model import (
    ORDER_OPS,
    Atom,
    ConjunctiveQuery,
    Constant,
    Database,
    UnionQuery,
    ValidationError,
    Var,
    assignments,
    compare,
    constant_key,
    evaluate_query,
    has_answer,
)
from .qats import Development, Path, Qats


@dataclass(frozen=True)
class SearchBounds:
    """Size limits of the exhaustive searches.

    ``max_active_constants`` caps how many values outside the instance's own
    constants a witness may use; ``max_initial_facts`` and ``max_total_new_facts``
    cap the witness-closed development.
    """

    max_active_constants: int = 4
    max_new_facts_per_step: int = 2
    numeric_anchor_padding: int = 1
    max_path_length: int = 4
    max_initial_facts: int = 4
    max_total_new_facts: int = 4

    def __post_init__(self):
        for name in self.__dataclass_fields__:
            if getattr(self, name) < 1:
                raise ValidationError(f"search bound {name} must be at least 1")


def _between(lo: Optional[Constant], hi: Optional[Constant], k: int) -> List[Constant]:
    """Up to ``k`` increasing values strictly between ``lo`` and ``hi``
    (None is an open end), under the numbers-then-symbols order."""
    if isinstance(lo, str):
        vals = [lo + "\x00" * (i + 1) for i in range(k)]
        return [v for v in vals if hi is None or constant_key(v) < constant_key(hi)]
    top = hi if isinstance(hi, Fraction) else None
    if lo is None and top is None:
        return [Fraction(i) for i in range(k)]
    if lo is None:
        return [top - (k - i) for i in range(k)]
    if top is None:
        return [lo + i + 1 for i in range(k)]
    return [lo + (top - lo) * (i + 1) / (k + 1) for i in range(k)]


class _Domain:
    def __init__(self, anchors, ordered: bool, padding: int, limit: int):
        self.anchors = frozenset(anchors)
        self.ordered = ordered
        self.padding = padding
        self.limit = limit

    def extra(self, values) -> int:
        return len(set(values) - self.anchors)

    def candidates(self, used, ordered: bool = True) -> List[Constant]:
        points = sorted(self.anchors | set(used), key=constant_key)
        out = list(points)
        if self.extra(used) < self.limit:
            if self.ordered and ordered:
                for lo, hi in zip([None] + points, points + [None]):
                    out.extend(_between(lo, hi, self.padding))
            else:
                i = 1
                while f"_f{i}" in points:
                    i += 1
                out.append(f"_f{i}")
        return sorted(set(out), key=constant_key)


def active_domain(constants, ordered: bool, padding: int, used=()) -> List[Constant]:
    """The values a fresh variable may take next: the constants, the values in
    ``used``, and representatives of the gaps between them."""
    return _Domain(constants, ordered, padding, 1 << 30).candidates(used)


def _holds(c, env) -> bool:
    lv = env[c.left] if isinstance(c.left, Var) else c.left
    rv = env[c.right] if isinstance(c.right, Var) else c.right
    return compare(lv, c.op, rv)


def _valuations(
    vars_: Sequence[Var], comparisons, dom: _Domain, used=(), seed=None, ordered_vars=None
) -> Iterator[Dict[Var, Constant]]:
    """Every assignment of ``vars_`` extending ``seed`` that satisfies the
    comparisons, with values drawn from ``dom`` given what is already in use;
    each comparison is checked as soon as it is ground. Variables outside
    ``ordered_vars`` (when given) only distinguish equal from different."""
    env: Dict[Var, Constant] = dict(seed or {})
    todo = [v for v in vars_ if v not in env]
    base = set(used) | set(env.values())
    checks: List[list] = []
    done: Set[int] = set()
    bound = set(env)
    for i in range(len(todo) + 1):
        if i:
            bound.add(todo[i - 1])
        now = [c for c in comparisons if id(c) not in done and all(v in bound for v in c.variables())]
        done.update(id(c) for c in now)
        checks.append(now)

    def go(i, in_play):
        if not all(_holds(c, env) for c in checks[i]):
            return
        if i == len(todo):
            yield dict(env)
            return
        v = todo[i]
        ordered = ordered_vars is None or v in ordered_vars
        for val in dom.candidates(in_play, ordered):
            env[v] = val
            yield from go(i + 1, in_play | {val})
        del env[v]

    yield from go(0, frozenset(base))


def _order_used(comparisons) -> bool:
    return any(c.op in ORDER_OPS and c.left != c.right for c in comparisons)


def _order_relevant(comparisons) -> Set[Var]:
    """Variables whose position in the order can matter: those in a
    non-trivial order comparison and those equated with them."""
    out = {v for c in comparisons if c.op in ORDER_OPS and c.left != c.right for v in c.variables()}
    return _equality_closure(out, comparisons)


def _equality_closure(seed: Set[Var], comparisons) -> Set[Var]:
    out = set(seed)
    changed = True
    while changed:
        changed = False
        for c in comparisons:
            if c.op == "=" and isinstance(c.left, Var) and isinstance(c.right, Var):
                if (c.left in out) != (c.right in out):
                    out |= {c.left, c.right}
                    changed = True
    return out


def _ordered_variables(rules) -> List[Set[Var]]:
    """Per rule (atoms, comparisons), the variables that need ordered
    candidate values: order-relevant ones and those sitting in an argument
    position that some order-relevant variable of any rule reads."""
    positions = set()
    for atoms, comps in rules:
        rel = _order_relevant(comps)
        positions |= {(a.relation, i) for a in atoms for i, t in enumerate(a.args) if t in rel}
    out = []
    for atoms, comps in rules:
        vs = _order_relevant(comps)
        vs |= {t for a in atoms for i, t in enumerate(a.args) if isinstance(t, Var) and (a.relation, i) in positions}
        out.append(_equality_closure(vs, comps))
    return out


def refute_containment(q0: ConjunctiveQuery, u, b: SearchBounds = SearchBounds()) -> Optional[Database]:
    """Database on which some answer of ``q0`` is missed by every disjunct of ``u``."""
    if isinstance(u, ConjunctiveQuery):
        u = UnionQuery((u,))
    for d in u:
        if d.arity != q0.arity:
            raise ValidationError(f"arity mismatch: {q0.name}/{q0.arity} vs {d.name}/{d.arity}")
    consts = set(q0.constants())
    comps = list(q0.comparisons)
    for d in u:
        consts |= d.constants()
        comps.extend(d.comparisons)
    vars_ = q0.variables()
    dom = _Domain(consts, _order_used(comps), b.numeric_anchor_padding, max(len(vars_), 1))
    for env in _valuations(vars_, q0.comparisons, dom):
        db = Database(frozenset(a.substitute(env) for a in q0.body))
        head = tuple(env[t] if isinstance(t, Var) else t for t in q0.head)
        if not any(has_answer(d, db, head) for d in u):
            return db
    return None


class _SequenceSearch:
    def __init__(self, alpha, q: ConjunctiveQuery, qats: Qats, b: SearchBounds):
        self.alpha = tuple(alpha)
        self.q = q
        self.qats = qats
        self.b = b
        self.n = len(self.alpha)
        consts = set(q.constants())
        comps = list(q.comparisons)
        for a in set(self.alpha):
            for e in qats.real_world_effects(a) + qats.copy_effects(a):
                consts |= e.constants()
                comps.extend(e.guard_comparisons)
        self.dom = _Domain(consts, _order_used(comps), b.numeric_anchor_padding, b.max_active_constants)
        self.copy_queries = {
            a: tuple((c.relation, associated_query(c, full_head=True)) for c in qats.copy_effects(a))
            for a in set(self.alpha)
        }
        self._failed: Set = set()
        self._copied: Dict[Tuple[str, frozenset], frozenset] = {}
        effects = [e for a in sorted(set(self.alpha)) for e in qats.real_world_effects(a) + qats.copy_effects(a)]
        rules = [(q.body, q.comparisons)] + [((e.head,) + e.guard_atoms, e.guard_comparisons) for e in effects]
        ordered = _ordered_variables(rules)
        self.query_ordered = ordered[0]
        self.effect_ordered = {id(e): o for e, o in zip(effects, ordered[1:])}

    def run(self) -> Optional[Development]:
        q = self.q
        for env in _valuations(q.variables(), q.comparisons, self.dom, ordered_vars=self.query_ordered):
            body = sorted({a.substitute(env) for a in q.body}, key=_fact_key)
            self.answer = tuple(env[t] if isinstance(t, Var) else t for t in q.head)
            self.answer_values = set(env.values())
            self.fixed = frozenset(self.dom.anchors | self.answer_values)
            dev = self._justify([(f, self.n) for f in body], {})
            if dev is not None:
                return dev
        return None

    def _latest(self, f: Atom, deadline: int) -> int:
        # the last step up to the deadline whose action can add ``f`` at all
        for j in range(deadline, 0, -1):
            if any(e.head.relation == f.relation for e in self.qats.real_world_effects(self.alpha[j - 1])):
                return j
        return 0

    def _answered(self, births: Dict[Atom, int], pending) -> bool:
        # every extension has each pending fact born no later than its latest
        # possible step, and the stored side only grows as facts are added or
        # born earlier, so if this least extension yields the answer no
        # extension can refute
        least = dict(births)
        for g, d in pending:
            if g not in births:
                least[g] = min(least.get(g, d), self._latest(g, d))
        return has_answer(self.q, self._development(least).is_[-1], self.answer)

    def _justify(self, pending: List[Tuple[Atom, int]], births: Dict[Atom, int]) -> Optional[Development]:
        if not pending:
            dev = self._development(births)
            final_rw, final_is = dev.final
            if evaluate_query(self.q, final_rw) != evaluate_query(self.q, final_is):
                return dev
            return None
        # the search below depends only on the births so far and on what is
        # still pending, so a state that failed once fails again
        key = self._canonical(births, pending)
        if key in self._failed:
            return None
        dev = self._extend(pending, births)
        if dev is None:
            self._failed.add(key)
        return dev

    def _canonical(self, births, pending):
        # only the order type of the values matters: rename every value that
        # is neither a constant nor part of the answer by its gap and rank
        fixed = self.fixed
        loose = sorted({c for f in list(births) + [g for g, _ in pending] for c in f.args if c not in fixed}, key=constant_key)
        anchors = sorted(fixed, key=constant_key)
        rename, gap, rank = {}, 0, 0
        for c in loose:
            k = constant_key(c)
            g = gap
            while g < len(anchors) and constant_key(anchors[g]) < k:
                g += 1
            rank = rank + 1 if g == gap else 0
            gap = g
            rename[c] = ("~", gap, rank)

        def atom(f):
            return (f.relation, tuple(rename.get(c, c) for c in f.args))

        return (
            self.answer,
            frozenset((atom(f), s) for f, s in births.items()),
            frozenset((atom(g), d) for g, d in pending),
        )

    def _extend(self, pending: List[Tuple[Atom, int]], births: Dict[Atom, int]) -> Optional[Development]:
        (f, deadline), rest = pending[0], pending[1:]
        if f in births:
            if births[f] <= deadline:
                return self._justify(rest, births)
            return None
        # in the initial database
        if sum(1 for s in births.values() if s == 0) < self.b.max_initial_facts:
            births[f] = 0
            dev = None if self._answered(births, rest) else self._justify(rest, births)
            del births[f]
            if dev is not None:
                return dev
        # added by some later step
        for j in range(1, deadline + 1):
            if sum(1 for s in births.values() if s == j) >= self.b.max_new_facts_per_step:
                continue
            if sum(1 for s in births.values() if s > 0) >= self.b.max_total_new_facts:
                break
            for e in self.qats.real_world_effects(self.alpha[j - 1]):
                for guard in self._guards(e, f, births, rest):
                    births[f] = j
                    more = [(g, j - 1) for g in guard] + rest
                    dev = None if self._answered(births, more) else self._justify(more, births)
                    del births[f]
                    if dev is not None:
                        return dev
        return None

    def _guards(self, e, f, births, pending) -> Iterator[List[Atom]]:
        if e.head.relation != f.relation or e.head.arity != f.arity:
            return
        env: Dict[Var, Constant] = {}
        for t, c in zip(e.head.args, f.args):
            if isinstance(t, Var):
                if env.setdefault(t, c) != c:
                    return
            elif t != c or type(t) is not type(c):
                return
        rest = [v for v in e.variables() if v not in env]
        used = {c for g in births for c in g.args} | {c for g, _ in pending for c in g.args}
        used |= self.answer_values | set(f.args)
        for full in _valuations(rest, e.guard_comparisons, self.dom, used, env, self.effect_ordered[id(e)]):
            yield sorted({a.substitute(full) for a in e.guard_atoms}, key=_fact_key)

    def _copy(self, action: str, d: Database) -> frozenset:
        key = (action, d.facts)
        hit = self._copied.get(key)
        if hit is None:
            out = set()
            for rel, p in self.copy_queries[action]:
                for env in assignments(p.body, p.comparisons, d):
                    out.add(Atom(rel, tuple(env[t] if isinstance(t, Var) else t for t in p.head)))
            hit = self._copied[key] = frozenset(out)
        return hit

    def _development(self, births: Dict[Atom, int]) -> Development:
        rw = [Database(frozenset(f for f, s in births.items() if s <= j)) for j in range(self.n + 1)]
        trace = [rw[0]]
        for j, a in enumerate(self.alpha, start=1):
            trace.append(trace[-1] | self._copy(a, rw[j]))
        return Development(self.alpha, tuple(rw), tuple(trace))


def _fact_key(f: Atom):
    return (f.relation, tuple(constant_key(c) for c in f.args))


def refute_sequence(
    alpha: Sequence[str], q: ConjunctiveQuery, qats: Qats, b: SearchBounds = SearchBounds()
) -> Optional[Development]:
    """A development of ``alpha`` after which ``q`` is incomplete, or None within bounds."""
    for a in alpha:
        if a not in qats.actions:
            raise ValidationError(f"unknown action {a}")
    if not alpha:
        return None
    return _SequenceSearch(alpha, q, qats, b).run()


def enumerate_paths(s: str, qats: Qats, max_len: int) -> List[Path]:
    """All paths from the initial state to ``s`` with at most ``max_len``
    transitions, shortest first and lexicographic within a length."""
    out: List[Path] = []
    frontier: List[Tuple[Tuple[str, str, str], ...]] = [()]
    edges = sorted(qats.edges)
    if s == qats.initial:
        out.append(Path((), start=qats.initial))
    for _ in range(max_len):
        nxt = []
        for p in frontier:
            here = p[-1][2] if p else qats.initial
            for e in edges:
                if e[0] == here:
                    nxt.append(p + (e,))
        out.extend(Path(p, start=qats.initial) for p in nxt if p[-1][2] == s)
        frontier = nxt
    return out


__all__ = [
    "SearchBounds",
    "active_domain",
    "enumerate_paths",
    "refute_containment",
    "refute_sequence",
]
