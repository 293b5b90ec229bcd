"""Containment of a conjunctive query in a union of conjunctive queries.

The procedure freezes the left query under every *order type* of its terms.
All constants of both sides are anchors on one line (rationals first, then
symbols, see :func:`qcompl.model.constant_key`); each variable either equals an
anchor or sits in one of the open gaps between anchors, ordered against the
other variables in the same gap. A canonical database realises each order type
with concrete constants; containment holds iff the frozen head is an answer of
some disjunct on every canonical database.

Without order comparisons anywhere only the equality pattern matters, and with
no comparisons at all a single freezing with pairwise distinct fresh values is
enough.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

from .model import (
    ORDER_OPS,
    Comparison,
    ConjunctiveQuery,
    Constant,
    Database,
    UnionQuery,
    ValidationError,
    Var,
    compare,
    constant_key,
    has_answer,
)


@dataclass(frozen=True)
class TermPreorder:
    """An order type of a query's variables relative to a set of anchor constants.

    ``chain`` lists the blocks from smallest to largest; a block holds
    variables and at most one anchor constant. Order-free types leave
    ``chain`` empty and use ``symbol_blocks``: a block ending in a constant
    equals it, any other block denotes a fresh value.
    """

    chain: Tuple[Tuple[object, ...], ...]
    symbol_blocks: Tuple[Tuple[object, ...], ...]
    assignment: Tuple[Tuple[Var, Constant], ...]

    def as_dict(self) -> Dict[Var, Constant]:
        return dict(self.assignment)


def _fresh_symbols(taken: Iterable[Constant], n: int) -> List[str]:
    taken = set(taken)
    out: List[str] = []
    i = 1
    while len(out) < n:
        cand = f"_c{i}"
        if cand not in taken:
            out.append(cand)
        i += 1
    return out


def simplify(q: ConjunctiveQuery) -> Optional[ConjunctiveQuery]:
    """Eliminate equalities by substitution and evaluate ground comparisons.

    Returns ``None`` when the comparisons are contradictory on their face
    (two distinct constants equated, a false ground comparison, ``x != x`` or
    ``x < x``).
    """
    parent: Dict[object, object] = {}

    def find(t):
        parent.setdefault(t, t)
        while parent[t] != t or type(parent[t]) is not type(t):
            parent[t] = parent[parent[t]]
            t = parent[t]
        return t

    order = {v: i for i, v in enumerate(q.variables())}

    def better(a, b):
        # constants win; among variables the earliest occurring one
        if not isinstance(a, Var):
            return a
        if not isinstance(b, Var):
            return b
        return a if order.get(a, 1 << 30) <= order.get(b, 1 << 30) else b

    for c in q.comparisons:
        if c.op != "=":
            continue
        a, b = find(c.left), find(c.right)
        if a == b and type(a) is type(b):
            continue
        if not isinstance(a, Var) and not isinstance(b, Var):
            return None
        root = better(a, b)
        other = b if root is a else a
        parent[other] = root
        parent.setdefault(root, root)

    sub = {v: find(v) for v in q.variables() if v in parent}
    sub = {k: v for k, v in sub.items() if k != v}
    rest: List[Comparison] = []
    for c in q.comparisons:
        if c.op == "=":
            continue
        c2 = c.substitute(sub)
        l_var, r_var = isinstance(c2.left, Var), isinstance(c2.right, Var)
        if not l_var and not r_var:
            if not compare(c2.left, c2.op, c2.right):
                return None
            continue
        if l_var and r_var and c2.left == c2.right:
            if c2.op in ("!=", "<"):
                return None
            continue
        if c2 not in rest:
            rest.append(c2)
    return ConjunctiveQuery(
        q.name,
        tuple(sub.get(t, t) if isinstance(t, Var) else t for t in q.head),
        tuple(a.substitute(sub) for a in q.body),
        tuple(rest),
    )


def _set_partitions(items: Sequence) -> Iterator[List[List]]:
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        yield [[first]] + part
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1 :]


def _ordered_partitions(items: Sequence) -> Iterator[List[List]]:
    """Every total preorder on ``items`` as a list of blocks, smallest first."""
    if not items:
        yield []
        return
    n = len(items)
    # choose the first block (non-empty subset), recurse on the remainder
    for size in range(1, n + 1):
        for first in itertools.combinations(range(n), size):
            chosen = [items[i] for i in first]
            rest = [items[i] for i in range(n) if i not in first]
            for tail in _ordered_partitions(rest):
                yield [chosen] + tail


def _between_symbols(low: str, high: Optional[str], k: int) -> Optional[List[str]]:
    out = [low + "\x00" * (i + 1) for i in range(k)]
    if high is not None and out and out[-1] >= high:
        return None
    return out


def _interpolate(low: Optional[Constant], high: Optional[Constant], k: int) -> Optional[List[Constant]]:
    """``k`` increasing constants strictly between ``low`` and ``high``
    (None for an open end); None if the gap has no room (between symbols)."""
    if isinstance(low, str):
        return _between_symbols(low, high, k)
    # below a symbol the rationals are unbounded above
    top = high if isinstance(high, Fraction) else None
    if low is None and top is None:
        return [Fraction(i) for i in range(k)]
    if low is None:
        return [top - (k - i) for i in range(k)]
    if top is None:
        return [low + (i + 1) for i in range(k)]
    step = (top - low) / (k + 1)
    return [low + step * (i + 1) for i in range(k)]


def _layouts(vars_: Sequence[Var], anchors: Sequence[Constant]) -> Iterator[Tuple[tuple, Dict[Var, Constant]]]:
    """Place variables relative to the sorted anchors, yielding the block
    chain and a concrete realisation of it."""
    k = len(anchors)
    # slot 2*i+1 is anchor i; slot 2*i is the open interval below anchor i;
    # slot 2*k is the interval above all anchors
    slots = range(2 * k + 1)
    for placement in itertools.product(slots, repeat=len(vars_)):
        groups: Dict[int, List[Var]] = {}
        for v, s in zip(vars_, placement):
            groups.setdefault(s, []).append(v)
        interval_slots = [s for s in sorted(groups) if s % 2 == 0]
        per_interval = [list(_ordered_partitions(groups[s])) for s in interval_slots]
        for choice in itertools.product(*per_interval):
            layout = dict(zip(interval_slots, choice))
            chain: List[tuple] = []
            values: Dict[Var, Constant] = {}
            feasible = True
            for s in slots:
                if s % 2 == 1:
                    anchor = anchors[s // 2]
                    chain.append(tuple(groups.get(s, ())) + (anchor,))
                    for v in groups.get(s, ()):
                        values[v] = anchor
                elif s in layout:
                    i = s // 2
                    low = anchors[i - 1] if i > 0 else None
                    high = anchors[i] if i < k else None
                    blocks = layout[s]
                    fill = _interpolate(low, high, len(blocks))
                    if fill is None:
                        feasible = False
                        break
                    for block, val in zip(blocks, fill):
                        chain.append(tuple(block))
                        for v in block:
                            values[v] = val
            if feasible:
                yield tuple(chain), values


def _comparison_holds(c: Comparison, env: Dict[Var, Constant]) -> bool:
    lv = env[c.left] if isinstance(c.left, Var) else c.left
    rv = env[c.right] if isinstance(c.right, Var) else c.right
    return compare(lv, c.op, rv)


def _order_relevant(queries: Iterable[ConjunctiveQuery]) -> bool:
    return any(c.op in ORDER_OPS for q in queries for c in q.comparisons)


def enumerate_preorders(
    q: ConjunctiveQuery,
    constants: Iterable[Constant] = (),
    with_order: Optional[bool] = None,
) -> Iterator[TermPreorder]:
    """Yield every order type of ``q``'s variables consistent with its comparisons.

    ``constants`` adds anchors beyond those occurring in ``q`` (the constants
    of the other side of a containment check). With ``with_order=False`` the
    relative order of values is ignored and only equalities with constants
    and among variables are distinguished.
    """
    consts = set(q.constants()) | set(constants)
    anchors = sorted(consts, key=constant_key)
    if with_order is None:
        with_order = _order_relevant([q])
    vars_ = list(q.variables())
    if not with_order:
        yield from _equality_types(q, vars_, anchors, consts)
        return
    for chain, env in _layouts(vars_, anchors):
        if all(_comparison_holds(c, env) for c in q.comparisons):
            yield TermPreorder(chain, (), tuple((v, env[v]) for v in vars_))


def _equality_types(q, vars_, anchors, consts) -> Iterator[TermPreorder]:
    for part in _set_partitions(vars_):
        # each block is equated with a distinct constant or left fresh
        options = [[None] + list(anchors) for _ in part]
        for pick in itertools.product(*options):
            used = [p for p in pick if p is not None]
            if len(used) != len(set(used)):
                continue
            free = [i for i, p in enumerate(pick) if p is None]
            fresh = iter(_fresh_symbols(consts, len(free)))
            env: Dict[Var, Constant] = {}
            for block, p in zip(part, pick):
                val = p if p is not None else next(fresh)
                for v in block:
                    env[v] = val
            if all(_comparison_holds(c, env) for c in q.comparisons):
                blocks = tuple(tuple(b) + ((p,) if p is not None else ()) for b, p in zip(part, pick))
                yield TermPreorder((), blocks, tuple((v, env[v]) for v in vars_))


def canonical_database(q: ConjunctiveQuery, p: TermPreorder) -> Tuple[Database, tuple]:
    """Freeze ``q`` under ``p``: returns the database and the frozen head tuple."""
    env = p.as_dict()
    facts = frozenset(a.substitute(env) for a in q.body)
    head = tuple(env[t] if isinstance(t, Var) else t for t in q.head)
    return Database(facts), head


def is_satisfiable(q: ConjunctiveQuery) -> bool:
    s = simplify(q)
    if s is None:
        return False
    if not s.comparisons:
        return True
    return next(enumerate_preorders(s), None) is not None


def intersect(q1: ConjunctiveQuery, q2: ConjunctiveQuery, name: Optional[str] = None) -> ConjunctiveQuery:
    """A query whose answers are exactly those of both ``q1`` and ``q2``."""
    if q1.arity != q2.arity:
        raise ValidationError(f"cannot intersect {q1.name}/{q1.arity} with {q2.name}/{q2.arity}")
    taken = {v.name for v in q1.variables()}
    suffix = "_2"
    while any((v.name + suffix) in taken for v in q2.variables()):
        suffix += "_"
    r2 = q2.rename_apart(suffix)
    eqs = tuple(Comparison(a, "=", b) for a, b in zip(q1.head, r2.head))
    return ConjunctiveQuery(
        name or f"{q1.name}_and_{q2.name}",
        q1.head,
        q1.body + r2.body,
        q1.comparisons + r2.comparisons + eqs,
    )


@dataclass
class ContainmentStats:
    calls: int = 0
    canonical_databases: int = 0


def find_counterexample(
    q0: ConjunctiveQuery,
    u: UnionQuery,
    stats: Optional[ContainmentStats] = None,
) -> Optional[Database]:
    """Canonical database on which some answer of ``q0`` is missed by ``u``, or None."""
    disjuncts = tuple(u) if isinstance(u, UnionQuery) else tuple(u)
    for d in disjuncts:
        if d.arity != q0.arity:
            raise ValidationError(
                f"arity mismatch: {q0.name}/{q0.arity} vs {d.name}/{d.arity}"
            )
    if stats is not None:
        stats.calls += 1
    s0 = simplify(q0)
    if s0 is None:
        return None
    right = [s for s in (simplify(d) for d in disjuncts) if s is not None]
    extra = set()
    for d in right:
        extra |= d.constants()
    if not s0.comparisons and not any(d.comparisons for d in right):
        # single freezing, all variables distinct
        fresh = _fresh_symbols(s0.constants() | extra, len(s0.variables()))
        env = dict(zip(s0.variables(), fresh))
        types: Iterable[TermPreorder] = [
            TermPreorder((), tuple((v,) for v in s0.variables()), tuple(env.items()))
        ]
    else:
        types = enumerate_preorders(s0, extra, with_order=_order_relevant([s0, *right]))
    for p in types:
        db, head = canonical_database(s0, p)
        if stats is not None:
            stats.canonical_databases += 1
        if not any(has_answer(d, db, head) for d in right):
            return db
    return None


def contains(q0: ConjunctiveQuery, u, stats: Optional[ContainmentStats] = None) -> bool:
    """``q0 ⊆ q1 ∪ … ∪ qn`` over all databases."""
    if isinstance(u, ConjunctiveQuery):
        u = UnionQuery((u,))
    return find_counterexample(q0, u, stats) is None


__all__ = [
    "ContainmentStats",
    "TermPreorder",
    "canonical_database",
    "contains",
    "enumerate_preorders",
    "find_counterexample",
    "intersect",
    "is_satisfiable",
    "simplify",
    "constant_key",
]
