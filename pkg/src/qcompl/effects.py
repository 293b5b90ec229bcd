"""Real-world and copy effects, conformance, the copy function and the
queries derived from effects and queries (associated queries, atom and
relation projections)."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, Optional, Tuple

from .containment import enumerate_preorders, simplify
from .model import (
    Atom,
    Comparison,
    ConjunctiveQuery,
    Constant,
    Database,
    UnionQuery,
    ValidationError,
    Var,
    assignments,
    evaluate_query,
)


@dataclass(frozen=True)
class Effect:
    """Guarded template ``R(x̄,ȳ)`` with guard atoms and comparisons over (x̄, z̄)."""

    id: str
    head: Atom
    guard_atoms: Tuple[Atom, ...] = ()
    guard_comparisons: Tuple[Comparison, ...] = ()

    def __post_init__(self):
        for attr in ("guard_atoms", "guard_comparisons"):
            value = getattr(self, attr)
            if not isinstance(value, tuple):
                object.__setattr__(self, attr, tuple(value))
        bound = set(self.head.variables()) | {v for a in self.guard_atoms for v in a.variables()}
        loose = {v for c in self.guard_comparisons for v in c.variables()} - bound
        if loose:
            names = ", ".join(sorted(v.name for v in loose))
            raise ValidationError(f"effect {self.id}: comparison variables {names} occur in no atom")

    @property
    def relation(self) -> str:
        return self.head.relation

    def guard_variables(self) -> set:
        out = {v for a in self.guard_atoms for v in a.variables()}
        out.update(v for c in self.guard_comparisons for v in c.variables())
        return out

    def frontier(self) -> Tuple[Var, ...]:
        """x̄: head variables that the guard constrains."""
        g = self.guard_variables()
        return tuple(dict.fromkeys(v for v in self.head.variables() if v in g))

    def unrestricted(self) -> Tuple[Var, ...]:
        """ȳ: head variables free to take any value."""
        g = self.guard_variables()
        return tuple(dict.fromkeys(v for v in self.head.variables() if v not in g))

    def variables(self) -> Tuple[Var, ...]:
        seen = dict.fromkeys(self.head.variables())
        for a in self.guard_atoms:
            seen.update(dict.fromkeys(a.variables()))
        for c in self.guard_comparisons:
            seen.update(dict.fromkeys(c.variables()))
        return tuple(seen)

    def constants(self) -> frozenset:
        out = {a for a in self.head.args if not isinstance(a, Var)}
        for at in self.guard_atoms:
            out.update(a for a in at.args if not isinstance(a, Var))
        for c in self.guard_comparisons:
            out.update(t for t in (c.left, c.right) if not isinstance(t, Var))
        return frozenset(out)

    def guard_str(self) -> str:
        return ", ".join([str(a) for a in self.guard_atoms] + [str(c) for c in self.guard_comparisons])


class RealWorldEffect(Effect):
    def __str__(self) -> str:
        return f"{self.id}: {self.head} <~ {self.guard_str()}".rstrip()


class CopyEffect(Effect):
    def __str__(self) -> str:
        guard = self.guard_str()
        return f"{self.id}: {self.head}{' if ' + guard if guard else ''} ~> copy"


def unify_with_fact(head: Atom, f: Atom) -> Optional[Dict[Var, Constant]]:
    if head.relation != f.relation or head.arity != f.arity:
        return None
    env: Dict[Var, Constant] = {}
    for t, c in zip(head.args, f.args):
        if isinstance(t, Var):
            if t in env and env[t] != c:
                return None
            env[t] = c
        elif t != c or type(t) is not type(c):
            return None
    return env


def fact_conforms(f: Atom, d1: Database, effect: Effect) -> bool:
    """``f`` is a head instance of ``effect`` whose guard holds in ``d1``."""
    env = unify_with_fact(effect.head, f)
    if env is None:
        return False
    for _ in assignments(effect.guard_atoms, effect.guard_comparisons, d1, env):
        return True
    return False


def conforms(d1: Database, d2: Database, effects: Iterable[Effect]) -> bool:
    """Every fact new in ``d2`` is justified by some effect whose guard holds in ``d1``."""
    effects = tuple(effects)
    return all(any(fact_conforms(f, d1, e) for e in effects) for f in d2.facts - d1.facts)


def associated_query(effect: Effect, full_head: bool = False) -> ConjunctiveQuery:
    """``P(x̄,ȳ) :- R(x̄,ȳ), G(x̄,z̄)``.

    With ``full_head`` the head is the effect atom's full argument tuple, so
    the query returns R-tuples; the containment algebra works on that form.
    """
    if full_head:
        head = effect.head.args
    else:
        head = tuple(dict.fromkeys(effect.head.variables()))
    return ConjunctiveQuery(
        f"P_{effect.id}",
        head,
        (effect.head,) + effect.guard_atoms,
        effect.guard_comparisons,
    )


def apply_copy(effects: Iterable[CopyEffect], d_rw: Database) -> Database:
    out = set()
    for c in effects:
        p = associated_query(c, full_head=True)
        for row in evaluate_query(p, d_rw):
            out.add(Atom(c.relation, row))
    return Database(frozenset(out))


def is_useless(r: Effect) -> bool:
    """No pair of databases with a non-empty difference conforms to ``r``.

    That happens exactly when no order type of the effect's terms satisfies
    the guard comparisons while keeping the new head fact distinct from every
    guard atom (a guard atom that must coincide with the head would have to be
    both old and new).
    """
    p = associated_query(r, full_head=True)
    s = simplify(p)
    if s is None:
        return True
    head_fact = s.body[0]
    for order in enumerate_preorders(s):
        env = order.as_dict()
        frozen_head = head_fact.substitute(env)
        if all(g.substitute(env) != frozen_head for g in s.body[1:]):
            return False
    return True


def atom_projection(q: ConjunctiveQuery, i: int) -> ConjunctiveQuery:
    """``Q^π_i(x̄) :- body(Q), x̄ = t̄_i`` with fresh head variables (``i`` is 1-based)."""
    if not 1 <= i <= len(q.body):
        raise IndexError(f"atom index {i} out of range for {q.name} with {len(q.body)} atoms")
    atom = q.body[i - 1]
    taken = {v.name for v in q.variables()}
    fresh = []
    k = 1
    while len(fresh) < atom.arity:
        name = f"x{k}"
        if name not in taken:
            fresh.append(Var(name))
        k += 1
    eqs = tuple(Comparison(x, "=", t) for x, t in zip(fresh, atom.args))
    return ConjunctiveQuery(f"{q.name}_pi{i}", tuple(fresh), q.body, q.comparisons + eqs)


def r_projection(q: ConjunctiveQuery, relation: str) -> UnionQuery:
    return UnionQuery(
        tuple(atom_projection(q, i) for i, a in enumerate(q.body, start=1) if a.relation == relation)
    )


__all__ = [
    "CopyEffect",
    "Effect",
    "RealWorldEffect",
    "apply_copy",
    "associated_query",
    "atom_projection",
    "conforms",
    "fact_conforms",
    "is_useless",
    "r_projection",
]
