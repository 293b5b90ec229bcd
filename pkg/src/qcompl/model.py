"""Relational core: terms, atoms, conjunctive queries and their evaluation.

Numeric constants are exact :class:`fractions.Fraction` values, symbol
constants plain ``str`` values. All constants live in one total order: the
rationals (dense) followed by the symbols in lexicographic order. Query text
may only order-compare against numeric constants, but a variable bound to a
symbol still compares against numbers consistently.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Dict, Iterable, Iterator, Mapping, Optional, Tuple, Union


class ValidationError(ValueError):
    """Raised when an input violates a structural or schema constraint."""


@dataclass(frozen=True, order=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


Constant = Union[Fraction, str]
Term = Union[Var, Fraction, str]

ORDER_OPS = ("<", "<=")
OPS = ("=", "!=", "<", "<=")
_FLIPPED = {">": "<", ">=": "<="}


def num(value) -> Fraction:
    """Coerce an int, decimal string or Fraction to an exact numeric constant."""
    if isinstance(value, bool):
        raise TypeError("booleans are not constants")
    if isinstance(value, float):
        raise TypeError("floats are not allowed; use Fraction or a decimal string")
    return Fraction(value)


def is_var(t) -> bool:
    return isinstance(t, Var)


def is_numeric(t) -> bool:
    return isinstance(t, Fraction)


def is_symbol(t) -> bool:
    return isinstance(t, str)


def term_str(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Fraction):
        if t.denominator == 1:
            return str(t.numerator)
        return _fraction_literal(t)
    escaped = t.replace("\\", "\\\\").replace('"', '\\"')
    return f'"{escaped}"'


def _fraction_literal(f: Fraction) -> str:
    # decimal if the denominator only has factors 2 and 5, else a/b
    d = f.denominator
    k = 0
    while d % 2 == 0 or d % 5 == 0:
        d //= 2 if d % 2 == 0 else 5
        k += 1
    if d != 1:
        return f"{f.numerator}/{f.denominator}"
    scaled = f * 10**k
    sign = "-" if scaled < 0 else ""
    digits = str(abs(scaled.numerator)).rjust(k + 1, "0")
    return f"{sign}{digits[:-k]}.{digits[-k:]}"


@dataclass(frozen=True)
class Atom:
    relation: str
    args: Tuple[Term, ...]

    def __post_init__(self):
        if not isinstance(self.args, tuple):
            object.__setattr__(self, "args", tuple(self.args))

    @property
    def arity(self) -> int:
        return len(self.args)

    def variables(self) -> Iterator[Var]:
        return (a for a in self.args if isinstance(a, Var))

    def is_ground(self) -> bool:
        return not any(isinstance(a, Var) for a in self.args)

    def substitute(self, sub: Mapping[Var, Term]) -> "Atom":
        return Atom(self.relation, tuple(sub.get(a, a) if isinstance(a, Var) else a for a in self.args))

    def __str__(self) -> str:
        return f"{self.relation}({','.join(term_str(a) for a in self.args)})"


def fact(relation: str, *args) -> Atom:
    """Build a ground atom; ints become numeric constants, strings symbols."""
    return Atom(relation, tuple(num(a) if isinstance(a, (int, Fraction)) else a for a in args))


@dataclass(frozen=True)
class Comparison:
    left: Term
    op: str
    right: Term

    def __post_init__(self):
        if self.op in _FLIPPED:
            left, right = self.right, self.left
            object.__setattr__(self, "op", _FLIPPED[self.op])
            object.__setattr__(self, "left", left)
            object.__setattr__(self, "right", right)
        if self.op not in OPS:
            raise ValidationError(f"unknown comparison operator {self.op!r}")
        if self.op in ORDER_OPS:
            for t in (self.left, self.right):
                if isinstance(t, str):
                    raise ValidationError(f"order comparison on symbol constant {term_str(t)}")

    def variables(self) -> Iterator[Var]:
        return (t for t in (self.left, self.right) if isinstance(t, Var))

    def substitute(self, sub: Mapping[Var, Term]) -> "Comparison":
        left = sub.get(self.left, self.left) if isinstance(self.left, Var) else self.left
        right = sub.get(self.right, self.right) if isinstance(self.right, Var) else self.right
        return _raw_comparison(left, self.op, right)

    def __str__(self) -> str:
        return f"{term_str(self.left)}{self.op}{term_str(self.right)}"


def _raw_comparison(left, op, right) -> Comparison:
    # substitution may put a symbol under an order operator; the comparison
    # is still well defined, so skip the parse-time check
    c = object.__new__(Comparison)
    object.__setattr__(c, "left", left)
    object.__setattr__(c, "op", op)
    object.__setattr__(c, "right", right)
    return c


def compare(a: Constant, op: str, b: Constant) -> bool:
    if op == "=":
        return a == b
    if op == "!=":
        return a != b
    ka, kb = constant_key(a), constant_key(b)
    return ka < kb if op == "<" else ka <= kb


def _resolve(t: Term, env: Mapping[Var, Constant]):
    return env.get(t) if isinstance(t, Var) else t


class Fragment(enum.Enum):
    LINEAR_RELATIONAL = "LinearRelational"
    LINEAR_CONJUNCTIVE = "LinearConjunctive"
    RELATIONAL_CONJUNCTIVE = "RelationalConjunctive"
    CONJUNCTIVE_WITH_COMPARISONS = "ConjunctiveWithComparisons"


@dataclass(frozen=True)
class ConjunctiveQuery:
    """``name(head) :- body, comparisons``.

    Head entries are normally variables; derived queries (instantiations,
    projections) may carry constants there as well.
    """

    name: str
    head: Tuple[Term, ...]
    body: Tuple[Atom, ...]
    comparisons: Tuple[Comparison, ...] = ()

    def __post_init__(self):
        for attr in ("head", "body", "comparisons"):
            value = getattr(self, attr)
            if not isinstance(value, tuple):
                object.__setattr__(self, attr, tuple(value))
        if not self.body:
            raise ValidationError(f"query {self.name} has an empty body")
        unsafe = self.unsafe_variables()
        if unsafe:
            names = ", ".join(sorted(v.name for v in unsafe))
            raise ValidationError(f"query {self.name} is unsafe: {names} not bound by a body atom")

    @property
    def arity(self) -> int:
        return len(self.head)

    def variables(self) -> Tuple[Var, ...]:
        """All variables in order of first appearance (head, body, comparisons)."""
        seen: Dict[Var, None] = {}
        for t in self.head:
            if isinstance(t, Var):
                seen.setdefault(t)
        for a in self.body:
            for v in a.variables():
                seen.setdefault(v)
        for c in self.comparisons:
            for v in c.variables():
                seen.setdefault(v)
        return tuple(seen)

    def constants(self) -> frozenset:
        out = set()
        for t in self.head:
            if not isinstance(t, Var):
                out.add(t)
        for a in self.body:
            out.update(x for x in a.args if not isinstance(x, Var))
        for c in self.comparisons:
            out.update(x for x in (c.left, c.right) if not isinstance(x, Var))
        return frozenset(out)

    def relations(self) -> frozenset:
        return frozenset(a.relation for a in self.body)

    def unsafe_variables(self) -> set:
        # a variable is safe if it is in a body atom or linked to one (or to
        # a constant) through a chain of equalities
        bound = {v for a in self.body for v in a.variables()}
        changed = True
        while changed:
            changed = False
            for c in self.comparisons:
                if c.op != "=":
                    continue
                l, r = c.left, c.right
                l_ok = not isinstance(l, Var) or l in bound
                r_ok = not isinstance(r, Var) or r in bound
                if l_ok and isinstance(r, Var) and r not in bound:
                    bound.add(r)
                    changed = True
                if r_ok and isinstance(l, Var) and l not in bound:
                    bound.add(l)
                    changed = True
        return set(self.variables()) - bound

    def substitute(self, sub: Mapping[Var, Term], name: Optional[str] = None) -> "ConjunctiveQuery":
        return ConjunctiveQuery(
            name or self.name,
            tuple(sub.get(t, t) if isinstance(t, Var) else t for t in self.head),
            tuple(a.substitute(sub) for a in self.body),
            tuple(c.substitute(sub) for c in self.comparisons),
        )

    def rename_apart(self, suffix: str) -> "ConjunctiveQuery":
        return self.substitute({v: Var(v.name + suffix) for v in self.variables()})

    def __str__(self) -> str:
        head = ",".join(term_str(t) for t in self.head)
        parts = [str(a) for a in self.body] + [str(c) for c in self.comparisons]
        return f"{self.name}({head}) :- {', '.join(parts)}"


@dataclass(frozen=True)
class UnionQuery:
    disjuncts: Tuple[ConjunctiveQuery, ...] = ()

    def __post_init__(self):
        if not isinstance(self.disjuncts, tuple):
            object.__setattr__(self, "disjuncts", tuple(self.disjuncts))
        arities = {q.arity for q in self.disjuncts}
        if len(arities) > 1:
            raise ValidationError(f"union disjuncts have differing head arities {sorted(arities)}")

    @property
    def arity(self) -> Optional[int]:
        return self.disjuncts[0].arity if self.disjuncts else None

    def __iter__(self):
        return iter(self.disjuncts)

    def __len__(self):
        return len(self.disjuncts)


@dataclass(frozen=True)
class Database:
    facts: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if not isinstance(self.facts, frozenset):
            object.__setattr__(self, "facts", frozenset(self.facts))
        for f in self.facts:
            if not f.is_ground():
                raise ValidationError(f"database fact {f} is not ground")

    @cached_property
    def index(self) -> Dict[str, Tuple[Atom, ...]]:
        idx: Dict[str, list] = {}
        for f in sorted(self.facts, key=fact_key):
            idx.setdefault(f.relation, []).append(f)
        return {k: tuple(v) for k, v in idx.items()}

    def relation_arities(self) -> Dict[str, int]:
        out: Dict[str, int] = {}
        for f in self.facts:
            if out.setdefault(f.relation, f.arity) != f.arity:
                raise ValidationError(f"relation {f.relation} used with arities {out[f.relation]} and {f.arity}")
        return out

    def constants(self) -> frozenset:
        return frozenset(a for f in self.facts for a in f.args)

    def __contains__(self, f) -> bool:
        return f in self.facts

    def __iter__(self):
        return iter(sorted(self.facts, key=fact_key))

    def __len__(self):
        return len(self.facts)

    def __le__(self, other: "Database") -> bool:
        return self.facts <= other.facts

    def __or__(self, other) -> "Database":
        other_facts = other.facts if isinstance(other, Database) else frozenset(other)
        return Database(self.facts | other_facts)

    def __sub__(self, other: "Database") -> frozenset:
        return self.facts - other.facts


def constant_key(c: Constant):
    # numbers before symbols; deterministic across runs
    return (0, c, "") if isinstance(c, Fraction) else (1, Fraction(0), c)


def fact_key(f: Atom):
    return (f.relation, tuple(constant_key(a) for a in f.args))


def check_schema(q: ConjunctiveQuery, arities: Mapping[str, int], strict: bool = False) -> None:
    """Raise if ``q`` uses a relation with the wrong arity (or an unknown one when strict)."""
    for a in q.body:
        if a.relation not in arities:
            if strict:
                raise ValidationError(f"query {q.name}: unknown relation {a.relation}")
            continue
        if arities[a.relation] != a.arity:
            raise ValidationError(
                f"query {q.name}: relation {a.relation} has arity {arities[a.relation]}, used with {a.arity}"
            )


def assignments(
    atoms: Iterable[Atom],
    comparisons: Iterable[Comparison],
    d: Database,
    seed: Optional[Mapping[Var, Constant]] = None,
) -> Iterator[Dict[Var, Constant]]:
    """Yield every variable assignment extending ``seed`` that maps each atom
    to a fact of ``d`` and satisfies every comparison."""
    atoms = list(atoms)
    comparisons = list(comparisons)
    env: Dict[Var, Constant] = dict(seed or {})
    index = d.index

    def matches(atom: Atom, f: Atom, env: Dict[Var, Constant]) -> Optional[list]:
        bound = []
        for t, c in zip(atom.args, f.args):
            if isinstance(t, Var):
                cur = env.get(t)
                if cur is None:
                    env[t] = c
                    bound.append(t)
                elif cur != c or type(cur) is not type(c):
                    for v in bound:
                        del env[v]
                    return None
            elif t != c or type(t) is not type(c):
                for v in bound:
                    del env[v]
                return None
        return bound

    def finish() -> Iterator[Dict[Var, Constant]]:
        local = dict(env)
        # variables reachable only through equalities
        changed = True
        while changed:
            changed = False
            for c in comparisons:
                if c.op != "=":
                    continue
                lv, rv = _resolve(c.left, local), _resolve(c.right, local)
                if lv is None and rv is not None:
                    local[c.left] = rv
                    changed = True
                elif rv is None and lv is not None:
                    local[c.right] = lv
                    changed = True
        for c in comparisons:
            lv, rv = _resolve(c.left, local), _resolve(c.right, local)
            if lv is None or rv is None or not compare(lv, c.op, rv):
                return
        yield local

    def search(i: int) -> Iterator[Dict[Var, Constant]]:
        if i == len(atoms):
            yield from finish()
            return
        atom = atoms[i]
        for f in index.get(atom.relation, ()):
            if f.arity != atom.arity:
                continue
            bound = matches(atom, f, env)
            if bound is None:
                continue
            yield from search(i + 1)
            for v in bound:
                del env[v]

    yield from search(0)


def _head_tuple(head: Tuple[Term, ...], env: Mapping[Var, Constant]) -> tuple:
    return tuple(env[t] if isinstance(t, Var) else t for t in head)


def evaluate_query(q: ConjunctiveQuery, d: Database) -> frozenset:
    """Set-semantics answer of ``q`` over ``d``."""
    check_schema(q, d.relation_arities())
    return frozenset(_head_tuple(q.head, env) for env in assignments(q.body, q.comparisons, d))


def has_answer(q: ConjunctiveQuery, d: Database, answer: tuple) -> bool:
    """True iff ``answer`` is in ``q(d)``; binds head variables up front."""
    if len(answer) != q.arity:
        return False
    seed: Dict[Var, Constant] = {}
    for t, c in zip(q.head, answer):
        if isinstance(t, Var):
            if t in seed and (seed[t] != c or type(seed[t]) is not type(c)):
                return False
            seed[t] = c
        elif t != c or type(t) is not type(c):
            return False
    # seeded head variables linked by '=' are checked, not overwritten
    for _ in assignments(q.body, q.comparisons, d, seed):
        return True
    return False


def semantic_completeness(q: ConjunctiveQuery, d_rw: Database, d_is: Database) -> bool:
    """``Compl(Q)`` over a pair: the stored answer equals the real-world answer."""
    missing = d_is.facts - d_rw.facts
    if missing:
        offending = min(missing, key=fact_key)
        raise ValidationError(f"information-system fact {offending} is not in the real-world database")
    return evaluate_query(q, d_rw) == evaluate_query(q, d_is)


def classify_fragment(q: ConjunctiveQuery) -> Fragment:
    rels = [a.relation for a in q.body]
    linear = len(rels) == len(set(rels))
    relational = not q.comparisons
    if linear and relational:
        return Fragment.LINEAR_RELATIONAL
    if linear:
        return Fragment.LINEAR_CONJUNCTIVE
    if relational:
        return Fragment.RELATIONAL_CONJUNCTIVE
    return Fragment.CONJUNCTIVE_WITH_COMPARISONS
