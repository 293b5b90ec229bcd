import itertools
from fractions import Fraction

import pytest

from qcompl.containment import (
    ContainmentStats,
    canonical_database,
    contains,
    enumerate_preorders,
    find_counterexample,
    intersect,
    is_satisfiable,
    simplify,
)
from qcompl.io import parse_query
from qcompl.model import Atom, Database, UnionQuery, ValidationError, Var, evaluate_query, fact
from qcompl.oracle import refute_containment


def q(text):
    return parse_query(text)


def u(*texts):
    return UnionQuery(tuple(q(t) for t in texts))


R_ALL = "query Q(x) :- R(x) ."
R_GT3 = "query Q1(x) :- R(x), x > 3 ."
R_LT7 = "query Q2(x) :- R(x), x < 7 ."


def small_databases(values=(1, 2, 3, 4)):
    facts = [fact("R", v) for v in values]
    for k in range(len(facts) + 1):
        for combo in itertools.combinations(facts, k):
            yield Database(frozenset(combo))


def test_reflexive():
    assert contains(q(R_ALL), u(R_ALL))
    assert refute_containment(q(R_ALL), u(R_ALL)) is None


def test_dropping_a_comparison():
    assert contains(q(R_GT3), u(R_ALL))


def test_two_half_lines_cover_everything():
    assert contains(q(R_ALL), u(R_GT3, R_LT7))
    assert refute_containment(q(R_ALL), u(R_GT3, R_LT7)) is None


def test_half_line_alone_does_not():
    assert not contains(q(R_ALL), u(R_GT3))
    cex = find_counterexample(q(R_ALL), u(R_GT3))
    (only,) = cex.facts
    assert only.args[0] <= 3
    found = refute_containment(q(R_ALL), u(R_GT3))
    (only,) = found.facts
    assert only.relation == "R" and only.args[0] <= 3


def test_counterexample_is_a_real_witness():
    q0, union = q("query Q(x) :- R(x, y), y < x ."), u("query P(x) :- R(x, y), R(y, x) .")
    db = find_counterexample(q0, union)
    missed = evaluate_query(q0, db) - set().union(*(evaluate_query(d, db) for d in union))
    assert missed


def test_empty_union():
    assert not contains(q(R_ALL), UnionQuery(()))
    assert contains(q("query Q(x) :- R(x), x > 3, x < 2 ."), UnionQuery(()))


def test_arity_mismatch():
    with pytest.raises(ValidationError):
        contains(q(R_ALL), u("query P(x, y) :- S(x, y) ."))


def test_equalities_and_disequalities():
    assert contains(q("query Q(x) :- R(x, y), x = y ."), u("query P(x) :- R(x, x) ."))
    assert not contains(q("query Q(x) :- R(x, y) ."), u("query P(x) :- R(x, x) ."))
    # either the two values coincide or they differ
    assert contains(
        q("query Q(x) :- R(x, y) ."),
        u("query P1(x) :- R(x, x) .", "query P2(x) :- R(x, y), x != y ."),
    )


def test_dense_order_needs_a_value_in_between():
    # over the integers x < y < x + 1 has no solution; over the rationals it does
    q0 = q("query Q() :- R(x), R(y), x < y .")
    assert not contains(q0, u("query P() :- R(x), R(y), x < y, x = 1 ."))


def test_symbol_constants():
    assert contains(q('query Q(x) :- R(x, "a") .'), u("query P(x) :- R(x, y) ."))
    assert not contains(q("query Q(x) :- R(x, y) ."), u('query P(x) :- R(x, "a") .'))
    assert contains(
        q('query Q(x) :- R(x, y) .'),
        u('query P1(x) :- R(x, "a") .', 'query P2(x) :- R(x, y), y != "a" .'),
    )


def test_stats_are_counted():
    stats = ContainmentStats()
    contains(q(R_ALL), u(R_GT3, R_LT7), stats)
    assert stats.calls == 1 and stats.canonical_databases >= 3


def test_intersection_with_itself():
    q0 = q("query Q(x) :- R(x, y), y < 3 .")
    both = intersect(q0, q0)
    for db in small_pair_databases():
        assert evaluate_query(both, db) == evaluate_query(q0, db)


def small_pair_databases():
    pairs = [fact("R", a, b) for a in (1, 2, 3) for b in (1, 3)]
    for k in range(3):
        for combo in itertools.combinations(pairs, k):
            yield Database(frozenset(combo))


def test_intersection_is_the_band():
    both = intersect(q(R_GT3), q("query Q2(x) :- R(x), x < 5 ."))
    values = (Fraction(3), Fraction(7, 2), Fraction(4), Fraction(5))
    for db in small_databases(values):
        expected = {(f.args[0],) for f in db.facts if 3 < f.args[0] < 5}
        assert evaluate_query(both, db) == expected


def test_intersection_with_unsatisfiable_partner():
    both = intersect(q(R_ALL), q("query E(x) :- R(x), x > 3, x < 2 ."))
    assert not is_satisfiable(both)
    for db in small_databases():
        assert evaluate_query(both, db) == frozenset()


def test_one_variable_one_preorder():
    assert len(list(enumerate_preorders(q(R_ALL)))) == 1


def test_two_variables_three_preorders():
    q0 = q("query Q(x, y) :- S(x, y) .")
    assert len(list(enumerate_preorders(q0, with_order=True))) == 3
    # without order only the equality type matters
    assert len(list(enumerate_preorders(q0))) == 2


def test_preorders_respect_comparisons():
    q0 = q(R_GT3)
    orders = list(enumerate_preorders(q0))
    assert orders
    for p in orders:
        assert p.as_dict()[Var("x")] > 3


def test_frozen_query_answers_its_head():
    q0 = q("query Q(x, z) :- R(x, y), R(y, z), x <= z, y != 2 .")
    for p in enumerate_preorders(q0):
        db, head = canonical_database(q0, p)
        assert head in evaluate_query(q0, db)


def test_simplify_detects_equality_contradictions():
    assert simplify(q("query Q(x) :- R(x, y), x = 1, y = x, y != 1 .")) is None
    assert simplify(q("query Q(x) :- R(x), x < 1 .")) is not None
    assert not is_satisfiable(q("query Q(x) :- R(x), x < 1, 2 < x ."))
    assert is_satisfiable(q("query Q(x) :- R(x, y), x < y, y <= 3 ."))
    assert not is_satisfiable(q("query Q(x) :- R(x, y), x < y, y < x ."))


def test_preorder_values_are_exact_rationals():
    q0 = q("query Q(x) :- R(x, y), 1 < x, x < y, y < 2 .")
    (p,) = [p for p in enumerate_preorders(q0)]
    env = p.as_dict()
    assert Fraction(1) < env[Var("x")] < env[Var("y")] < Fraction(2)
    assert all(isinstance(v, Fraction) for v in env.values())


def test_unused_atom_is_irrelevant():
    assert contains(q("query Q(x) :- R(x), S(y) ."), u(R_ALL))
    assert not contains(q(R_ALL), u("query P(x) :- R(x), S(y) ."))
    assert Atom("R", (Var("x"),)) in q(R_ALL).body
