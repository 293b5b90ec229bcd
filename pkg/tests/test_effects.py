from fractions import Fraction

import pytest

from qcompl.effects import (
    apply_copy,
    associated_query,
    atom_projection,
    conforms,
    is_useless,
    r_projection,
)
from qcompl.io import parse_effect, parse_fact, parse_facts, parse_query
from qcompl.model import Database, UnionQuery, Var, evaluate_query

D_RW = parse_facts(
    """
    pupil("John", 2, "HoferSchool")
    pupil("Mary", 4, "HoferSchool")
    livesIn("John", "Bolzano")
    livesIn("Bob", "Merano")
    livesIn("Alice", "Bolzano")
    """
)
MERANO = parse_effect('rweffect r: pupil(n, c, s) <~ c > 3, livesIn(n, "Merano") .')


def test_bob_conforms():
    assert conforms(D_RW, D_RW | {parse_fact('pupil("Bob", 4, "HoferSchool")')}, [MERANO])


def test_alice_does_not_conform():
    assert not conforms(D_RW, D_RW | {parse_fact('pupil("Alice", 1, "HoferSchool")')}, [MERANO])


def test_no_new_facts_always_conform():
    assert conforms(D_RW, D_RW, [])
    assert conforms(D_RW, D_RW, [MERANO])


def test_guard_is_read_in_the_old_database():
    # the residence fact arrives in the same step as the enrolment
    d2 = D_RW | {parse_fact('pupil("Zoe", 5, "HoferSchool")'), parse_fact('livesIn("Zoe", "Merano")')}
    r_live = parse_effect("rweffect l: livesIn(n, t) <~ .")
    assert not conforms(D_RW, d2, [MERANO])
    assert not conforms(D_RW, d2, [MERANO, r_live])
    assert conforms(D_RW | {parse_fact('livesIn("Zoe", "Merano")')}, d2, [MERANO])


def test_copy_of_upper_classes():
    c = parse_effect("copyeffect c: pupil(n, c, s) if c > 3 ~> copy .")
    assert apply_copy([c], D_RW) == Database(frozenset({parse_fact('pupil("Mary", 4, "HoferSchool")')}))


def test_empty_copy_set():
    assert apply_copy([], D_RW) == Database()


def test_unguarded_copy_with_constants():
    c = parse_effect('copyeffect c: pupil(n, 1, "Hofer") ~> copy .')
    d = parse_facts('pupil("John", 1, "Hofer") pupil("Mary", 2, "Hofer")')
    assert apply_copy([c], d) == parse_facts('pupil("John", 1, "Hofer")')


def test_copy_matches_associated_query():
    c = parse_effect("copyeffect c: pupil(n, c, s) if livesIn(n, t), c <= 2 ~> copy .")
    rows = evaluate_query(associated_query(c, full_head=True), D_RW)
    assert {f.args for f in apply_copy([c], D_RW)} == rows


@pytest.mark.parametrize(
    "text, useless",
    [
        ("rweffect r: pupil(n, c, s) <~ c > 3, c < 2 .", True),
        ('rweffect r: pupil(n, 1, "Hofer") <~ request(n, "Hofer") .', False),
        ("rweffect r: pupil(n, c, s) <~ c = 4 .", False),
        # the only candidate new fact is already required by the guard
        ("rweffect r: R(x) <~ R(x) .", True),
        ("rweffect r: R(x) <~ R(y), x = y .", True),
        ("rweffect r: R(x) <~ R(y) .", False),
        ("rweffect r: R(x, y) <~ x < y, y < x .", True),
    ],
)
def test_uselessness(text, useless):
    assert is_useless(parse_effect(text)) is useless


def test_useless_effect_never_conforms():
    r = parse_effect("rweffect r: R(x) <~ R(x) .")
    d1 = parse_facts("R(1)")
    for extra in ("R(2)", "R(1)"):
        d2 = d1 | {parse_fact(extra)}
        assert d2 == d1 or not conforms(d1, d2, [r])


def test_associated_query_of_guarded_effect():
    r = parse_effect('rweffect r: pupil(n, 1, "Hofer") <~ request(n, "Hofer") .')
    p = associated_query(r)
    assert p.head == (Var("n"),)
    assert [a.relation for a in p.body] == ["pupil", "request"]


def test_associated_query_of_unguarded_effect():
    p = associated_query(parse_effect("rweffect r: pupil(n, c, s) <~ ."))
    assert len(p.body) == 1 and not p.comparisons


def test_associated_query_keeps_comparisons():
    p = associated_query(MERANO)
    assert p.head == (Var("n"), Var("c"), Var("s"))
    assert [a.relation for a in p.body] == ["pupil", "livesIn"]
    assert len(p.comparisons) == 1 and p.comparisons[0].right == Var("c")


Q_BZ = parse_query('query Q(n) :- pupil(n, c, s), livesIn(n, "Bolzano") .')


def test_atom_projection_first_atom():
    p = atom_projection(Q_BZ, 1)
    assert p.arity == 3
    assert p.body == Q_BZ.body
    assert [(c.left, c.right) for c in p.comparisons] == list(zip(p.head, (Var("n"), Var("c"), Var("s"))))


def test_atom_projection_second_atom():
    p = atom_projection(Q_BZ, 2)
    assert p.arity == 2
    assert [c.right for c in p.comparisons] == [Var("n"), "Bolzano"]


def test_atom_projection_of_single_atom():
    p = atom_projection(parse_query("query Q(x) :- R(x, y) ."), 1)
    assert evaluate_query(p, parse_facts("R(1, 2) R(3, 3)")) == {(Fraction(1), Fraction(2)), (Fraction(3), Fraction(3))}


def test_atom_projection_bounds():
    with pytest.raises(IndexError):
        atom_projection(Q_BZ, 3)


def test_r_projection_counts():
    assert len(r_projection(Q_BZ, "teaches")) == 0
    assert len(r_projection(Q_BZ, "pupil")) == 1
    assert len(r_projection(parse_query("query Q(x) :- R(x, y), R(y, z) ."), "R")) == 2
    assert isinstance(r_projection(Q_BZ, "pupil"), UnionQuery)
