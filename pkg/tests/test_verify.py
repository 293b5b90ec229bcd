import pytest

from conftest import data_text
from qcompl.io import parse_effect, parse_facts, parse_model, parse_query
from qcompl.model import Database, UnionQuery, ValidationError
from qcompl.oracle import SearchBounds, enumerate_paths, refute_sequence
from qcompl.qats import Path, check_development
from qcompl.verify import (
    AFTER,
    SUFFICIENCY_NOTE,
    TRACE,
    CompletenessChecker,
    Status,
    dimension_analysis,
    instantiate,
    is_repaired,
    is_risky,
    path_complete,
    path_complete_with_db,
    path_from_actions,
    reduce_containment_to_qats,
    sequence_complete,
    state_complete,
)
from qcompl.model import Var

Q_BZ = parse_query('query Q(n) :- pupil(n, c, s), livesIn(n, "Bolzano") .')
Q_HOFER = parse_query('query QHofer(n) :- pupil(n, c, "Hofer") .')
ENROL_H = parse_effect('rweffect r: pupil(n, 1, "Hofer") <~ request(n, "Hofer") .')
COPY_H = parse_effect('copyeffect c: pupil(n, 1, "Hofer") ~> copy .')
COPY_D = parse_effect('copyeffect c2: pupil(n, 1, "DaVinci") ~> copy .')

BIG = SearchBounds(max_active_constants=6, max_initial_facts=6, max_total_new_facts=6)

# A Boolean query that is already answered whenever the effect can fire:
# the effect is risky and unrepaired, yet no development loses an answer.
OVER_APPROXIMATED = """
rel R/1
state s0 init
state s1
action a1
edge s0 -a1-> s1
on a1: rweffect grow: R(y) <~ R(z) .
query Q() :- R(x) .
"""

# The copy of R at a2 is conditioned on S, which only appears at a3.
# Every risky effect is repaired by some later copy, yet R(v) born at a1
# with S(v) born at a3 leaves the stored database without the answer v.
REPAIRED_TOO_EARLY = """
rel R/1
rel S/1
state s0 init
state s1
state s2
state s3
action a1
action a2
action a3
edge s0 -a1-> s1
edge s1 -a2-> s2
edge s2 -a3-> s3
on a1: rweffect r1: R(x) <~ .
on a2: copyeffect c1: R(x) if S(x) ~> copy .
on a3: rweffect r2: S(x) <~ .
on a3: copyeffect c2: S(x) ~> copy .
query Q(x) :- R(x), S(x) .
"""


@pytest.mark.parametrize(
    "effect",
    [
        'rweffect r1: pupil(n, c, s) <~ c = 4 .',
        'rweffect r2: pupil(n, c, s) <~ livesIn(n, "Merano") .',
    ],
)
def test_example_effects_are_risky(effect):
    assert is_risky(parse_effect(effect), Q_BZ)


def test_effect_on_unused_relation_is_not_risky():
    assert not is_risky(parse_effect("rweffect r: request(n, s) <~ ."), Q_BZ)


def test_contradicting_constant_is_not_risky():
    q = parse_query("query QClass2(n) :- pupil(n, 2, s) .")
    assert not is_risky(parse_effect("rweffect r: pupil(n, c, s) <~ c > 3 ."), q)


def test_riskiness_ignores_variable_names_shared_with_the_query():
    q = parse_query("query Q(n) :- pupil(n, c, s), c < 2 .")
    assert not is_risky(parse_effect("rweffect r: pupil(c, n, s) <~ n > 3 ."), q)
    assert is_risky(parse_effect("rweffect r: pupil(c, n, s) <~ n < 1 ."), q)


def test_repair_by_matching_copy():
    assert is_repaired(ENROL_H, [COPY_H], Q_HOFER)


def test_no_copies_no_repair():
    assert not is_repaired(ENROL_H, [], Q_HOFER)


def test_copy_of_other_school_does_not_repair():
    assert not is_repaired(ENROL_H, [COPY_D], Q_HOFER)


def test_repair_may_need_several_copies():
    r = parse_effect("rweffect r: pupil(n, c, s) <~ .")
    low = parse_effect("copyeffect lo: pupil(n, c, s) if c <= 3 ~> copy .")
    high = parse_effect("copyeffect hi: pupil(n, c, s) if c > 3 ~> copy .")
    q = parse_query("query Q(n) :- pupil(n, c, s) .")
    assert not is_repaired(r, [low], q)
    assert not is_repaired(r, [high], q)
    assert is_repaired(r, [low, high], q)


def test_sequence_examples(schools):
    q = schools.query("QHofer")
    assert sequence_complete(("pH", "rH"), q, schools.qats).complete
    v = sequence_complete(("pH",), q, schools.qats)
    assert v.status is Status.NOT_GUARANTEED
    assert (v.witness.position, v.witness.effect) == (1, "enrolH")
    assert v.witness.sequence == ("pH",)
    assert sequence_complete((), q, schools.qats).complete


def test_sequence_rejects_unknown_action(schools):
    with pytest.raises(ValidationError):
        sequence_complete(("zz",), schools.query("QHofer"), schools.qats)


def test_witness_is_replayable(schools):
    q = schools.query("QHofer")
    v = sequence_complete(("pH", "pD", "rD"), q, schools.qats)
    again = sequence_complete(v.witness.sequence, q, schools.qats)
    assert again.witness == v.witness
    dev = refute_sequence(v.witness.sequence, q, schools.qats)
    assert dev is not None and check_development(dev, schools.qats) == []


def test_state_examples(schools):
    qh, qd, qs = (schools.query(n) for n in ("QHofer", "QDaVinci", "QPerSchool"))
    for q in (qh, qd, qs):
        assert state_complete("s0", q, schools.qats).complete
        assert state_complete("s8", q, schools.qats).complete
    assert state_complete("s2", qh, schools.qats).complete
    assert state_complete("s5", qh, schools.qats).complete
    v = state_complete("s5", qd, schools.qats)
    assert v.status is Status.NOT_GUARANTEED
    assert v.witness.effect in ("enrolD", "testD")


@pytest.mark.parametrize("state", [f"s{i}" for i in range(9)])
def test_state_verdicts_follow_the_lanes(schools, state):
    i = int(state[1:])
    hofer_pending, davinci_pending = i % 3 == 1, i // 3 == 1
    assert state_complete(state, schools.query("QHofer"), schools.qats).complete == (not hofer_pending)
    assert state_complete(state, schools.query("QDaVinci"), schools.qats).complete == (not davinci_pending)


def test_state_rejects_unknown_state(schools):
    with pytest.raises(ValidationError):
        state_complete("s42", schools.query("QHofer"), schools.qats)


def test_parallel_state_check_reports_the_same_witness(schools):
    q = schools.query("QPerSchool")
    for s in schools.qats.states:
        one = state_complete(s, q, schools.qats)
        many = state_complete(s, q, schools.qats, jobs=4)
        assert (one.status, one.witness) == (many.status, many.witness)


def test_checker_counts_its_work(schools):
    c = CompletenessChecker(schools.qats, schools.query("QHofer"))
    v = c.state("s8")
    assert v.stats["sequences_examined"] >= 1
    assert v.stats["containment_calls"] >= 1


def test_secretary_paths(secretary):
    q = secretary.query("QValid")
    record = path_from_actions(["record"], secretary.qats)
    sign = path_from_actions(["sign"], secretary.qats)
    assert path_complete(record, q, secretary.qats).complete
    v = path_complete(sign, q, secretary.qats)
    assert not v.complete and v.witness.effect == "validate"
    assert path_complete(Path((), start="s0"), q, secretary.qats).complete


def test_invalid_path_is_rejected(secretary):
    with pytest.raises(ValidationError):
        path_from_actions(["sign", "record"], secretary.qats)
    with pytest.raises(ValidationError):
        path_complete(Path((("s1", "sign", "s0"),)), secretary.query("QValid"), secretary.qats)


def test_runtime_check_is_only_sufficient(runtime_limit):
    q = runtime_limit.query("Q")
    pi = path_from_actions(["a1", "a2"], runtime_limit.qats)
    v = path_complete_with_db(pi, q, runtime_limit.qats, Database())
    assert v.status is Status.NOT_GUARANTEED
    assert v.note == SUFFICIENCY_NOTE
    assert v.stats["current_answers"] == 0


def test_runtime_check_agrees_when_the_condition_holds(secretary):
    q = secretary.query("QValid")
    pi = path_from_actions(["record"], secretary.qats)
    db = parse_facts('signed("Ann", "Hofer")')
    v = path_complete_with_db(pi, q, secretary.qats, db)
    assert v.complete and v.stats["current_answers"] == 1
    assert path_complete_with_db(Path((), start="s0"), q, secretary.qats, db).complete


def test_dimension_report(dimension_model, dimension_db):
    q = dimension_model.query("QPerSchool")
    rep = dimension_analysis(q, ["s"], "s5", dimension_model.qats, dimension_db)
    got = {row.values[0]: row.verdict.status for row in rep.rows}
    assert got == {
        "DaVinci": Status.COMPLETE,
        "Gherdena": Status.NOT_GUARANTEED,
        "Hofer": Status.COMPLETE,
        "MaxValier": Status.NOT_GUARANTEED,
    }
    assert rep.open_values and rep.open_sample is not None
    assert rep.open_sample[0] not in got


def test_dimension_on_a_complete_state(schools):
    q = schools.query("QPerSchool")
    db = parse_facts('pupil("John", 1, "Hofer") pupil("Mary", 1, "DaVinci")')
    rep = dimension_analysis(q, ["s", "n"], "s8", schools.qats, db)
    assert len(rep.rows) == 2
    assert all(r.verdict.complete for r in rep.rows)
    assert not rep.open_values


def test_dimension_with_nothing_copied(dimension_model):
    q = dimension_model.query("QPerSchool")
    rep = dimension_analysis(q, ["s"], "s1", dimension_model.qats, Database())
    assert rep.rows == () and rep.open_values


def test_dimension_on_a_path(dimension_model, dimension_db):
    q = dimension_model.query("QPerSchool")
    pi = path_from_actions(["enrol", "subH"], dimension_model.qats)
    rep = dimension_analysis(q, ["s"], pi, dimension_model.qats, dimension_db)
    got = {row.values[0]: row.verdict.complete for row in rep.rows}
    assert got["Hofer"] and not got["DaVinci"]


def test_dimension_needs_head_variables(dimension_model, dimension_db):
    with pytest.raises(ValidationError):
        dimension_analysis(dimension_model.query("QPerSchool"), ["c"], "s5", dimension_model.qats, dimension_db)


def test_contradictory_instantiation_is_dropped():
    q = parse_query("query Q(x) :- R(x), x > 3 .")
    assert instantiate(q, [Var("x")], [2]) is None
    assert instantiate(q, [Var("x")], [5]) is not None


def _reduced(q0, *u, window=TRACE):
    qats, goal, alpha = reduce_containment_to_qats(q0, UnionQuery(tuple(u)))
    return sequence_complete(alpha, goal, qats, window)


def test_reduction_examples():
    q0 = parse_query("query Q(x) :- S(x) .")
    assert _reduced(q0, q0).complete
    assert not _reduced(q0, parse_query("query Q1(x) :- S(x), x > 3 .")).complete
    empty = parse_query("query Q(x) :- S(x), x > 3, x < 2 .")
    assert _reduced(empty).complete


def test_reduction_rejects_clashing_relation():
    q0 = parse_query("query Q(x) :- R(x) .")
    with pytest.raises(ValidationError):
        reduce_containment_to_qats(q0, UnionQuery((q0,)))
    qats, _, _ = reduce_containment_to_qats(q0, UnionQuery((q0,)), relation="Fresh")
    assert "Fresh" in qats.schema


def test_after_window_ignores_same_step_copies():
    m = parse_model(
        """
        rel R/1
        state s0 init
        state s1
        action a
        edge s0 -a-> s1
        on a: rweffect r: R(x) <~ .
        on a: copyeffect c: R(x) ~> copy .
        query Q(x) :- R(x) .
        """
    )
    q = m.query("Q")
    assert sequence_complete(("a",), q, m.qats, TRACE).complete
    assert not sequence_complete(("a",), q, m.qats, AFTER).complete
    assert refute_sequence(("a",), q, m.qats) is None


def test_unknown_window_is_rejected(schools):
    with pytest.raises(ValueError):
        sequence_complete((), schools.query("QHofer"), schools.qats, "sometimes")


def test_known_over_approximation():
    # Documented defect: the riskiness test does not look at answers that
    # the query already had before the step, so this is reported as not
    # guaranteed although every development stays complete.
    m = parse_model(OVER_APPROXIMATED)
    v = sequence_complete(("a1",), m.query("Q"), m.qats)
    assert v.status is Status.NOT_GUARANTEED
    assert refute_sequence(("a1",), m.query("Q"), m.qats, BIG) is None


def test_known_unsound_repair():
    # Documented defect: the repair check treats each risky effect on its
    # own, so a copy whose guard is satisfied only later counts as repair.
    m = parse_model(REPAIRED_TOO_EARLY)
    q, alpha = m.query("Q"), ("a1", "a2", "a3")
    assert sequence_complete(alpha, q, m.qats, TRACE).complete
    dev = refute_sequence(alpha, q, m.qats)
    assert dev is not None and check_development(dev, m.qats) == []
    v = sequence_complete(alpha, q, m.qats, AFTER)
    assert not v.complete and v.witness.effect == "r2"


def test_design_time_covers_runtime(schools):
    q = schools.query("QHofer")
    for s in schools.qats.states:
        if not state_complete(s, q, schools.qats).complete:
            continue
        for pi in enumerate_paths(s, schools.qats, 2 * len(schools.qats.actions)):
            assert path_complete(pi, q, schools.qats).complete


def test_data_files_parse():
    for name in ("schools.qats", "secretary.qats", "runtime_limit.qats", "dimension.qats"):
        assert parse_model(data_text(name)).queries
