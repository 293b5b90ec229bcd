import json

import jsonschema
import pytest

from conftest import DATA
from qcompl import __version__
from qcompl.containment import find_counterexample
from qcompl.io import ContainmentResult, Report, digest, parse_query
from qcompl.model import UnionQuery
from qcompl.oracle import refute_sequence
from qcompl.verify import dimension_analysis, path_complete_with_db, path_from_actions, sequence_complete

SCHEMA = json.loads((DATA / "report.schema.json").read_text(encoding="utf-8"))


def _reports(schools, runtime_limit, dimension_model, dimension_db):
    qh = schools.query("QHofer")
    ok = sequence_complete(("pH", "rH"), qh, schools.qats)
    bad = sequence_complete(("pH",), qh, schools.qats)
    pi = path_from_actions(["a1", "a2"], runtime_limit.qats)
    noted = path_complete_with_db(pi, runtime_limit.query("Q"), runtime_limit.qats, dimension_db)
    dim = dimension_analysis(dimension_model.query("QPerSchool"), ["s"], "s5", dimension_model.qats, dimension_db)
    q0 = parse_query("query Q(x) :- S(x), x > 1/2 .")
    u = UnionQuery((parse_query('query P(x) :- S(x), x > 3 .'),))
    cex = find_counterexample(q0, u)
    return [
        Report(ok, __version__, {"m.qats": digest("x")}, 1.5),
        Report(bad, __version__, {}, 0.0, refute_sequence(("pH",), qh, schools.qats)),
        Report(noted, __version__),
        Report(dim, __version__),
        Report(ContainmentResult("Q", ("P",), cex is None, cex, {"containment_calls": 1}), __version__),
        Report(ContainmentResult("Q", ("Q",), True), __version__),
    ]


@pytest.fixture(scope="module")
def reports(schools, runtime_limit, dimension_model, dimension_db):
    return _reports(schools, runtime_limit, dimension_model, dimension_db)


def test_round_trip(reports):
    for r in reports:
        assert Report.from_json(r.to_json()) == r


def test_reports_match_the_schema(reports):
    for r in reports:
        jsonschema.validate(r.to_dict(), SCHEMA)


def test_schema_rejects_bad_status(reports):
    d = reports[0].to_dict()
    d["status"] = "incomplete"
    with pytest.raises(jsonschema.ValidationError):
        jsonschema.validate(d, SCHEMA)


def test_field_values(reports):
    ok, bad, noted, dim, cont, _ = (r.to_dict() for r in reports)
    assert ok["status"] == "complete" and "witness" not in ok
    assert bad["status"] == "not_guaranteed"
    assert bad["witness"]["position"] == 1 and bad["witness"]["effect"] == "enrolH"
    assert bad["explanation"]["actions"] == ["pH"]
    assert "sufficient" in noted["note"]
    assert [r["values"] for r in dim["rows"]] == [['"DaVinci"'], ['"Gherdena"'], ['"Hofer"'], ['"MaxValier"']]
    assert cont["status"] == "fails" and cont["counterexample_db"]
    assert [r.kind for r in reports] == ["verdict"] * 3 + ["dimension", "containment", "containment"]


def test_json_is_canonical(reports):
    text = reports[3].to_json()
    assert text == json.dumps(json.loads(text), indent=2, sort_keys=True)


def test_unknown_kind():
    with pytest.raises(ValueError):
        Report.from_dict({"kind": "other", "version": "0"})


def test_digest():
    assert digest("abc").startswith("sha256:ba7816bf")
