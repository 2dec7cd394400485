import json
from fractions import Fraction

import pytest

from hierax.base_theories import Verdict
from hierax.core import App, Clause, Const, Literal, Num, Quantified, Var
from hierax.locality import TheorySpec, flatten_purify
from hierax.report import ReportManager, StepRecord, purification_step, render_smtlib, smtlib_term


def f(t):
    return App("f", (t,))


@pytest.fixture
def report():
    manager = ReportManager("sat", "TOrd", trace_level=1, problem="sgc_tord.hx")
    manager.add_step(
        StepRecord("partition", "1 constants eliminated", sets={"c_f": ["#2"]}, details={"G1": ["(< a #2)"]})
    )
    manager.verdict = Verdict.UNSAT
    manager.passed = True
    manager.checks["chain oracle"] = "UNSAT"
    manager.checks["goal unsat under constraint"] = True
    return manager


def test_report_matches_schema(report):
    document = json.loads(report.to_json())
    assert document["task"] == "sat"
    assert document["base"] == "TOrd"
    assert document["verdict"] == "UNSAT"
    assert document["steps"][0]["sets"] == {"c_f": ["#2"]}


def test_empty_report_matches_schema():
    document = json.loads(ReportManager("symelim", "DLO").to_json())
    assert document["result"] is None
    assert document["verdict"] is None


def test_details_from_trace_level_two(report):
    report.trace_level = 2
    assert report.to_dict()["steps"][0]["sets"] == {"c_f": ["#2"], "G1": ["(< a #2)"]}
    assert "    (< a #2)" in report.render_text()


def test_invalid_check_value(report):
    report.checks["instances"] = 12
    with pytest.raises(ValueError, match="Invalid report"):
        report.to_json()


def test_unknown_task():
    with pytest.raises(ValueError, match="Invalid report"):
        ReportManager("prove", "DLO").to_json()


def test_render_text(report):
    report.set_result("constraint", Literal("<=", f(Var("y1")), Var("y1")))
    report.add_notes(["Locality of every level is assumed, not proved."] * 2)
    text = report.render_text()
    assert text.startswith("task: sat\nbase: TOrd\n")
    assert "== partition: 1 constants eliminated" in text
    assert "  c_f:\n    #2" in text
    assert "G1" not in text
    assert "verdict: UNSAT" in text
    assert "constraint: (<= (f y1) y1)" in text
    assert "chain oracle: UNSAT" in text
    assert "goal unsat under constraint: PASS" in text
    assert text.count("note: ") == 1


def test_trace_level_zero_hides_steps(report):
    report.trace_level = 0
    assert "partition" not in report.render_text()


def test_write_json(report, tmp_path):
    path = tmp_path / "report.json"
    report.write_json(str(path))
    assert json.loads(path.read_text(encoding="utf-8"))["problem"] == "sgc_tord.hx"


def test_purification_step():
    spec = TheorySpec.build("DLO", [({"f": 1}, []), ({"g": 1}, [])])
    result = flatten_purify([Clause((Literal("<", App("g", (f(Const("a")),)), Const("b")),))], 2, spec.signature)
    record = purification_step(result)
    assert record.name == "reduce level 2"
    assert record.level == 2
    assert record.sets["Def"] == ["(= #1 (f a))", "(= #2 (g #1))"]
    assert record.details["links"] == ["(= #1 (f a))"]


class TestSmtlib:
    def test_order_script(self, sgc_interp):
        _, spec = sgc_interp
        script = render_smtlib(Literal("<=", f(Const("d")), Const("c")), spec, comment="interpolant")
        assert script.splitlines() == [
            "; interpolant",
            "(set-logic ALL)",
            "(declare-fun f (Real) Real)",
            "(declare-fun d () Real)",
            "(declare-fun c () Real)",
            "(assert (<= (f d) c))",
            "(check-sat)",
        ]

    def test_equality_uses_uninterpreted_sort(self):
        spec = TheorySpec.build("EQ", [({"f": 1}, [])])
        y = Var("y1")
        constraint = Quantified("forall", (y,), Literal("=", f(y), y, False))
        script = render_smtlib(constraint, spec)
        assert "(declare-sort U 0)" in script
        assert "(declare-fun f (U) U)" in script
        assert "(assert (forall ((y1 U)) (not (= (f y1) y1))))" in script

    @pytest.mark.parametrize(
        "term, expected",
        [
            (Const("#1"), "|#1|"),
            (Num(Fraction(-1, 2)), "(- (/ 1.0 2.0))"),
            (App("+", (Const("a"), Num(3))), "(+ a 3.0)"),
            (App("c", ()), "c"),
        ],
        ids=["fresh constant", "negative fraction", "sum", "arity zero"],
    )
    def test_terms(self, term, expected):
        assert smtlib_term(term) == expected
