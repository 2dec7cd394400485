import json
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional

from jsonschema import Draft7Validator

from hierax.base_theories import BaseTheoryId
from hierax.core import (
    And,
    App,
    Clause,
    Const,
    Formula,
    Implies,
    Literal,
    Not,
    Num,
    Or,
    Quantified,
    Term,
    Truth,
    Var,
    constants_of,
    iter_all_subterms,
)
from hierax.locality import PurificationResult, TheorySpec
from hierax.problem_handler import render_clause


REPORT_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "required": ["task", "base", "verdict", "result", "checks", "steps", "notes"],
    "properties": {
        "task": {"type": "string", "enum": ["sat", "symelim", "interpolate"]},
        "problem": {"type": ["string", "null"]},
        "base": {"type": "string"},
        "qe_theory": {"type": ["string", "null"]},
        "verdict": {"type": ["string", "null"], "enum": ["SAT", "UNSAT", None]},
        "passed": {"type": ["boolean", "null"]},
        "result": {
            "type": ["object", "null"],
            "required": ["kind", "text"],
            "properties": {
                "kind": {"type": "string"},
                "text": {"type": "string"},
            },
        },
        "checks": {
            "type": "object",
            "additionalProperties": {"type": ["boolean", "string", "null"]},
        },
        "steps": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "summary", "sets"],
                "properties": {
                    "name": {"type": "string"},
                    "level": {"type": ["integer", "null"]},
                    "summary": {"type": "string"},
                    "sets": {
                        "type": "object",
                        "additionalProperties": {"type": "array", "items": {"type": "string"}},
                    },
                },
            },
        },
        "notes": {"type": "array", "items": {"type": "string"}},
    },
}


@dataclass
class StepRecord:
    """
    One reduction or elimination step.

    `sets` are shown from trace level 1 on, `details` only at level 2.
    """

    name: str
    summary: str = ""
    level: Optional[int] = None
    sets: Dict[str, List[str]] = field(default_factory=dict)
    details: Dict[str, List[str]] = field(default_factory=dict)


def _render_items(items: Iterable) -> List[str]:
    out = []
    for item in items:
        out.append(render_clause(item) if isinstance(item, Clause) else str(item))
    return out


def purification_step(result: PurificationResult) -> StepRecord:
    """A `StepRecord` for one level of the hierarchical reduction."""
    record = StepRecord(
        name=f"reduce level {result.level}",
        level=result.level,
        summary=(
            f"{len(result.instances)} instances over {len(result.instance_terms)} terms, "
            f"{len(result.defs)} definitions, {len(result.con0)} congruence instances"
        ),
    )
    record.sets["instance terms"] = _render_items(result.instance_terms)
    defs = list(result.argument_defs.items()) + list(result.defs.items())
    record.sets["Def"] = [str(Literal("=", c, t)) for c, t in defs]
    record.sets["Con0"] = _render_items(result.con0)
    record.details["K[T]"] = _render_items(result.instances)
    record.details["K0"] = _render_items(result.k0)
    record.details["G0"] = _render_items(result.g0)
    if result.links:
        record.details["links"] = _render_items(result.links)
    return record


class ReportManager:
    """
    Collects the steps and the outcome of one task and renders them.

    Attributes:
        task (str): The task name.
        base (BaseTheoryId): Base theory of the problem.
        trace_level (int): 0 (result only), 1 (+ Def, Con0, instance sets)
            or 2 (every intermediate set).
        steps (list): `StepRecord` entries in execution order.
        checks (dict): Named verification outcomes.
        notes (list): Remarks collected along the way.
    """

    def __init__(self, task: str, base, trace_level: int = 0, problem: Optional[str] = None):
        self.task = task
        self.base = BaseTheoryId.parse(base)
        self.trace_level = trace_level
        self.problem = problem
        self.qe_theory: Optional[BaseTheoryId] = None
        self.verdict = None
        self.passed: Optional[bool] = None
        self.result: Optional[Dict[str, str]] = None
        self.steps: List[StepRecord] = []
        self.checks: Dict[str, object] = {}
        self.notes: List[str] = []
        self.logger = logging.getLogger(__name__)

    def add_step(self, record: StepRecord):
        self.logger.debug("Step recorded: %s", record.name)
        self.steps.append(record)

    def add_purifications(self, results: Iterable[PurificationResult]):
        for result in results:
            self.add_step(purification_step(result))

    def set_result(self, kind: str, formula):
        self.result = {"kind": kind, "text": str(formula)}

    def add_notes(self, notes: Iterable[str]):
        for note in notes:
            if note not in self.notes:
                self.notes.append(note)

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "problem": self.problem,
            "base": str(self.base),
            "qe_theory": None if self.qe_theory is None else str(self.qe_theory),
            "verdict": None if self.verdict is None else str(self.verdict),
            "passed": self.passed,
            "result": self.result,
            "checks": dict(self.checks),
            "steps": [
                {
                    "name": s.name,
                    "level": s.level,
                    "summary": s.summary,
                    "sets": dict(s.sets, **(s.details if self.trace_level >= 2 else {})),
                }
                for s in self.steps
            ],
            "notes": list(self.notes),
        }

    def validate(self, document: dict):
        """
        Raises:
            ValueError: If `document` does not match `REPORT_SCHEMA`.
        """
        errors = sorted(Draft7Validator(REPORT_SCHEMA).iter_errors(document), key=lambda e: list(e.path))
        if errors:
            self.logger.error("Report does not match its schema: %s", errors[0].message)
            raise ValueError(f"Invalid report: {errors[0].message}")

    def to_json(self) -> str:
        document = self.to_dict()
        self.validate(document)
        return json.dumps(document, indent=2, ensure_ascii=False)

    def write_json(self, path: str):
        text = self.to_json()
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(text + "\n")
        self.logger.info("Report written to %s", path)

    def render_text(self) -> str:
        lines = [f"task: {self.task}", f"base: {self.base}"]
        if self.qe_theory is not None:
            lines.append(f"qe theory: {self.qe_theory}")
        if self.trace_level >= 1:
            for step in self.steps:
                lines.append("")
                header = f"== {step.name}"
                lines.append(header + (f": {step.summary}" if step.summary else ""))
                shown = dict(step.sets)
                if self.trace_level >= 2:
                    shown.update(step.details)
                for name, items in shown.items():
                    lines.append(f"  {name}:")
                    lines.extend(f"    {item}" for item in items)
            lines.append("")
        if self.verdict is not None:
            lines.append(f"verdict: {self.verdict}")
        if self.result is not None:
            lines.append(f"{self.result['kind']}: {self.result['text']}")
        for name, value in self.checks.items():
            if isinstance(value, bool):
                value = "PASS" if value else "FAIL"
            lines.append(f"{name}: {value}")
        for note in self.notes:
            lines.append(f"note: {note}")
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# SMT-LIB output
# ---------------------------------------------------------------------------


def _symbol(name: str) -> str:
    if name and all(ch.isalnum() or ch in "_.'!" for ch in name) and not name[0].isdigit():
        return name
    return f"|{name}|"


def smtlib_term(term: Term) -> str:
    if isinstance(term, Num):
        value = term.value
        text = str(abs(value.numerator)) + ".0"
        if value.denominator != 1:
            text = f"(/ {abs(value.numerator)}.0 {value.denominator}.0)"
        return f"(- {text})" if value < 0 else text
    if isinstance(term, (Var, Const)):
        return _symbol(term.name)
    if not term.args:
        return _symbol(term.symbol)
    head = term.symbol if term.symbol in ("+", "-", "*") else _symbol(term.symbol)
    return "({} {})".format(head, " ".join(smtlib_term(a) for a in term.args))


def smtlib_formula(formula: Formula, sort: str) -> str:
    if isinstance(formula, Truth):
        return "true" if formula.value else "false"
    if isinstance(formula, Literal):
        atom = f"({formula.predicate} {smtlib_term(formula.left)} {smtlib_term(formula.right)})"
        return atom if formula.positive else f"(not {atom})"
    if isinstance(formula, Not):
        return f"(not {smtlib_formula(formula.arg, sort)})"
    if isinstance(formula, (And, Or)):
        op = "and" if isinstance(formula, And) else "or"
        return "({} {})".format(op, " ".join(smtlib_formula(a, sort) for a in formula.args))
    if isinstance(formula, Implies):
        return f"(=> {smtlib_formula(formula.left, sort)} {smtlib_formula(formula.right, sort)})"
    if isinstance(formula, Quantified):
        binders = " ".join(f"({_symbol(v.name)} {sort})" for v in formula.variables)
        return f"({formula.kind} ({binders}) {smtlib_formula(formula.body, sort)})"
    raise TypeError(f"Not a formula: {formula!r}")


def render_smtlib(formula: Formula, spec: TheorySpec, comment: Optional[str] = None) -> str:
    """
    An SMT-LIB 2 script asserting `formula`. Order theories and linear
    arithmetic are rendered over `Real`, equality over an uninterpreted sort.
    """
    sort = "U" if spec.base.is_equality else "Real"
    lines = []
    if comment:
        lines.extend(f"; {line}" for line in comment.splitlines())
    lines.append("(set-logic ALL)")
    if sort == "U":
        lines.append("(declare-sort U 0)")
    declared = {}
    for term in iter_all_subterms(formula):
        if isinstance(term, App) and spec.signature.is_extension(term.symbol):
            declared[term.symbol] = len(term.args)
    for symbol, arity in declared.items():
        lines.append("(declare-fun {} ({}) {})".format(_symbol(symbol), " ".join([sort] * arity), sort))
    for constant in constants_of(formula):
        if isinstance(constant, Const):
            lines.append(f"(declare-fun {_symbol(constant.name)} () {sort})")
    lines.append(f"(assert {smtlib_formula(formula, sort)})")
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"
