"""
Reading and writing problem files.

A problem file is a sequence of parenthesized forms::

    (base DLO)
    (level 1 (functions (f 1) (h 1) (c 0)) (axioms))
    (level 2 (functions (g 1))
             (axioms (forall (x) (=> (<= x c) (= (g x) (f x))))))
    (params f h c)
    (goal (and (<= c1 c2) (< (g c2) (g c1))))
    (task symelim)

Names bound by `forall`/`exists` are variables, declared symbols are
functions (or extension constants when their arity is 0) and every other
name is a free constant.
"""

import logging
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Union

from hierax import locality
from hierax.base_theories import ARITHMETIC_SYMBOLS, BaseTheoryId
from hierax.core import (
    FALSE,
    TRUE,
    And,
    App,
    Clause,
    Const,
    Formula,
    HieraxError,
    Implies,
    Literal,
    Not,
    Num,
    Or,
    Quantified,
    Term,
    Var,
    clausify,
    constants_of,
    free_variables,
    iter_subterms,
)
from hierax.interpolation import AmalgClosure, SharedConstants, SubtermOnly
from hierax.locality import TheorySpec
from hierax.utils import dedupe, format_location, suggest_symbol


TASKS = ("sat", "symelim", "interpolate")
RESERVED = {"true", "false", "and", "or", "not", "=>", "forall", "exists", "distinct"}
RELATIONS = {"=", "<=", "<", ">=", ">", "distinct"}

_TOKEN = re.compile(r"\s+|;[^\n]*|\(|\)|[^\s();]+")
_NUMERAL = re.compile(r"^-?\d+(/\d+)?$")


class ProblemError(HieraxError, ValueError):
    """
    Base class for problem-file errors. Carries the position of the
    offending form when it is known.
    """

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        location = format_location(line, column)
        super().__init__(f"{message} ({location})" if location else message)


class ProblemSyntaxError(ProblemError):
    pass


class UnknownSymbol(ProblemError):
    """Raised for an undeclared function symbol; `suggestion` is the closest declared one."""

    def __init__(self, name: str, line=None, column=None, suggestion: Optional[str] = None):
        self.name = name
        self.suggestion = suggestion
        message = f"Unknown symbol '{name}'"
        if suggestion:
            message += f"; did you mean '{suggestion}'?"
        super().__init__(message, line, column)


class ArityMismatch(ProblemError):
    pass


class LevelViolation(ProblemError, locality.LevelViolation):
    """Raised when an axiom uses a symbol declared at a higher level."""

    pass


# ---------------------------------------------------------------------------
# S-expressions
# ---------------------------------------------------------------------------


@dataclass
class SAtom:
    text: str
    line: int
    column: int


@dataclass
class SList:
    items: List[Union["SAtom", "SList"]]
    line: int
    column: int


SNode = Union[SAtom, SList]


def read_sexprs(text: str) -> List[SNode]:
    """
    Splits text into top-level s-expressions. Comments run from `;` to the
    end of the line.

    Raises:
        ProblemSyntaxError: On unbalanced parentheses.
    """
    stack: List[SList] = []
    top: List[SNode] = []
    line, column = 1, 1
    for match in _TOKEN.finditer(text):
        token = match.group()
        if token == "(":
            stack.append(SList([], line, column))
        elif token == ")":
            if not stack:
                raise ProblemSyntaxError("Unexpected ')'", line, column)
            node = stack.pop()
            (stack[-1].items if stack else top).append(node)
        elif not token.isspace() and not token.startswith(";"):
            (stack[-1].items if stack else top).append(SAtom(token, line, column))
        newlines = token.count("\n")
        if newlines:
            line += newlines
            column = len(token) - token.rfind("\n")
        else:
            column += len(token)
    if stack:
        raise ProblemSyntaxError("Unclosed '('", stack[-1].line, stack[-1].column)
    return top


# ---------------------------------------------------------------------------
# Problem files
# ---------------------------------------------------------------------------


@dataclass
class LevelDecl:
    functions: Dict[str, int]
    axioms: List[Clause] = field(default_factory=list)


@dataclass
class ProblemFile:
    """
    A parsed problem.

    Attributes:
        base (BaseTheoryId): The base theory.
        levels (list): `LevelDecl` entries, level 1 first.
        params (list): Parameter symbols (shared symbols for interpolation).
        closure (AmalgClosure, optional): Closure for interpolation.
        goals (list): Goal clauses for `sat` and `symelim`.
        goal_a, goal_b (list): The two sides of an interpolation problem.
        task (str, optional): One of `TASKS`.
        seed_terms (list): Extra instance terms.
    """

    base: BaseTheoryId
    levels: List[LevelDecl] = field(default_factory=list)
    params: List[str] = field(default_factory=list)
    closure: Optional[AmalgClosure] = None
    goals: List[Clause] = field(default_factory=list)
    goal_a: List[Clause] = field(default_factory=list)
    goal_b: List[Clause] = field(default_factory=list)
    task: Optional[str] = None
    seed_terms: List[Term] = field(default_factory=list)

    def constant_names(self) -> List[str]:
        sources = [c for level in self.levels for c in level.axioms]
        sources += self.goals + self.goal_a + self.goal_b
        names = [c.name for c in constants_of(sources) if isinstance(c, Const)]
        for term in self.seed_terms:
            names += [t.name for t in iter_subterms(term) if isinstance(t, Const)]
        if isinstance(self.closure, SharedConstants) and self.closure.constants:
            names += [c.name for c in self.closure.constants]
        return dedupe(names)

    def to_theory_spec(self, params: Optional[Sequence[str]] = None) -> TheorySpec:
        return TheorySpec.build(
            self.base,
            [(level.functions, level.axioms) for level in self.levels],
            params=self.params if params is None else params,
            free_constants=self.constant_names(),
        )


class ProblemHandler:
    """
    Resolves s-expressions against a declared signature.

    Attributes:
        base (BaseTheoryId): The base theory; decides whether numerals and
            arithmetic are admitted.
        levels (list): One dict (symbol -> arity) per level.
    """

    def __init__(self, base=BaseTheoryId.DLO, levels: Optional[Sequence[Dict[str, int]]] = None):
        self.logger = logging.getLogger(__name__)
        self.base = BaseTheoryId.parse(base)
        self.levels = [dict(level) for level in (levels or [])]
        self._level_cap: Optional[int] = None

    @classmethod
    def for_spec(cls, spec: TheorySpec) -> "ProblemHandler":
        return cls(spec.base, spec.signature.levels)

    def level_of(self, symbol: str) -> Optional[int]:
        for index, level in enumerate(self.levels, start=1):
            if symbol in level:
                return index
        return None

    def arity(self, symbol: str) -> Optional[int]:
        if self.base is BaseTheoryId.LRA and symbol in ARITHMETIC_SYMBOLS:
            return ARITHMETIC_SYMBOLS[symbol]
        level = self.level_of(symbol)
        return None if level is None else self.levels[level - 1][symbol]

    def declared(self) -> List[str]:
        return [s for level in self.levels for s in level]

    # -- whole files ---------------------------------------------------------

    def parse(self, text: str) -> ProblemFile:
        forms = read_sexprs(text)
        if not forms:
            raise ProblemSyntaxError("Empty problem file", 1, 1)
        for form in forms:
            if not isinstance(form, SList) or not form.items or not isinstance(form.items[0], SAtom):
                raise ProblemSyntaxError("Expected a (keyword ...) form", form.line, form.column)

        by_keyword: Dict[str, List[SList]] = {}
        for form in forms:
            by_keyword.setdefault(form.items[0].text, []).append(form)
        unknown = [k for k in by_keyword if k not in _FORMS]
        if unknown:
            form = by_keyword[unknown[0]][0]
            raise ProblemSyntaxError(f"Unknown form '{unknown[0]}'", form.line, form.column)

        bases = by_keyword.get("base", [])
        if len(bases) != 1 or len(bases[0].items) != 2:
            raise ProblemSyntaxError("Exactly one (base <theory>) form is required", forms[0].line, forms[0].column)
        try:
            self.base = BaseTheoryId.parse(self._atom(bases[0].items[1]))
        except ValueError as e:
            raise ProblemSyntaxError(str(e), bases[0].line, bases[0].column)

        level_forms = self._declare_levels(by_keyword.get("level", []))
        problem = ProblemFile(base=self.base)
        problem.levels = [LevelDecl(dict(level)) for level in self.levels]
        for index, form in level_forms:
            problem.levels[index - 1].axioms = self._axioms(form, index)

        for form in by_keyword.get("params", []):
            for item in form.items[1:]:
                name = self._atom(item)
                if self.level_of(name) is None:
                    raise UnknownSymbol(name, item.line, item.column, suggest_symbol(name, self.declared()))
                problem.params.append(name)
        problem.params = dedupe(problem.params)

        for keyword, target in (("goal", problem.goals), ("goalA", problem.goal_a), ("goalB", problem.goal_b)):
            for form in by_keyword.get(keyword, []):
                for item in form.items[1:]:
                    target.extend(self._ground_clauses(item))

        closures = by_keyword.get("closure", [])
        if closures:
            problem.closure = self._closure(closures[-1])
        tasks = by_keyword.get("task", [])
        if tasks:
            task_form = tasks[-1]
            problem.task = self._atom(task_form.items[1]) if len(task_form.items) == 2 else None
            if problem.task not in TASKS:
                raise ProblemSyntaxError(f"Task must be one of {', '.join(TASKS)}", task_form.line, task_form.column)
        for form in by_keyword.get("seed-terms", []):
            problem.seed_terms.extend(self._ground_term(item) for item in form.items[1:])

        self.logger.info(
            "Parsed problem: base %s, %d levels, %d goal clauses", self.base, len(problem.levels), len(problem.goals)
        )
        return problem

    def _declare_levels(self, forms: List[SList]):
        indexed = []
        self.levels = []
        for form in forms:
            if len(form.items) < 3:
                raise ProblemSyntaxError("Expected (level <n> (functions ...) (axioms ...))", form.line, form.column)
            try:
                index = int(self._atom(form.items[1]))
            except ValueError:
                raise ProblemSyntaxError("Level index must be an integer", form.items[1].line, form.items[1].column)
            indexed.append((index, form))
        indexed.sort(key=lambda pair: pair[0])
        if [i for i, _ in indexed] != list(range(1, len(indexed) + 1)):
            raise ProblemSyntaxError("Levels must be numbered 1, 2, ... without gaps", forms[0].line, forms[0].column)

        seen: Dict[str, int] = {}
        for index, form in indexed:
            section = self._section(form, "functions")
            functions = {}
            for decl in section.items[1:]:
                if not isinstance(decl, SList) or len(decl.items) != 2:
                    raise ProblemSyntaxError("Expected (<name> <arity>)", decl.line, decl.column)
                name = self._atom(decl.items[0])
                try:
                    arity = int(self._atom(decl.items[1]))
                except ValueError:
                    raise ProblemSyntaxError("Arity must be an integer", decl.line, decl.column)
                if arity < 0:
                    self.logger.error("Negative arity %d for '%s'", arity, name)
                    where = decl.items[1]
                    raise ProblemSyntaxError(f"Arity of '{name}' must be 0 or more", where.line, where.column)
                if name in seen or name in RESERVED or name in RELATIONS or _NUMERAL.match(name):
                    raise ProblemSyntaxError(f"Symbol '{name}' cannot be declared here", decl.line, decl.column)
                seen[name] = index
                functions[name] = arity
            self.levels.append(functions)
        return indexed

    def _section(self, form: SList, keyword: str) -> SList:
        for item in form.items[2:]:
            head = item.items[0] if isinstance(item, SList) and item.items else None
            if isinstance(head, SAtom) and head.text == keyword:
                return item
        if keyword == "axioms":
            return SList([SAtom("axioms", form.line, form.column)], form.line, form.column)
        raise ProblemSyntaxError(f"Missing ({keyword} ...) section", form.line, form.column)

    def _axioms(self, form: SList, index: int) -> List[Clause]:
        self._level_cap = index
        try:
            out = []
            for item in self._section(form, "axioms").items[1:]:
                formula = self.formula(item, frozenset())
                if free_variables(formula):
                    raise ProblemSyntaxError("Axiom has unbound variables", item.line, item.column)
                try:
                    out.extend(clausify(formula))
                except ValueError as e:
                    raise ProblemSyntaxError(str(e), item.line, item.column)
            return out
        finally:
            self._level_cap = None

    def _ground_clauses(self, node: SNode) -> List[Clause]:
        formula = self.formula(node, frozenset())
        if _has_quantifier(formula):
            raise ProblemSyntaxError("Goals must be ground", node.line, node.column)
        return clausify(formula)

    def _ground_term(self, node: SNode) -> Term:
        return self.term(node, frozenset())

    def _closure(self, form: SList) -> AmalgClosure:
        if len(form.items) < 2:
            raise ProblemSyntaxError("Expected (closure <kind> ...)", form.line, form.column)
        kind = self._atom(form.items[1])
        if kind == SubtermOnly.name and len(form.items) == 2:
            return SubtermOnly()
        if kind == SharedConstants.name and len(form.items) in (3, 4):
            functions = []
            for item in self._list(form.items[2]).items:
                name = self._atom(item)
                if self.level_of(name) is None:
                    raise UnknownSymbol(name, item.line, item.column, suggest_symbol(name, self.declared()))
                functions.append(name)
            constants = None
            if len(form.items) == 4:
                constants = []
                for item in self._list(form.items[3]).items:
                    term = self.term(item, frozenset())
                    if not isinstance(term, Const):
                        raise ProblemSyntaxError("Shared constants must be free constants", item.line, item.column)
                    constants.append(term)
            return SharedConstants(functions, constants)
        raise ProblemSyntaxError(
            "Expected (closure subterm-only) or (closure shared-constants (<fn> ...) [(<const> ...)])",
            form.line,
            form.column,
        )

    # -- terms and formulas --------------------------------------------------

    def term(self, node: SNode, bound) -> Term:
        if isinstance(node, SAtom):
            return self._leaf(node, bound)
        if not node.items or not isinstance(node.items[0], SAtom):
            raise ProblemSyntaxError("Expected a term", node.line, node.column)
        head = node.items[0]
        args = tuple(self.term(item, bound) for item in node.items[1:])
        arity = self.arity(head.text)
        if arity is None:
            raise UnknownSymbol(head.text, head.line, head.column, suggest_symbol(head.text, self.declared()))
        if arity >= 0 and len(args) != arity:
            raise ArityMismatch(f"'{head.text}' takes {arity} arguments, got {len(args)}", head.line, head.column)
        if arity < 0 and not args:
            raise ArityMismatch(f"'{head.text}' needs at least one argument", head.line, head.column)
        self._check_level(head)
        return App(head.text, args)

    def _leaf(self, node: SAtom, bound) -> Term:
        text = node.text
        if text in bound:
            return Var(text)
        if _NUMERAL.match(text):
            if self.base is not BaseTheoryId.LRA:
                raise ProblemSyntaxError(f"Numeral '{text}' outside linear arithmetic", node.line, node.column)
            return Num(Fraction(text))
        if text in RESERVED or text in RELATIONS or text in ARITHMETIC_SYMBOLS:
            raise ProblemSyntaxError(f"'{text}' is not a term", node.line, node.column)
        arity = self.arity(text)
        if arity is None:
            return Const(text)
        if arity != 0:
            raise ArityMismatch(f"'{text}' takes {arity} arguments, got 0", node.line, node.column)
        self._check_level(node)
        return App(text, ())

    def _check_level(self, node: SAtom):
        if self._level_cap is None:
            return
        found = self.level_of(node.text)
        if found is not None and found > self._level_cap:
            self.logger.error("'%s' from level %d used at level %d", node.text, found, self._level_cap)
            raise LevelViolation(
                f"'{node.text}' belongs to level {found} and cannot appear in level {self._level_cap} axioms",
                node.line,
                node.column,
            )

    def formula(self, node: SNode, bound) -> Formula:
        if isinstance(node, SAtom):
            if node.text == "true":
                return TRUE
            if node.text == "false":
                return FALSE
            raise ProblemSyntaxError(f"Expected a formula, got '{node.text}'", node.line, node.column)
        if not node.items or not isinstance(node.items[0], SAtom):
            raise ProblemSyntaxError("Expected a formula", node.line, node.column)
        head, rest = node.items[0].text, node.items[1:]
        if head in RELATIONS:
            if len(rest) != 2:
                raise ArityMismatch(f"'{head}' takes 2 arguments, got {len(rest)}", node.line, node.column)
            left, right = (self.term(item, bound) for item in rest)
            return _relation(head, left, right)
        if head == "and":
            return And(tuple(self.formula(item, bound) for item in rest)) if rest else TRUE
        if head == "or":
            return Or(tuple(self.formula(item, bound) for item in rest)) if rest else FALSE
        if head == "not" and len(rest) == 1:
            inner = self.formula(rest[0], bound)
            return inner.negate() if isinstance(inner, Literal) else Not(inner)
        if head == "=>" and len(rest) == 2:
            return Implies(self.formula(rest[0], bound), self.formula(rest[1], bound))
        if head in ("forall", "exists") and len(rest) == 2:
            names = [self._atom(item) for item in self._list(rest[0]).items]
            if not names:
                raise ProblemSyntaxError("Empty quantifier block", node.line, node.column)
            for name in names:
                if self.arity(name) is not None:
                    raise ProblemSyntaxError(f"'{name}' is declared and cannot be bound", node.line, node.column)
            body = self.formula(rest[1], bound | set(names))
            return Quantified(head, tuple(Var(n) for n in names), body)
        raise ProblemSyntaxError(f"Malformed '{head}' formula", node.line, node.column)

    def _atom(self, node: SNode) -> str:
        if not isinstance(node, SAtom):
            raise ProblemSyntaxError("Expected a name", node.line, node.column)
        return node.text

    def _list(self, node: SNode) -> SList:
        if not isinstance(node, SList):
            raise ProblemSyntaxError("Expected a list", node.line, node.column)
        return node


_FORMS = ("base", "level", "params", "closure", "goal", "goalA", "goalB", "task", "seed-terms")


def _relation(head: str, left: Term, right: Term) -> Literal:
    if head == "distinct":
        return Literal("=", left, right, False)
    if head == ">=":
        return Literal("<=", right, left)
    if head == ">":
        return Literal("<", right, left)
    return Literal(head, left, right)


def _has_quantifier(formula: Formula) -> bool:
    if isinstance(formula, Quantified):
        return True
    if isinstance(formula, (And, Or)):
        return any(_has_quantifier(a) for a in formula.args)
    if isinstance(formula, Not):
        return _has_quantifier(formula.arg)
    if isinstance(formula, Implies):
        return _has_quantifier(formula.left) or _has_quantifier(formula.right)
    return False


# ---------------------------------------------------------------------------
# Module-level entry points
# ---------------------------------------------------------------------------


def parse_problem(text: str) -> ProblemFile:
    """
    Parses a problem file.

    Raises:
        ProblemSyntaxError: Malformed input, including an empty file.
        UnknownSymbol: An undeclared function symbol.
        ArityMismatch: A symbol applied to the wrong number of arguments.
        LevelViolation: An axiom using a symbol of a higher level.
    """
    return ProblemHandler().parse(text)


def parse_formula(text: str, spec: TheorySpec) -> Formula:
    nodes = read_sexprs(text)
    if len(nodes) != 1:
        raise ProblemSyntaxError("Expected exactly one formula", 1, 1)
    return ProblemHandler.for_spec(spec).formula(nodes[0], frozenset())


def parse_terms(text: str, spec: TheorySpec) -> List[Term]:
    """Parses whitespace-separated ground terms, e.g. a seed-terms file."""
    handler = ProblemHandler.for_spec(spec)
    return [handler.term(node, frozenset()) for node in read_sexprs(text)]


def render_formula(formula) -> str:
    return str(formula)


def render_clause(clause: Clause) -> str:
    """A clause as a formula, with its variables bound by `forall`."""
    variables = clause.variables()
    if not variables:
        return str(clause)
    return "(forall ({}) {})".format(" ".join(v.name for v in variables), clause)


def render_problem(problem: ProblemFile) -> str:
    """Renders a `ProblemFile` back into the problem-file grammar."""
    lines = [f"(base {problem.base})"]
    for index, level in enumerate(problem.levels, start=1):
        functions = " ".join(f"({name} {arity})" for name, arity in level.functions.items())
        axioms = "".join(f"\n    {render_clause(c)}" for c in level.axioms)
        lines.append(f"(level {index} (functions {functions})\n  (axioms{axioms}))")
    if problem.params:
        lines.append("(params {})".format(" ".join(problem.params)))
    if isinstance(problem.closure, SubtermOnly):
        lines.append("(closure subterm-only)")
    elif isinstance(problem.closure, SharedConstants):
        text = "(closure shared-constants ({})".format(" ".join(problem.closure.functions))
        if problem.closure.constants is not None:
            text += " ({})".format(" ".join(str(c) for c in problem.closure.constants))
        lines.append(text + ")")
    for keyword, clauses in (("goal", problem.goals), ("goalA", problem.goal_a), ("goalB", problem.goal_b)):
        for clause in clauses:
            lines.append(f"({keyword} {clause})")
    if problem.seed_terms:
        lines.append("(seed-terms {})".format(" ".join(str(t) for t in problem.seed_terms)))
    if problem.task:
        lines.append(f"(task {problem.task})")
    return "\n".join(lines) + "\n"
