"""
Decision and quantifier-elimination engines for the built-in base theories.

Supported theories are dense linear orders without endpoints (DLO), total
orders (TOrd, handled through DLO), linear rational arithmetic (LRA) and
pure equality (EQ, handled through the theory of an infinite set).

Two independent elimination paths exist:

* `qe` enumerates the consistent disjuncts of the matrix and eliminates
  each variable by bound combination (orders), Fourier-Motzkin (LRA) or
  substitution/deletion (equality).
* `decide_entails` eliminates quantifiers by test-point substitution and
  never builds a disjunctive normal form.
"""

import itertools
import logging
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

from hierax.core import (
    FALSE,
    TRUE,
    And,
    App,
    Clause,
    Formula,
    HieraxError,
    Implies,
    Literal,
    Not,
    Num,
    Or,
    Quantified,
    Signature,
    Term,
    Truth,
    Var,
    clauses_formula,
    conj,
    disj,
    iter_subterms,
    negation,
    nnf,
    replace_in_formula,
    replace_in_literal,
)


logger = logging.getLogger(__name__)

DEFAULT_DISJUNCT_CAP = 100_000

ARITHMETIC_SYMBOLS = {"+": -1, "-": -1, "*": -1}


class BaseTheoryError(HieraxError):
    """Base class for errors raised by the base-theory engines."""

    pass


class NonLinearAtom(BaseTheoryError, ValueError):
    """Raised when a linear-arithmetic term multiplies two unknowns."""

    pass


class UnsupportedPredicate(BaseTheoryError, ValueError):
    """Raised when a literal uses a predicate the theory does not have."""

    pass


class ForeignVariable(BaseTheoryError, ValueError):
    """Raised when a quantified variable occurs below an uninterpreted symbol."""

    pass


class DisjunctLimitExceeded(BaseTheoryError):
    """Raised when a disjunctive normal form grows past the configured cap."""

    pass


class MissingQE(BaseTheoryError):
    """Raised when neither a theory nor its model completion admits elimination."""

    pass


class Verdict(Enum):
    SAT = "SAT"
    UNSAT = "UNSAT"

    def __str__(self):
        return self.value


class BaseTheoryId(Enum):
    """
    Identifier of a built-in base theory.

    `model_completion` maps every theory to the theory in which quantifier
    elimination actually runs; it is idempotent.
    """

    DLO = "DLO"
    TORD = "TOrd"
    LRA = "LRA"
    EQ = "EQ"
    INFINITE_SET = "InfiniteSet"

    def __str__(self):
        return self.value

    @classmethod
    def parse(cls, name) -> "BaseTheoryId":
        if isinstance(name, cls):
            return name
        for member in cls:
            if member.value.lower() == str(name).lower():
                return member
        raise ValueError("Unknown base theory: {}".format(name))

    @property
    def has_qe(self) -> bool:
        return self in (BaseTheoryId.DLO, BaseTheoryId.LRA, BaseTheoryId.INFINITE_SET)

    @property
    def model_completion(self) -> "BaseTheoryId":
        return _MODEL_COMPLETIONS[self]

    @property
    def is_order(self) -> bool:
        return self in (BaseTheoryId.DLO, BaseTheoryId.TORD)

    @property
    def is_equality(self) -> bool:
        return self in (BaseTheoryId.EQ, BaseTheoryId.INFINITE_SET)

    @property
    def functions(self) -> Dict[str, int]:
        return dict(ARITHMETIC_SYMBOLS) if self is BaseTheoryId.LRA else {}


_MODEL_COMPLETIONS = {
    BaseTheoryId.DLO: BaseTheoryId.DLO,
    BaseTheoryId.TORD: BaseTheoryId.DLO,
    BaseTheoryId.LRA: BaseTheoryId.LRA,
    BaseTheoryId.EQ: BaseTheoryId.INFINITE_SET,
    BaseTheoryId.INFINITE_SET: BaseTheoryId.INFINITE_SET,
}


def qe_theory_for(theory) -> BaseTheoryId:
    """The theory whose engine performs elimination for `theory`."""
    theory = BaseTheoryId.parse(theory)
    target = theory if theory.has_qe else theory.model_completion
    if not target.has_qe:
        raise MissingQE("No elimination procedure for {}".format(theory))
    return target


def make_signature(theory, levels=None, params=(), free_constants=()) -> Signature:
    theory = BaseTheoryId.parse(theory)
    return Signature(
        base_functions=theory.functions,
        levels=levels,
        params=params,
        free_constants=free_constants,
    )


def term_key(term: Term) -> str:
    return str(term)


# ---------------------------------------------------------------------------
# Linear forms
# ---------------------------------------------------------------------------


class Linear:
    """An exact linear expression `sum(coeff * atom) + const`."""

    __slots__ = ("coeffs", "const")

    def __init__(self, coeffs: Optional[Dict[Term, Fraction]] = None, const=0):
        self.coeffs = {t: Fraction(q) for t, q in (coeffs or {}).items() if q != 0}
        self.const = Fraction(const)

    def coeff(self, atom: Term) -> Fraction:
        return self.coeffs.get(atom, Fraction(0))

    def without(self, atom: Term) -> "Linear":
        return Linear({t: q for t, q in self.coeffs.items() if t != atom}, self.const)

    def scale(self, factor) -> "Linear":
        factor = Fraction(factor)
        return Linear({t: q * factor for t, q in self.coeffs.items()}, self.const * factor)

    def __add__(self, other: "Linear") -> "Linear":
        coeffs = dict(self.coeffs)
        for t, q in other.coeffs.items():
            coeffs[t] = coeffs.get(t, Fraction(0)) + q
        return Linear(coeffs, self.const + other.const)

    def __neg__(self) -> "Linear":
        return self.scale(-1)

    def __sub__(self, other: "Linear") -> "Linear":
        return self + (-other)

    def is_constant(self) -> bool:
        return not self.coeffs

    def holds(self, op: str) -> bool:
        """Truth of `const op 0` for a constant expression."""
        if op == "=":
            return self.const == 0
        if op == "<=":
            return self.const <= 0
        return self.const < 0

    def atoms(self) -> List[Term]:
        return sorted(self.coeffs, key=term_key)


def linearize(term: Term) -> Linear:
    """
    Reads a linear-arithmetic term as an exact linear expression.

    Anything that is not `+`, `-`, `*` or a numeral is an opaque atom.

    Raises:
        NonLinearAtom: If a product has two non-constant factors.
    """
    if isinstance(term, Num):
        return Linear(const=term.value)
    if isinstance(term, App) and term.symbol in ARITHMETIC_SYMBOLS and term.args:
        parts = [linearize(a) for a in term.args]
        if term.symbol == "+":
            total = Linear()
            for part in parts:
                total = total + part
            return total
        if term.symbol == "-":
            if len(parts) == 1:
                return -parts[0]
            total = parts[0]
            for part in parts[1:]:
                total = total - part
            return total
        scalar = Fraction(1)
        unknown = None
        for part in parts:
            if part.is_constant():
                scalar *= part.const
            elif unknown is None:
                unknown = part
            else:
                raise NonLinearAtom("Product of unknowns in {}".format(term))
        if unknown is None:
            return Linear(const=scalar)
        return unknown.scale(scalar)
    return Linear({term: Fraction(1)})


def _sum_term(pairs: Sequence[Tuple[Term, Fraction]]) -> Term:
    parts = []
    for atom, q in pairs:
        parts.append(atom if q == 1 else App("*", (Num(q), atom)))
    if len(parts) == 1:
        return parts[0]
    return App("+", tuple(parts))


@dataclass(frozen=True)
class LinearAtom:
    """
    A normalized linear constraint over exact rationals.

    The atoms are sorted and scaled so the leading coefficient is 1. An
    inequality whose leading coefficient was negative is scaled by a negative
    factor and kept as a lower bound `bound op sum`; otherwise the constraint
    reads `sum op bound`.
    """

    coefficients: Tuple[Tuple[Term, Fraction], ...]
    op: str
    bound: Fraction
    lower: bool = False

    @classmethod
    def from_linear(cls, lin: Linear, op: str) -> "LinearAtom":
        """Normalizes `lin op 0`."""
        atoms = lin.atoms()
        if not atoms:
            return cls((), op, -lin.const)
        lead = lin.coeff(atoms[0])
        scaled = lin.scale(1 / lead)
        coefficients = tuple((a, scaled.coeff(a)) for a in atoms)
        return cls(coefficients, op, -scaled.const, lower=op != "=" and lead < 0)

    @classmethod
    def from_literal(cls, literal: Literal) -> "LinearAtom":
        if not literal.positive:
            raise ValueError("Only positive literals have a linear atom")
        return cls.from_linear(linearize(literal.left) - linearize(literal.right), literal.predicate)

    def to_linear(self) -> Linear:
        """The expression `e` with `e op 0` equivalent to the constraint."""
        upper = Linear(dict(self.coefficients), -self.bound)
        return -upper if self.lower else upper

    def to_formula(self) -> Formula:
        if not self.coefficients:
            return TRUE if Linear(const=-self.bound).holds(self.op) else FALSE
        total = _sum_term(self.coefficients)
        if self.lower:
            return Literal(self.op, Num(self.bound), total)
        return Literal(self.op, total, Num(self.bound))


def linear_formula(lin: Linear, op: str) -> Formula:
    return LinearAtom.from_linear(lin, op).to_formula()


# ---------------------------------------------------------------------------
# Literal helpers
# ---------------------------------------------------------------------------


def order_form(literal: Literal) -> Tuple[str, Term, Term]:
    """
    Reads a literal as one of `u <= v`, `u < v`, `u = v`, `u != v`.
    Negated order literals are turned around.
    """
    if literal.positive:
        return literal.predicate, literal.left, literal.right
    if literal.predicate == "<=":
        return "<", literal.right, literal.left
    if literal.predicate == "<":
        return "<=", literal.right, literal.left
    return "!=", literal.left, literal.right


def is_trivially_true(literal: Literal) -> bool:
    kind, u, v = order_form(literal)
    return u == v and kind in ("=", "<=")


def is_trivially_false(literal: Literal) -> bool:
    kind, u, v = order_form(literal)
    return u == v and kind in ("!=", "<")


def _mentions(term: Term, x: Var) -> bool:
    return any(s == x for s in iter_subterms(term))


def literal_mentions(literal: Literal, x: Var) -> bool:
    return _mentions(literal.left, x) or _mentions(literal.right, x)


def _map_literals(formula: Formula, fn) -> Formula:
    if isinstance(formula, Literal):
        return fn(formula)
    if isinstance(formula, Truth):
        return formula
    if isinstance(formula, And):
        return conj(_map_literals(a, fn) for a in formula.args)
    if isinstance(formula, Or):
        return disj(_map_literals(a, fn) for a in formula.args)
    raise TypeError("Expected a quantifier-free formula in negation normal form")


def _literals(formula: Formula) -> List[Literal]:
    if isinstance(formula, Literal):
        return [formula]
    if isinstance(formula, (And, Or)):
        out = []
        for arg in formula.args:
            out.extend(_literals(arg))
        return out
    return []


class BaseTheorySolver:
    """
    Decision procedures and quantifier elimination for one base theory.

    Attributes:
        theory (BaseTheoryId): The theory the caller asked for.
        engine (BaseTheoryId): The theory whose engine runs (model completion).
        disjunct_cap (int): Maximum number of disjuncts a DNF may produce.
        debug_checks (bool): Re-check every simplification by mutual entailment.
    """

    def __init__(self, theory, disjunct_cap: int = DEFAULT_DISJUNCT_CAP, debug_checks: bool = False):
        self.theory = BaseTheoryId.parse(theory)
        self.engine = qe_theory_for(self.theory)
        self.disjunct_cap = disjunct_cap
        self.debug_checks = debug_checks
        self.logger = logging.getLogger(__name__)

    # -- literal normalization -------------------------------------------

    def normal_literal(self, literal: Literal) -> Literal:
        """
        Canonical literal: negated order literals turned into positive ones,
        equality sides ordered.
        """
        if self.engine.is_equality and literal.predicate != "=":
            self.logger.error("Predicate %s used over %s", literal.predicate, self.theory)
            raise UnsupportedPredicate(
                "Predicate '{}' is not available in {}".format(literal.predicate, self.theory)
            )
        kind, u, v = order_form(literal)
        if kind in ("=", "!="):
            if term_key(v) < term_key(u):
                u, v = v, u
            return Literal("=", u, v, kind == "=")
        return Literal(kind, u, v)

    def complement(self, literal: Literal) -> Literal:
        return self.normal_literal(literal.negate())

    def _normal(self, formula: Formula) -> Formula:
        return _map_literals(nnf(formula), self.normal_literal)

    # -- conjunction consistency -------------------------------------------

    def consistent(self, literals: Sequence[Literal]) -> bool:
        """Satisfiability of a conjunction of literals (variables read as constants)."""
        if self.engine.is_order:
            return self._order_consistent(literals)
        if self.engine is BaseTheoryId.LRA:
            return self._lra_consistent(literals)
        return self._eq_consistent(literals)

    def _order_consistent(self, literals) -> bool:
        index: Dict[Term, int] = {}
        edges = []
        diseqs = []
        for literal in literals:
            kind, u, v = order_form(literal)
            i = index.setdefault(u, len(index))
            j = index.setdefault(v, len(index))
            if kind == "!=":
                if i == j:
                    return False
                diseqs.append((i, j))
            elif kind == "=":
                edges.append((i, j, False))
                edges.append((j, i, False))
            else:
                edges.append((i, j, kind == "<"))
        n = len(index)
        reach: List[List[Optional[bool]]] = [[None] * n for _ in range(n)]
        for i, j, strict in edges:
            if reach[i][j] is None or (strict and not reach[i][j]):
                reach[i][j] = strict
        for k in range(n):
            row_k = reach[k]
            for i in range(n):
                ik = reach[i][k]
                if ik is None:
                    continue
                row_i = reach[i]
                for j in range(n):
                    kj = row_k[j]
                    if kj is None:
                        continue
                    strict = ik or kj
                    if row_i[j] is None or (strict and not row_i[j]):
                        row_i[j] = strict
        if any(reach[i][i] for i in range(n)):
            return False
        for i, j in diseqs:
            if reach[i][j] is not None and reach[j][i] is not None:
                return False
        return True

    def _lra_consistent(self, literals) -> bool:
        rows = []
        diseqs = []
        for literal in literals:
            lin = linearize(literal.left) - linearize(literal.right)
            if literal.positive:
                rows.append((lin, literal.predicate))
            elif literal.predicate == "<=":
                rows.append((-lin, "<"))
            elif literal.predicate == "<":
                rows.append((-lin, "<="))
            else:
                diseqs.append(lin)
        return self._fm_with_diseqs(rows, diseqs)

    def _fm_with_diseqs(self, rows, diseqs) -> bool:
        if not diseqs:
            return fm_satisfiable(rows)
        head, rest = diseqs[0], diseqs[1:]
        return self._fm_with_diseqs(rows + [(head, "<")], rest) or self._fm_with_diseqs(
            rows + [(-head, "<")], rest
        )

    def _eq_consistent(self, literals) -> bool:
        parent: Dict[Term, Term] = {}

        def find(t):
            parent.setdefault(t, t)
            while parent[t] != t:
                parent[t] = parent[parent[t]]
                t = parent[t]
            return t

        diseqs = []
        for literal in literals:
            if literal.predicate != "=":
                raise UnsupportedPredicate(
                    "Predicate '{}' is not available in {}".format(literal.predicate, self.theory)
                )
            if literal.positive:
                parent[find(literal.left)] = find(literal.right)
            else:
                diseqs.append((literal.left, literal.right))
        return all(find(u) != find(v) for u, v in diseqs)

    # -- case-splitting search -------------------------------------------

    def branches(self, formula: Formula, first_only: bool = False) -> Iterator[Tuple[Literal, ...]]:
        """
        Enumerates theory-consistent conjunctions of literals whose
        disjunction is equivalent to a quantifier-free `formula`.

        Raises:
            DisjunctLimitExceeded: If more than `disjunct_cap` branches are produced.
        """
        count = 0
        seen = set()
        for lits in self._expand([], set(), [], [self._normal(formula)]):
            key = frozenset(lits)
            if key in seen:
                continue
            seen.add(key)
            count += 1
            if count > self.disjunct_cap:
                self.logger.error("Disjunct cap %d exceeded", self.disjunct_cap)
                raise DisjunctLimitExceeded(
                    "More than {} disjuncts; raise the cap or simplify the input".format(
                        self.disjunct_cap
                    )
                )
            yield lits
            if first_only:
                return

    def _expand(self, lits, litset, ors, todo):
        lits = list(lits)
        litset = set(litset)
        ors = list(ors)
        todo = list(todo)
        while todo:
            item = todo.pop(0)
            if isinstance(item, Truth):
                if not item.value:
                    return
            elif isinstance(item, Literal):
                if self.complement(item) in litset:
                    return
                if item in litset:
                    continue
                lits.append(item)
                litset.add(item)
                if not self.consistent(lits):
                    return
            elif isinstance(item, And):
                todo = list(item.args) + todo
            elif isinstance(item, Or):
                ors.append(item.args)
            else:
                raise TypeError("Unexpected node during case splitting: {!r}".format(item))

        open_ors = []
        for alternatives in ors:
            alive = []
            satisfied = False
            for alt in alternatives:
                if isinstance(alt, Literal):
                    if alt in litset:
                        satisfied = True
                        break
                    if self.complement(alt) in litset:
                        continue
                elif isinstance(alt, Truth):
                    if alt.value:
                        satisfied = True
                        break
                    continue
                alive.append(alt)
            if satisfied:
                continue
            if not alive:
                return
            open_ors.append(tuple(alive))
        if not open_ors:
            yield tuple(lits)
            return
        pick = min(range(len(open_ors)), key=lambda i: len(open_ors[i]))
        chosen = open_ors.pop(pick)
        for alt in chosen:
            yield from self._expand(lits, litset, open_ors, [alt])

    def satisfiable(self, formula: Formula) -> bool:
        return next(self.branches(formula, first_only=True), None) is not None

    # -- public decision procedures --------------------------------------

    def decide_ground_sat(self, clauses: Iterable[Clause]) -> Verdict:
        """
        Decides a set of ground clauses. Each branch of the case split is a
        conjunction whose existential closure is decided by elimination
        (graph closure, Fourier-Motzkin or union-find).
        """
        clauses = list(clauses)
        verdict = Verdict.SAT if self.satisfiable(clauses_formula(clauses)) else Verdict.UNSAT
        self.logger.debug("Ground check over %s of %d clauses: %s", self.engine, len(clauses), verdict)
        return verdict

    def decide_entails(self, phi: Formula, psi: Formula) -> bool:
        """
        True iff the theory entails the universal closure of `phi -> psi`.

        Existential blocks on the left and universal blocks on the right are
        replaced by fresh names; the remaining quantifiers are eliminated by
        test-point substitution.
        """
        left = self._vs_qe(self._skolemize(nnf(phi), "exists"))
        right = self._vs_qe(self._skolemize(nnf(psi), "forall"))
        return not self.satisfiable(conj([left, negation(right)]))

    def equivalent(self, phi: Formula, psi: Formula) -> bool:
        return self.decide_entails(phi, psi) and self.decide_entails(psi, phi)

    def _skolemize(self, formula: Formula, kind: str) -> Formula:
        counter = itertools.count(1)
        tag = "l" if kind == "exists" else "r"
        while isinstance(formula, Quantified) and formula.kind == kind:
            mapping = {
                v: Var("{}!{}{}".format(v.name, tag, next(counter))) for v in formula.variables
            }
            formula = replace_in_formula(formula.body, mapping)
        return formula

    # -- elimination by disjunct enumeration ------------------------------

    def qe(self, formula: Formula) -> Formula:
        """
        Eliminates every quantifier of `formula`.

        Returns:
            Formula: A quantifier-free formula over the free symbols of the input.
        """
        self.logger.debug("QE in %s for %s", self.engine, formula)
        result = self._qe(nnf(formula))
        self.logger.debug("QE result: %s", result)
        return result

    def _qe(self, formula: Formula) -> Formula:
        if isinstance(formula, Quantified):
            body = self._qe(formula.body)
            if formula.kind == "exists":
                return self.eliminate_block(formula.variables, body)
            return negation(self.eliminate_block(formula.variables, negation(body)))
        if isinstance(formula, And):
            return conj(self._qe(a) for a in formula.args)
        if isinstance(formula, Or):
            return disj(self._qe(a) for a in formula.args)
        return formula

    def eliminate_block(self, variables: Sequence[Var], body: Formula) -> Formula:
        """Eliminates `exists variables` from a quantifier-free body."""
        self._check_foreign(variables, body)
        results = []
        for branch in self.branches(body):
            conjunctions = [list(branch)]
            for x in variables:
                step = []
                for lits in conjunctions:
                    step.extend(self._eliminate_one(x, lits))
                conjunctions = step
            for lits in conjunctions:
                results.append(conj(lits))
                if len(results) > self.disjunct_cap:
                    raise DisjunctLimitExceeded(
                        "More than {} disjuncts during elimination".format(self.disjunct_cap)
                    )
        return disj(results)

    def _check_foreign(self, variables, formula):
        wanted = set(variables)
        for literal in _literals(formula):
            for term in literal.terms:
                for sub in iter_subterms(term):
                    if (
                        isinstance(sub, App)
                        and sub.args
                        and sub.symbol not in self.engine.functions
                        and any(isinstance(s, Var) and s in wanted for s in iter_subterms(sub))
                    ):
                        raise ForeignVariable(
                            "Quantified variable below uninterpreted symbol in {}".format(sub)
                        )

    def _eliminate_one(self, x: Var, lits: List[Literal]) -> List[List[Literal]]:
        if self.engine.is_order:
            return self._order_eliminate(x, lits)
        if self.engine is BaseTheoryId.LRA:
            return self._lra_eliminate(x, lits)
        return self._eq_eliminate(x, lits)

    def _clean(self, lits) -> Optional[List[Literal]]:
        out = []
        for lit in lits:
            if is_trivially_false(lit):
                return None
            if is_trivially_true(lit):
                continue
            lit = self.normal_literal(lit)
            if lit not in out:
                out.append(lit)
        return out

    def _order_eliminate(self, x, lits):
        keep = [lit for lit in lits if not literal_mentions(lit, x)]
        rel = [order_form(lit) for lit in lits if literal_mentions(lit, x)]
        return self._order_bounds(x, keep, rel)

    def _order_bounds(self, x, keep, rel):
        for kind, u, v in rel:
            if kind == "=" and u != v:
                mapping = {x: v if u == x else u}
                rest = [replace_in_literal(_from_form(*form), mapping) for form in rel]
                cleaned = self._clean(keep + rest)
                return [] if cleaned is None else [cleaned]
        lowers, uppers = [], []
        for index, (kind, u, v) in enumerate(rel):
            if u == v:
                if kind in ("<", "!="):
                    return []
                continue
            if kind == "!=":
                other = v if u == x else u
                rest = rel[:index] + rel[index + 1:]
                out = []
                for split in (("<", x, other), ("<", other, x)):
                    out.extend(self._order_bounds(x, keep, rest + [split]))
                return out
            if u == x:
                uppers.append((v, kind == "<"))
            else:
                lowers.append((u, kind == "<"))
        combined = [
            Literal("<" if s1 or s2 else "<=", lo, hi)
            for lo, s1 in lowers
            for hi, s2 in uppers
        ]
        cleaned = self._clean(keep + combined)
        return [] if cleaned is None else [cleaned]

    def _lra_eliminate(self, x, lits):
        keep = []
        rows = []
        for lit in lits:
            if not literal_mentions(lit, x):
                keep.append(lit)
                continue
            lin = linearize(lit.left) - linearize(lit.right)
            if lit.positive:
                rows.append((lin, lit.predicate))
            elif lit.predicate == "<=":
                rows.append((-lin, "<"))
            elif lit.predicate == "<":
                rows.append((-lin, "<="))
            else:
                rows.append((lin, "!="))
        return self._lra_bounds(x, keep, rows)

    def _lra_bounds(self, x, keep, rows):
        for index, (lin, op) in enumerate(rows):
            if op == "!=":
                rest = rows[:index] + rows[index + 1:]
                out = []
                for split in ((lin, "<"), (-lin, "<")):
                    out.extend(self._lra_bounds(x, keep, rest + [split]))
                return out
        produced = []
        for lin, op in fm_project(rows, x):
            formula = linear_formula(lin, op)
            if formula == FALSE:
                return []
            if formula != TRUE:
                produced.append(formula)
        cleaned = self._clean(keep + produced)
        return [] if cleaned is None else [cleaned]

    def _eq_eliminate(self, x, lits):
        for lit in lits:
            if lit.positive and (lit.left == x) != (lit.right == x):
                target = lit.right if lit.left == x else lit.left
                mapping = {x: target}
                cleaned = self._clean(replace_in_literal(m, mapping) for m in lits)
                return [] if cleaned is None else [cleaned]
        if any(lit.left == x and lit.right == x and not lit.positive for lit in lits):
            return []
        return [[lit for lit in lits if not literal_mentions(lit, x)]]

    # -- elimination by test points ----------------------------------------

    def _vs_qe(self, formula: Formula) -> Formula:
        if isinstance(formula, Quantified):
            body = self._vs_qe(formula.body)
            if formula.kind == "exists":
                return self._vs_block(formula.variables, body)
            return negation(self._vs_block(formula.variables, negation(body)))
        if isinstance(formula, And):
            return conj(self._vs_qe(a) for a in formula.args)
        if isinstance(formula, Or):
            return disj(self._vs_qe(a) for a in formula.args)
        if isinstance(formula, Literal):
            return self.normal_literal(formula)
        return formula

    def _vs_block(self, variables, body) -> Formula:
        self._check_foreign(variables, body)
        for x in variables:
            body = self._vs_one(x, self._normal(body))
        return body

    def _vs_one(self, x: Var, body: Formula) -> Formula:
        literals = [lit for lit in _literals(body) if literal_mentions(lit, x)]
        if not literals:
            return body
        if self.engine.is_order:
            points = [("-inf", None)]
            for lit in literals:
                _, u, v = order_form(lit)
                for t in (u, v):
                    if t != x:
                        points.append(("at", t))
                        points.append(("above", t))
            evaluate = self._order_at
        elif self.engine is BaseTheoryId.LRA:
            points = [("-inf", None)]
            for lit in literals:
                lin = linearize(lit.left) - linearize(lit.right)
                a = lin.coeff(x)
                if a != 0:
                    t = lin.without(x).scale(-1 / a)
                    points.append(("at", t))
                    points.append(("above", t))
            evaluate = self._lra_at
        else:
            points = [("new", None)]
            for lit in literals:
                for t in (lit.left, lit.right):
                    if t != x:
                        points.append(("at", t))
            evaluate = self._eq_at
        seen = set()
        cases = []
        for point in points:
            key = _point_key(point)
            if key in seen:
                continue
            seen.add(key)

            def at_point(lit, point=point):
                return evaluate(lit, x, point) if literal_mentions(lit, x) else lit

            cases.append(_map_literals(body, at_point))
        return disj(cases)

    def _order_at(self, lit, x, point) -> Formula:
        mode, t = point
        if mode == "at":
            return self._settle(replace_in_literal(lit, {x: t}))
        kind, u, v = order_form(lit)
        if u == x and v == x:
            value = kind in ("=", "<=")
        elif u == x:
            if kind == "!=":
                value = True
            elif kind == "=":
                value = False
            elif mode == "-inf":
                value = True
            else:
                return self._settle(Literal("<", t, v))
        else:
            if kind == "!=":
                value = True
            elif kind == "=":
                value = False
            elif mode == "-inf":
                value = False
            else:
                return self._settle(Literal("<=", u, t))
        return TRUE if value else FALSE

    def _lra_at(self, lit, x, point) -> Formula:
        mode, t = point
        lin = linearize(lit.left) - linearize(lit.right)
        op = lit.predicate
        negated = not lit.positive
        a = lin.coeff(x)
        rest = lin.without(x)
        if a == 0:
            result = linear_formula(lin, op)
        elif mode == "at":
            result = linear_formula(rest + t.scale(a), op)
        elif mode == "-inf":
            result = FALSE if op == "=" else (TRUE if a > 0 else FALSE)
        else:
            d = rest + t.scale(a)
            if op == "=":
                result = FALSE
            else:
                result = linear_formula(d, "<=" if a < 0 else "<")
        if negated:
            result = negation(result)
        return self._normal(result) if not isinstance(result, Truth) else result

    def _eq_at(self, lit, x, point) -> Formula:
        mode, t = point
        if mode == "at":
            return self._settle(replace_in_literal(lit, {x: t}))
        same = lit.left == lit.right
        value = same if lit.positive else not same
        return TRUE if value else FALSE

    def _settle(self, lit: Literal) -> Formula:
        if is_trivially_true(lit):
            return TRUE
        if is_trivially_false(lit):
            return FALSE
        return self.normal_literal(lit)

    # -- simplification ------------------------------------------------------

    def simplify(self, formula: Formula) -> Formula:
        """
        Returns an equivalent disjunction of conjunctions with unsatisfiable
        disjuncts, tautological literals, literals implied by the rest of
        their disjunct and disjuncts implied by another disjunct removed.
        """
        if any(isinstance(n, Quantified) for n in _walk(formula)):
            raise ValueError("simplify expects a quantifier-free formula")
        disjuncts = []
        for branch in self.branches(formula):
            lits = self._clean(branch)
            if lits is None:
                continue
            lits = self._merge_strict(lits)
            lits = self._drop_implied(lits)
            if frozenset(lits) not in [frozenset(d) for d in disjuncts]:
                disjuncts.append(lits)
        kept = []
        for index, lits in enumerate(disjuncts):
            redundant = any(
                other_index != index
                and self._implies(lits, other)
                and (other_index < index or not self._implies(other, lits))
                for other_index, other in enumerate(disjuncts)
            )
            if not redundant:
                kept.append(disjuncts[index])
        result = disj(conj(lits) for lits in kept)
        if self.debug_checks and not self.equivalent(formula, result):
            self.logger.error("Simplification changed meaning of %s", formula)
            raise BaseTheoryError("Simplification is not an equivalence")
        return result

    def _merge_strict(self, lits):
        if self.engine.is_equality:
            return lits
        out = list(lits)
        for lit in lits:
            if lit.predicate == "<=" and lit.positive:
                neq = self.normal_literal(Literal("=", lit.left, lit.right, False))
                if neq in out and lit in out:
                    out.remove(neq)
                    out[out.index(lit)] = Literal("<", lit.left, lit.right)
        return list(dict.fromkeys(out))

    def _drop_implied(self, lits):
        out = list(lits)
        for lit in list(lits):
            rest = [m for m in out if m != lit]
            if len(rest) < len(out) and not self.consistent(rest + [self.complement(lit)]):
                out = rest
        return out

    def _implies(self, lits, other) -> bool:
        return all(not self.consistent(list(lits) + [self.complement(m)]) for m in other)


def _walk(formula):
    yield formula
    if isinstance(formula, Not):
        yield from _walk(formula.arg)
    elif isinstance(formula, (And, Or)):
        for arg in formula.args:
            yield from _walk(arg)
    elif isinstance(formula, Implies):
        yield from _walk(formula.left)
        yield from _walk(formula.right)
    elif isinstance(formula, Quantified):
        yield from _walk(formula.body)


def _from_form(kind: str, u: Term, v: Term) -> Literal:
    if kind == "!=":
        return Literal("=", u, v, False)
    return Literal(kind, u, v)


def _point_key(point) -> Tuple[str, str]:
    mode, where = point
    if where is None:
        return mode, ""
    if isinstance(where, Linear):
        return mode, str(sorted((term_key(t), q) for t, q in where.coeffs.items())) + str(where.const)
    return mode, term_key(where)


def fm_project(rows, x: Var):
    """
    Projects `x` out of a conjunction of rows `lin op 0` (op in `=`, `<=`, `<`).
    Equalities are used for substitution first.
    """
    for index, (lin, op) in enumerate(rows):
        a = lin.coeff(x)
        if op == "=" and a != 0:
            out = []
            for other_index, (other, other_op) in enumerate(rows):
                if other_index == index:
                    continue
                c = other.coeff(x)
                if c != 0:
                    other = other - lin.scale(c / a)
                out.append((other, other_op))
            return out
    lowers, uppers, out = [], [], []
    for lin, op in rows:
        a = lin.coeff(x)
        if a > 0:
            uppers.append((lin, op, a))
        elif a < 0:
            lowers.append((lin, op, a))
        else:
            out.append((lin, op))
    for up, up_op, a_up in uppers:
        for low, low_op, a_low in lowers:
            combined = up.scale(-a_low) + low.scale(a_up)
            strict = up_op == "<" or low_op == "<"
            out.append((combined.without(x), "<" if strict else "<="))
    return out


def fm_satisfiable(rows) -> bool:
    """Fourier-Motzkin satisfiability of `lin op 0` rows over exact rationals."""
    rows = list(rows)
    while True:
        remaining = []
        for lin, op in rows:
            if lin.is_constant():
                if not lin.holds(op):
                    return False
            else:
                remaining.append((lin, op))
        if not remaining:
            return True
        atoms = sorted({t for lin, _ in remaining for t in lin.coeffs}, key=term_key)
        rows = fm_project(remaining, atoms[0])


# ---------------------------------------------------------------------------
# Module-level operations
# ---------------------------------------------------------------------------


def qe(theory, formula: Formula, disjunct_cap: int = DEFAULT_DISJUNCT_CAP) -> Formula:
    return BaseTheorySolver(theory, disjunct_cap).qe(formula)


def decide_ground_sat(theory, clauses: Iterable[Clause], disjunct_cap: int = DEFAULT_DISJUNCT_CAP) -> Verdict:
    return BaseTheorySolver(theory, disjunct_cap).decide_ground_sat(clauses)


def decide_entails(theory, phi: Formula, psi: Formula, disjunct_cap: int = DEFAULT_DISJUNCT_CAP) -> bool:
    return BaseTheorySolver(theory, disjunct_cap).decide_entails(phi, psi)


def simplify(theory, formula: Formula, debug_checks: bool = False) -> Formula:
    return BaseTheorySolver(theory, debug_checks=debug_checks).simplify(formula)


def finite_order_oracle(clauses: Iterable[Clause], bound: Optional[int] = None) -> Verdict:
    """
    Decides ground order constraints by trying every placement of their
    atoms into a chain of at most `bound` positions (collisions allowed).

    Args:
        clauses: Ground clauses over `<=`, `<`, `=`.
        bound (int, optional): Chain length; defaults to the number of atoms.

    Raises:
        ValueError: If `bound` is smaller than the number of atoms.
    """
    clauses = list(clauses)
    atoms = list(dict.fromkeys(t for c in clauses for lit in c.literals for t in lit.terms))
    size = len(atoms) if bound is None else bound
    if size < len(atoms):
        raise ValueError("Chain bound {} is below the {} atoms".format(size, len(atoms)))
    index = {t: i for i, t in enumerate(atoms)}
    compiled = [
        [(lit.predicate, index[lit.left], index[lit.right], lit.positive) for lit in c.literals]
        for c in clauses
    ]
    for placement in itertools.product(range(max(size, 1)), repeat=len(atoms)):
        if all(any(_holds(p, placement[i], placement[j]) == pos for p, i, j, pos in c) for c in compiled):
            return Verdict.SAT
    return Verdict.UNSAT


def _holds(predicate, u, v) -> bool:
    if predicate == "=":
        return u == v
    if predicate == "<=":
        return u <= v
    return u < v
