"""
Ground interpolation for W-separable theory extensions.

Each side of an unsatisfiable pair (A, B) is instantiated over its own
amalgamation closure W(A, B) resp. W(B, A). The A-side is then reduced to
the base theory and every symbol it does not share with B is eliminated;
after back-substitution the result is an interpolant.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from hierax.base_theories import DEFAULT_DISJUNCT_CAP, BaseTheoryId, BaseTheorySolver, Verdict
from hierax.core import (
    FALSE,
    TRUE,
    App,
    Clause,
    Const,
    Formula,
    HieraxError,
    Signature,
    Term,
    constants_of,
    function_symbols,
    ground_subterms,
    is_ground,
    iter_subterms,
    negation,
)
from hierax.locality import HierarchicalReducer, TheorySpec, instantiate
from hierax.symelim import SymbolEliminator, SymElimResult


logger = logging.getLogger(__name__)


class NotUnsat(HieraxError):
    """Raised when A ∧ B is satisfiable, so no interpolant exists."""

    pass


class SharingError(HieraxError, ValueError):
    """
    Raised when the declared shared symbols are not a subset of what A and B
    may share, or when elimination leaves a symbol that is not shared.
    """

    pass


# ---------------------------------------------------------------------------
# Amalgamation closures
# ---------------------------------------------------------------------------


def _free_constants(terms: Iterable[Term]) -> List[Const]:
    return [t for t in dict.fromkeys(terms) if isinstance(t, Const)]


def _st(K: Sequence[Clause], terms: Iterable[Term]) -> Dict[Term, None]:
    found = dict.fromkeys(ground_subterms(list(K)))
    for term in terms:
        for sub in iter_subterms(term):
            if is_ground(sub):
                found[sub] = None
    return found


class AmalgClosure:
    """
    A two-argument closure W(T_A, T_B) deciding which ground terms the
    A-side may instantiate its axioms with.
    """

    name = "abstract"

    def apply(
        self,
        K: Sequence[Clause],
        terms_a: Iterable[Term],
        terms_b: Iterable[Term],
        signature: Signature,
    ) -> List[Term]:
        raise NotImplementedError

    def __eq__(self, other):
        return type(self) is type(other) and vars(self) == vars(other)

    def __hash__(self):
        return hash(self.name)


class SubtermOnly(AmalgClosure):
    """W(T_A, T_B) = st(K) ∪ st(T_A)."""

    name = "subterm-only"

    def apply(self, K, terms_a, terms_b, signature):
        return list(_st(K, terms_a))

    def __repr__(self):
        return "SubtermOnly()"


class SharedConstants(AmalgClosure):
    """
    W(T_A, T_B) = st(K) ∪ st(T_A) ∪ {f(c1, ..., cn) | f ∈ functions, ci shared}.

    A constant is shared when it occurs on the A-side (terms or axioms) and
    in T_B. An explicit `constants` list replaces that computation.

    Example:
        >>> d = Const("d")
        >>> w = SharedConstants(["f"], [d])
        >>> sig = Signature(levels=[{"f": 1}])
        >>> [str(t) for t in w.apply([], [d], [d], sig)]
        ['d', '(f d)']
    """

    name = "shared-constants"

    def __init__(self, functions: Iterable[str] = (), constants: Optional[Iterable[Const]] = None):
        self.functions = tuple(dict.fromkeys(functions))
        self.constants = None if constants is None else tuple(dict.fromkeys(constants))

    def shared(self, K, terms_a, terms_b) -> List[Const]:
        if self.constants is not None:
            return list(self.constants)
        side_a = _free_constants(_st(K, terms_a))
        side_b = set(_free_constants(_st([], terms_b)))
        return [c for c in side_a if c in side_b]

    def apply(self, K, terms_a, terms_b, signature):
        terms_a, terms_b = list(terms_a), list(terms_b)
        found = _st(K, terms_a)
        shared = self.shared(K, terms_a, terms_b)
        for symbol in self.functions:
            arity = signature.arity(symbol)
            if not arity:
                continue
            for args in _tuples(shared, arity):
                found[App(symbol, args)] = None
        return list(found)

    def __repr__(self):
        if self.constants is None:
            return "SharedConstants({})".format(list(self.functions))
        return "SharedConstants({}, {})".format(list(self.functions), [str(c) for c in self.constants])


def _tuples(items, arity) -> List[Tuple[Term, ...]]:
    out = [()]
    for _ in range(arity):
        out = [prefix + (item,) for prefix in out for item in items]
    return out


# ---------------------------------------------------------------------------
# Shared symbols
# ---------------------------------------------------------------------------


def shared_functions(spec: TheorySpec, A: Sequence[Clause], B: Sequence[Clause]) -> List[str]:
    """
    Extension symbols that A and B share: symbols occurring in a clause of K
    together are related, and the transitive closure of that relation
    groups symbols into classes. A class is shared when it meets the
    symbols of both A and B.
    """
    signature = spec.signature
    parent: Dict[str, str] = {}

    def find(symbol):
        parent.setdefault(symbol, symbol)
        while parent[symbol] != symbol:
            parent[symbol] = parent[parent[symbol]]
            symbol = parent[symbol]
        return symbol

    extension = [s for level in signature.levels for s in level]
    for symbol in extension:
        find(symbol)
    for clause in spec.all_axioms():
        symbols = [s for s in function_symbols(clause) if signature.is_extension(s)]
        for other in symbols[1:]:
            parent[find(other)] = find(symbols[0])

    in_a = {find(s) for s in function_symbols(list(A)) if signature.is_extension(s)}
    in_b = {find(s) for s in function_symbols(list(B)) if signature.is_extension(s)}
    return [s for s in extension if find(s) in in_a and find(s) in in_b]


def shared_constants(A: Sequence[Clause], B: Sequence[Clause]) -> List[Const]:
    in_b = set(constants_of(list(B)))
    return [c for c in constants_of(list(A)) if isinstance(c, Const) and c in in_b]


def closure_apply(
    W: AmalgClosure,
    K: Sequence[Clause],
    terms_a: Iterable[Term],
    terms_b: Iterable[Term],
    signature: Signature,
) -> List[Term]:
    return W.apply(K, terms_a, terms_b, signature)


# ---------------------------------------------------------------------------
# Problems and reports
# ---------------------------------------------------------------------------


@dataclass
class InterpolationProblem:
    """An interpolation task: ground sides A and B over `spec` and the options of the run."""

    spec: TheorySpec
    A: List[Clause]
    B: List[Clause]
    closure: Optional[AmalgClosure] = None
    shared: Optional[List[str]] = None
    side: str = "a"


@dataclass
class InterpolantReport:
    """
    Result of an interpolation run.

    Attributes:
        interpolant (Formula): The interpolant I.
        shared_functions (list): Extension symbols I may mention.
        shared_constants (list): Free constants I may mention.
        audit (list): Symbols of I that are not shared; empty when it passes.
        a_entails (bool): A ⊨ I.
        b_refutes (bool): B ∧ I ⊨ ⊥.
        separable (bool): S_A ∪ S_B is unsatisfiable.
        qe_theory (BaseTheoryId): The theory in which elimination ran.
        side (str): "a" or "b", the side symbols were eliminated from.
        separated (tuple): (S_A, S_B).
        elimination (SymElimResult): The elimination run behind I.
        notes (list): Remarks for the report.
    """

    interpolant: Formula = TRUE
    shared_functions: List[str] = field(default_factory=list)
    shared_constants: List[Const] = field(default_factory=list)
    audit: List[str] = field(default_factory=list)
    a_entails: Optional[bool] = None
    b_refutes: Optional[bool] = None
    separable: Optional[bool] = None
    qe_theory: Optional[BaseTheoryId] = None
    side: str = "a"
    closure: Optional[AmalgClosure] = None
    separated: Tuple[List[Clause], List[Clause]] = field(default_factory=lambda: ([], []))
    elimination: Optional[SymElimResult] = None
    notes: List[str] = field(default_factory=list)

    @property
    def verified(self) -> bool:
        return bool(self.a_entails and self.b_refutes and not self.audit)


# ---------------------------------------------------------------------------
# Interpolation
# ---------------------------------------------------------------------------


class Interpolator:
    """
    Computes and checks ground interpolants over one `TheorySpec`.

    Attributes:
        spec (TheorySpec): The theory extension chain.
        reducer (HierarchicalReducer): Used for the satisfiability checks.
        solver (BaseTheorySolver): Used for the case splits of I and ¬I.
    """

    def __init__(self, spec: TheorySpec, disjunct_cap: int = DEFAULT_DISJUNCT_CAP, debug_checks: bool = False):
        self.spec = spec
        self.disjunct_cap = disjunct_cap
        self.debug_checks = debug_checks
        self.reducer = HierarchicalReducer(spec, disjunct_cap)
        self.solver = BaseTheorySolver(spec.base, disjunct_cap)
        self.logger = logging.getLogger(__name__)

    def default_closure(self, A, B) -> AmalgClosure:
        return SharedConstants(shared_functions(self.spec, A, B))

    def solve(self, problem: InterpolationProblem) -> InterpolantReport:
        return self.compute_interpolant(problem.A, problem.B, problem.closure, problem.shared, problem.side)

    def separate_instantiate(
        self, A: Sequence[Clause], B: Sequence[Clause], W: AmalgClosure
    ) -> Tuple[List[Clause], List[Clause]]:
        """
        Instantiates the axioms of each level, top level first, over
        W(A, B) on the A-side and W(B, A) on the B-side. Instances of a
        level are added before the closure of the next level down is taken.
        """
        side_a, side_b = list(A), list(B)
        signature = self.spec.signature
        for level in range(self.spec.depth, 0, -1):
            K = self.spec.axioms(level)
            terms_a = ground_subterms(side_a)
            terms_b = ground_subterms(side_b)
            w_ab = closure_apply(W, K, terms_a, terms_b, signature)
            w_ba = closure_apply(W, K, terms_b, terms_a, signature)
            self.logger.debug("Level %d W(A,B) = %s", level, [str(t) for t in w_ab])
            self.logger.debug("Level %d W(B,A) = %s", level, [str(t) for t in w_ba])
            side_a += [c for c in instantiate(K, w_ab, level, signature) if c not in side_a]
            side_b += [c for c in instantiate(K, w_ba, level, signature) if c not in side_b]
        return side_a, side_b

    def compute_interpolant(
        self,
        A: Sequence[Clause],
        B: Sequence[Clause],
        W: Optional[AmalgClosure] = None,
        shared: Optional[Iterable[str]] = None,
        side: str = "a",
    ) -> InterpolantReport:
        """
        Computes an interpolant of A and B.

        Args:
            A, B: Ground clauses.
            W (AmalgClosure, optional): Defaults to `SharedConstants` over
                the shared extension symbols.
            shared (iterable, optional): Narrows the shared extension symbols.
            side (str): "b" eliminates from B and negates the result.

        Raises:
            NotUnsat: If A ∧ B is satisfiable.
            SharingError: If `shared` widens sharing or the result mentions
                symbols that are not shared.
        """
        if side not in ("a", "b"):
            raise ValueError("side must be 'a' or 'b', got {!r}".format(side))
        A, B = list(A), list(B)
        self.logger.info("Interpolating %d A-clauses against %d B-clauses", len(A), len(B))
        if self.reducer.decide_sat_extension(A + B) is Verdict.SAT:
            self.logger.error("A ∧ B is satisfiable")
            raise NotUnsat("A ∧ B is satisfiable; no interpolant exists")

        functions = shared_functions(self.spec, A, B)
        if shared is not None:
            shared = list(dict.fromkeys(shared))
            extra = [s for s in shared if s not in functions]
            if extra:
                self.logger.error("Symbols %s are not shared by A and B", extra)
                raise SharingError("Symbols {} are not shared by A and B".format(extra))
            functions = shared
        constants = shared_constants(A, B)
        W = W or SharedConstants(functions)

        report = InterpolantReport(
            shared_functions=functions,
            shared_constants=constants,
            side=side,
            closure=W,
        )
        report.notes.append(
            "W-separability of the extension for {!r} is assumed, not proved.".format(W)
        )
        report.notes.append("Shared extension terms over shared constants are treated as pure.")
        self.logger.warning("W-separability for %r is assumed.", W)

        S_A, S_B = self.separate_instantiate(A, B, W)
        report.separated = (S_A, S_B)
        report.separable = self._separable(S_A, S_B)
        if not report.separable:
            self.logger.warning("The separated instances are satisfiable; W does not separate A and B.")
            report.notes.append("The separated instance sets are satisfiable together.")

        source = S_A if side == "a" else S_B
        elimination = self._eliminate(source, functions, constants)
        report.elimination = elimination
        report.qe_theory = elimination.qe_theory
        report.interpolant = elimination.gamma2 if side == "a" else self.solver.simplify(negation(elimination.gamma2))

        report.audit = self.audit(report.interpolant, functions, constants)
        if report.audit:
            self.logger.error("Interpolant mentions non-shared symbols %s", report.audit)
            raise SharingError(
                "Interpolant {} mentions non-shared symbols {}".format(report.interpolant, report.audit)
            )
        report.a_entails, report.b_refutes = self.verify_interpolant(A, B, report.interpolant)
        self.logger.info("Interpolant: %s", report.interpolant)
        return report

    def _separable(self, S_A, S_B) -> bool:
        reduced, _ = self.reducer.reduce_chain(list(S_A) + list(S_B), instantiate_axioms=False)
        return self.solver.decide_ground_sat(reduced) is Verdict.UNSAT

    def _eliminate(self, clauses, functions, constants) -> SymElimResult:
        params = list(functions)
        eliminator = SymbolEliminator(self.spec, self.disjunct_cap, self.debug_checks)
        reduced, purifications = eliminator.reducer.reduce_chain(clauses, instantiate_axioms=False)
        return eliminator.eliminate(reduced, purifications, params, kept_constants=constants)

    def audit(self, interpolant: Formula, functions, constants) -> List[str]:
        """Symbols of `interpolant` that are neither base symbols nor shared."""
        signature = self.spec.signature
        allowed = set(constants)
        out = []
        for symbol in function_symbols(interpolant):
            if signature.is_extension(symbol) and symbol not in functions:
                out.append(symbol)
        for constant in constants_of(interpolant):
            if isinstance(constant, Const) and constant not in allowed:
                out.append(str(constant))
        return out

    def verify_interpolant(self, A: Sequence[Clause], B: Sequence[Clause], I: Formula) -> Tuple[bool, bool]:
        """
        Checks A ∧ ¬I and B ∧ I for unsatisfiability, one case of the
        formula at a time.
        """
        return self._refutes(A, negation(I)), self._refutes(B, I)

    def _refutes(self, clauses, formula) -> bool:
        clauses = list(clauses)
        if formula == FALSE:
            return True
        for branch in self.solver.branches(formula):
            units = [Clause((lit,)) for lit in branch]
            if self.reducer.decide_sat_extension(clauses + units) is Verdict.SAT:
                self.logger.debug("Counterexample branch: %s", [str(lit) for lit in branch])
                return False
        return True


def compute_interpolant(spec: TheorySpec, A, B, W: Optional[AmalgClosure] = None, **kwargs) -> InterpolantReport:
    return Interpolator(spec).compute_interpolant(A, B, W, **kwargs)


def separate_instantiate(spec: TheorySpec, A, B, W: AmalgClosure):
    return Interpolator(spec).separate_instantiate(A, B, W)


def verify_interpolant(spec: TheorySpec, A, B, I: Formula) -> Tuple[bool, bool]:
    return Interpolator(spec).verify_interpolant(A, B, I)
