"""
Symbol elimination: from a ground goal over a theory extension, compute a
formula over the parameters (Γ2) and the universal constraint ∀y ¬Γ2(y)
that makes the goal unsatisfiable.

The pipeline reduces the goal to the base theory, turns every constant
that is neither a parameter value nor a parameter argument into an
existential variable, eliminates those variables in the base theory (or its
model completion), and substitutes the parameter terms back.
"""

import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence

from hierax.base_theories import (
    DEFAULT_DISJUNCT_CAP,
    BaseTheoryId,
    BaseTheorySolver,
    Verdict,
    qe_theory_for,
)
from hierax.core import (
    FALSE,
    TRUE,
    App,
    Clause,
    Const,
    Formula,
    HieraxError,
    Quantified,
    Term,
    Var,
    clausify,
    clauses_formula,
    constants_of,
    function_symbols,
    iter_subterms,
    negation,
    replace_in_formula,
)
from hierax.locality import HierarchicalReducer, PurificationResult, TheorySpec


logger = logging.getLogger(__name__)


class SymbolContractViolation(HieraxError):
    """Raised when a synthesized constraint mentions a non-parameter symbol."""

    pass


@dataclass
class ConstantPartition:
    """
    Constants of a reduced problem split into parameter values (`c_f`),
    parameter arguments (`c_p`) and everything else (`c_rest`).
    """

    c_f: List[Term] = field(default_factory=list)
    c_p: List[Term] = field(default_factory=list)
    c_rest: List[Term] = field(default_factory=list)

    def all(self) -> List[Term]:
        return self.c_f + self.c_p + self.c_rest


@dataclass
class SymElimResult:
    """
    Everything the elimination pipeline produced.

    Attributes:
        gamma1_raw (Formula): Output of quantifier elimination.
        gamma1 (Formula): Simplified `gamma1_raw` over c_p and c_f.
        gamma2_raw (Formula): `gamma1` with c_f replaced by parameter terms.
        gamma2 (Formula): Simplified `gamma2_raw`.
        constraint (Formula): ∀y ¬Γ2(y); None until the last step ran.
        variables (list): The variables y standing for c_p.
        instance_set (dict): Level -> terms instantiated at that level.
        qe_theory (BaseTheoryId): The theory in which elimination ran.
        partition (ConstantPartition): The constant partition.
        reduced (list): The base-level clause set G1.
        purifications (list): One PurificationResult per level, top first.
        unsat_check (Verdict): Verdict of the goal with the constraint added.
        notes (list): Remarks for the report.
    """

    gamma1_raw: Formula = TRUE
    gamma1: Formula = TRUE
    gamma2_raw: Formula = TRUE
    gamma2: Formula = TRUE
    constraint: Optional[Formula] = None
    variables: List[Var] = field(default_factory=list)
    parameter_arguments: List[Term] = field(default_factory=list)
    instance_set: Dict[int, List[Term]] = field(default_factory=dict)
    qe_theory: Optional[BaseTheoryId] = None
    partition: ConstantPartition = field(default_factory=ConstantPartition)
    reduced: List[Clause] = field(default_factory=list)
    purifications: List[PurificationResult] = field(default_factory=list)
    unsat_check: Optional[Verdict] = None
    notes: List[str] = field(default_factory=list)

    def constraint_instances(self, tuples: Optional[Iterable[Sequence[Term]]] = None) -> List[Formula]:
        """
        Ground instances of the constraint body, by default over all tuples
        of the parameter arguments.
        """
        if self.constraint is None:
            raise ValueError("The constraint has not been computed")
        if not self.variables:
            return [self.constraint]
        body = self.constraint.body
        if tuples is None:
            tuples = itertools.product(self.parameter_arguments, repeat=len(self.variables))
        return [replace_in_formula(body, dict(zip(self.variables, values))) for values in tuples]


def merged_defs(purifications: Iterable[PurificationResult]) -> Dict[Const, Term]:
    """All definitions and argument names, in order of introduction."""
    out: Dict[Const, Term] = {}
    for result in purifications:
        out.update(result.argument_defs)
        out.update(result.defs)
    return out


def partition_constants(reduced, defs, params, kept_constants=None) -> ConstantPartition:
    """
    Splits the constants of a reduced problem.

    Args:
        reduced: Base-level ground clauses.
        defs (dict): Fresh constant -> defining term, in introduction order.
        params: Parameter symbol names.
        kept_constants: When given (interpolation), the free constants that
            may survive; a parameter definition only counts as a parameter
            value if all its arguments are kept.

    Returns:
        ConstantPartition: Deterministic given the order of `defs`.
    """
    params = set(params)
    kept = None if kept_constants is None else set(kept_constants)
    ordered = list(dict.fromkeys(constants_of(reduced) + list(defs)))

    values = {c for c in ordered if _is_param_constant(c, params)}
    candidates = [
        (c, t) for c, t in defs.items() if isinstance(t, App) and t.args and t.symbol in params
    ]
    changed = True
    while changed:
        changed = False
        for c, t in candidates:
            if c in values:
                continue
            if kept is None or all(a in kept or a in values for a in t.args):
                values.add(c)
                changed = True

    arguments = {}
    for c in ordered:
        if c in values and c in defs:
            for arg in defs[c].args:
                if _is_leaf(arg) and arg not in values:
                    arguments[arg] = None
    if kept is not None:
        values.update(c for c in ordered if c in kept and c not in arguments)
    ordered += [c for c in arguments if c not in ordered]
    return ConstantPartition(
        c_f=[c for c in ordered if c in values],
        c_p=[c for c in ordered if c in arguments],
        c_rest=[c for c in ordered if c not in values and c not in arguments],
    )


def _is_param_constant(term: Term, params) -> bool:
    return isinstance(term, App) and not term.args and term.symbol in params


def _is_leaf(term: Term) -> bool:
    return isinstance(term, Const) or (isinstance(term, App) and not term.args)


def _is_fresh(term: Term) -> bool:
    return isinstance(term, Const) and term.name.startswith("#")


class SymbolEliminator:
    """
    Runs the elimination pipeline for one `TheorySpec`.

    Attributes:
        spec (TheorySpec): The theory extension chain.
        reducer (HierarchicalReducer): Reduction to the base theory.
        solver (BaseTheorySolver): Elimination and simplification engine.
    """

    def __init__(self, spec: TheorySpec, disjunct_cap: int = DEFAULT_DISJUNCT_CAP, debug_checks: bool = False):
        self.spec = spec
        self.reducer = HierarchicalReducer(spec, disjunct_cap)
        self.solver = BaseTheorySolver(spec.base, disjunct_cap, debug_checks)
        self.logger = logging.getLogger(__name__)

    def steps_1_to_4(self, G: Sequence[Clause], T: Iterable[Term] = ()) -> SymElimResult:
        """
        Computes Γ2 for goal `G` with extra instance terms `T`.

        Workflow:
            1. Reduce `G` with the level axioms instantiated over est(K, G) ∪ T.
            2. Partition the constants; c_rest become existential variables.
            3. Eliminate them and simplify.
            4. Replace parameter values by their parameter terms and simplify.
        """
        self.logger.info("Symbol elimination over %s with %d goal clauses", self.spec.base, len(G))
        reduced, purifications = self.reducer.reduce_chain(G, T)
        result = self.eliminate(reduced, purifications, self.spec.params)
        result.instance_set = {p.level: list(p.instance_terms) for p in purifications}
        return result

    def eliminate(self, reduced, purifications, params, kept_constants=None) -> SymElimResult:
        """Steps 2 to 4 on an already reduced problem."""
        result = SymElimResult(
            reduced=list(reduced),
            purifications=list(purifications),
            qe_theory=qe_theory_for(self.spec.base),
        )
        if result.qe_theory is not self.spec.base:
            result.notes.append(
                "Elimination ran in {}, the model completion of {}.".format(result.qe_theory, self.spec.base)
            )
        if any(p.links for p in purifications):
            result.notes.append("Non-constant extension arguments were named by link equations.")
        defs = merged_defs(purifications)
        partition = partition_constants(reduced, defs, params, kept_constants)
        result.partition = partition
        self.logger.debug(
            "Partition c_f=%s c_p=%s c_rest=%s",
            [str(c) for c in partition.c_f],
            [str(c) for c in partition.c_p],
            [str(c) for c in partition.c_rest],
        )

        variables = [Var("z{}".format(i)) for i in range(1, len(partition.c_rest) + 1)]
        matrix = replace_in_formula(clauses_formula(reduced), dict(zip(partition.c_rest, variables)))
        problem = Quantified("exists", tuple(variables), matrix) if variables else matrix
        result.gamma1_raw = self.solver.qe(problem)
        result.gamma1 = self.solver.simplify(result.gamma1_raw)

        mapping = self._back_substitution(partition, defs, params)
        result.gamma2_raw = replace_in_formula(result.gamma1, mapping)
        result.gamma2 = self.solver.simplify(result.gamma2_raw)
        leftovers = [c for c in constants_of(result.gamma2) if _is_fresh(c)]
        if leftovers:
            result.notes.append(
                "Parameter arguments {} name non-parameter terms and stay abstract.".format(
                    ", ".join(str(c) for c in leftovers)
                )
            )
        self.logger.info("Γ2 = %s", result.gamma2)
        return result

    def _back_substitution(self, partition, defs, params) -> Dict[Term, Term]:
        """
        Maps parameter values, and fresh parameter arguments whose names
        expand to parameter terms, to what they stand for. Nested
        definitions are expanded innermost first.
        """
        params = set(params)
        allowed = set(partition.c_f) | set(partition.c_p)
        values = [c for c in reversed(list(defs)) if c in partition.c_f]
        named_arguments = [c for c in partition.c_p if _is_fresh(c) and c in defs]

        def expand(term, keys):
            if term in keys:
                return expand(defs[term], keys)
            if isinstance(term, App) and term.args:
                return App(term.symbol, tuple(expand(a, keys) for a in term.args))
            return term

        every = set(values) | set(named_arguments)
        accepted = [
            c for c in named_arguments if self._parameter_term(expand(defs[c], every), params, allowed)
        ]
        keys = set(values) | set(accepted)
        return {c: expand(defs[c], keys) for c in values + accepted}

    def _parameter_term(self, term, params, allowed) -> bool:
        signature = self.spec.signature
        for sub in iter_subterms(term):
            if isinstance(sub, App):
                if signature.is_extension(sub.symbol) and sub.symbol not in params:
                    return False
            elif isinstance(sub, Const) and (_is_fresh(sub) or sub not in allowed):
                return False
        return True

    def symbol_eliminate(self, G: Sequence[Clause], T: Iterable[Term] = (), verify: bool = True) -> SymElimResult:
        """
        Computes the universal constraint ∀y ¬Γ2(y) and, if `verify`, checks
        that the goal becomes unsatisfiable once the constraint holds.

        Raises:
            SymbolContractViolation: If the constraint mentions symbols
                other than base symbols and parameters.
        """
        G = list(G)
        result = self.steps_1_to_4(G, T)
        abstract = [c for c in result.partition.c_p if c in constants_of(result.gamma2)]
        abstract += [
            c for c in constants_of(result.gamma2) if _is_fresh(c) and c not in abstract
        ]
        variables = [Var("y{}".format(i)) for i in range(1, len(abstract) + 1)]
        body = negation(replace_in_formula(result.gamma2, dict(zip(abstract, variables))))
        result.variables = variables
        result.parameter_arguments = abstract
        if result.gamma2 == FALSE:
            result.constraint = TRUE
            result.notes.append("The goal is already unsatisfiable; no constraint is needed.")
        elif variables:
            result.constraint = Quantified("forall", tuple(variables), body)
        else:
            result.constraint = body
        self._check_contract(result.constraint)
        if verify:
            result.unsat_check = self.verify_constraint(G, result)
        return result

    def _check_contract(self, constraint: Formula):
        signature = self.spec.signature
        for symbol in function_symbols(constraint):
            if signature.level_of(symbol) == 0:
                continue
            if symbol not in signature.params:
                self.logger.error("Constraint mentions '%s'", symbol)
                raise SymbolContractViolation(
                    "Constraint mentions the non-parameter symbol '{}'".format(symbol)
                )
        for constant in constants_of(constraint):
            if isinstance(constant, Const):
                raise SymbolContractViolation(
                    "Constraint mentions the constant '{}'".format(constant)
                )

    def verify_constraint(self, G: Sequence[Clause], result: SymElimResult) -> Verdict:
        """
        Instantiates the constraint over all tuples of parameter arguments,
        adds the instances to the goal and decides the result.
        """
        extra: List[Clause] = []
        for instance in result.constraint_instances():
            extra.extend(clausify(instance))
        verdict = self.reducer.decide_sat_extension(list(G) + extra)
        if verdict is Verdict.SAT:
            self.logger.error("Goal stays satisfiable under the synthesized constraint")
        return verdict


def steps_1_to_4(spec: TheorySpec, G: Sequence[Clause], T: Iterable[Term] = ()) -> SymElimResult:
    return SymbolEliminator(spec).steps_1_to_4(G, T)


def symbol_eliminate(spec: TheorySpec, G: Sequence[Clause], T: Iterable[Term] = ()) -> SymElimResult:
    return SymbolEliminator(spec).symbol_eliminate(G, T)
