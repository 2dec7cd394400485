import logging
from typing import Iterable, Optional, Sequence

from hierax.base_theories import DEFAULT_DISJUNCT_CAP, BaseTheorySolver, Verdict, finite_order_oracle
from hierax.core import Clause, HieraxError, Term, clausify
from hierax.interpolation import AmalgClosure, InterpolantReport, InterpolationProblem, Interpolator
from hierax.locality import HierarchicalReducer, search_model
from hierax.problem_handler import ProblemError, parse_problem
from hierax.report import ReportManager, StepRecord
from hierax.symelim import SymbolEliminator, SymElimResult

ORACLE_ATOM_LIMIT = 6  # Largest number of base atoms handed to the chain oracle


class OracleDisagreement(HieraxError):
    """
    Raised when a brute-force oracle contradicts the verdict of the
    hierarchical procedure.
    """

    pass


class Hierax:
    """
    Runs the tasks of one problem file: ground satisfiability, symbol
    elimination and interpolation.

    Attributes:
        problem (ProblemFile): The parsed problem.
        spec (TheorySpec): Its theory extension chain.
        disjunct_cap (int): Cap on case splits and disjuncts.
        debug_checks (bool): Re-check simplification results by entailment.
        trace_level (int): Trace detail of the reports (0, 1 or 2).
        oracle (bool): Cross-check results by bounded model search.
        oracle_bound (int): Largest domain tried by the model search.
        last_formula (Formula): Constraint or interpolant of the last task, if any.
    """

    def __init__(
        self,
        problem,
        disjunct_cap: int = DEFAULT_DISJUNCT_CAP,
        debug_checks: bool = False,
        trace_level: int = 0,
        oracle: bool = False,
        oracle_bound: int = 4,
        problem_name: Optional[str] = None,
    ):
        """
        Args:
            problem (ProblemFile or str): A parsed problem or problem-file text.
            problem_name (str, optional): Shown in reports.
        """
        self.logger = logging.getLogger(__name__)
        self.problem = parse_problem(problem) if isinstance(problem, str) else problem
        self.spec = self.problem.to_theory_spec()
        self.disjunct_cap = disjunct_cap
        self.debug_checks = debug_checks
        self.trace_level = trace_level
        self.oracle = oracle
        self.oracle_bound = oracle_bound
        self.problem_name = problem_name
        self.last_formula = None
        self.logger.info("Loaded problem over %s with %d levels", self.spec.base, self.spec.depth)

    def _report(self, task: str) -> ReportManager:
        self.spec.signature.reset_fresh()
        return ReportManager(task, self.spec.base, self.trace_level, self.problem_name)

    def _require(self, clauses, what: str):
        if not clauses:
            self.logger.error("The problem has no %s", what)
            raise ProblemError(f"The problem has no {what}")

    # -- sat -------------------------------------------------------------------

    def check_sat(
        self, goals: Optional[Sequence[Clause]] = None, seed_terms: Optional[Iterable[Term]] = None
    ) -> ReportManager:
        """
        Decides the goal clauses over the extension chain.

        The report passes when the goal is unsatisfiable. An empty goal is
        satisfiable.

        Args:
            goals: Goal clauses; defaults to the goal of the problem file.
            seed_terms: Extra instance terms; default to the seed terms of
                the problem file.
        """
        goals = list(self.problem.goals if goals is None else goals)
        seed_terms = list(self.problem.seed_terms if seed_terms is None else seed_terms)
        report = self._report("sat")
        if not goals:
            self.logger.info("Empty goal; nothing to refute")
            report.verdict = Verdict.SAT
            report.passed = False
            report.add_notes(["The goal is empty and therefore satisfiable."])
            return report
        reducer = HierarchicalReducer(self.spec, self.disjunct_cap)
        reduced, purifications = reducer.reduce_chain(goals, seed_terms)
        report.add_purifications(purifications)
        report.add_step(
            StepRecord(
                "base check",
                f"{len(reduced)} clauses over {self.spec.base}",
                details={"reduced": [str(c) for c in reduced]},
            )
        )

        self.logger.warning("Verdict relies on the declared locality of the extension chain.")
        report.add_notes(["Locality of every level is assumed, not proved."])
        report.verdict = BaseTheorySolver(self.spec.base, self.disjunct_cap).decide_ground_sat(reduced)
        report.passed = report.verdict is Verdict.UNSAT
        if self.oracle:
            self._oracle_sat(report, goals, reduced)
        self.logger.info("Verdict: %s", report.verdict)
        return report

    def _oracle_sat(self, report: ReportManager, goals, reduced):
        if self.spec.base.is_order:
            atoms = {t for c in reduced for lit in c.literals for t in lit.terms}
            if len(atoms) <= ORACLE_ATOM_LIMIT:
                chain = finite_order_oracle(reduced)
                report.checks["chain oracle"] = str(chain)
                if chain is not report.verdict:
                    self.logger.error("Chain oracle says %s, procedure says %s", chain, report.verdict)
                    raise OracleDisagreement(f"Chain oracle says {chain}, procedure says {report.verdict}")
        found = search_model(self.spec, goals, self.oracle_bound)
        report.checks["model search"] = None if found.verdict is None else str(found.verdict)
        if found.verdict is Verdict.SAT and report.verdict is Verdict.UNSAT:
            self.logger.error("Model search found a model of an unsatisfiable goal")
            raise OracleDisagreement(f"A model with {found.bound} elements satisfies the goal")
        if found.verdict is Verdict.UNSAT and report.verdict is Verdict.SAT:
            self.logger.warning("No model with at most %d elements; inconclusive.", self.oracle_bound)
            report.add_notes([f"No model with at most {self.oracle_bound} elements was found."])

    # -- symbol elimination ----------------------------------------------------

    def eliminate_symbols(self, seed_terms: Optional[Iterable[Term]] = None) -> ReportManager:
        """
        Synthesizes the parameter constraint for the goal.

        The report passes when the goal is unsatisfiable under the
        constraint.
        """
        goals = list(self.problem.goals)
        self._require(goals, "goal")
        seed_terms = list(self.problem.seed_terms if seed_terms is None else seed_terms)
        report = self._report("symelim")
        eliminator = SymbolEliminator(self.spec, self.disjunct_cap, self.debug_checks)
        result = eliminator.symbol_eliminate(goals, seed_terms)
        self._elimination_steps(report, result)
        report.add_step(
            StepRecord(
                "constraint",
                f"{len(result.variables)} universally quantified variables",
                sets={"parameter arguments": [str(c) for c in result.parameter_arguments]},
            )
        )
        self.last_formula = result.constraint
        report.set_result("constraint", result.constraint)
        report.verdict = result.unsat_check
        report.checks["goal unsat under constraint"] = result.unsat_check is Verdict.UNSAT
        report.passed = result.unsat_check is Verdict.UNSAT
        if self.oracle:
            extra = [c for inst in result.constraint_instances() for c in clausify(inst)]
            self._oracle_refutes(report, goals + extra)
        return report

    def _elimination_steps(self, report: ReportManager, result: SymElimResult):
        report.qe_theory = result.qe_theory
        report.add_purifications(result.purifications)
        partition = result.partition
        report.add_step(
            StepRecord(
                "partition",
                f"{len(partition.c_rest)} constants eliminated",
                sets={
                    "c_f": [str(c) for c in partition.c_f],
                    "c_p": [str(c) for c in partition.c_p],
                    "c_rest": [str(c) for c in partition.c_rest],
                },
                details={"G1": [str(c) for c in result.reduced]},
            )
        )
        report.add_step(
            StepRecord(
                "elimination",
                f"quantifier elimination in {result.qe_theory}",
                sets={"Γ1": [str(result.gamma1)], "Γ2": [str(result.gamma2)]},
                details={"Γ1 (raw)": [str(result.gamma1_raw)], "Γ2 (raw)": [str(result.gamma2_raw)]},
            )
        )
        report.add_notes(result.notes)

    def _oracle_refutes(self, report: ReportManager, clauses):
        found = search_model(self.spec, clauses, self.oracle_bound)
        report.checks["model search"] = None if found.verdict is None else str(found.verdict)
        if found.verdict is Verdict.SAT:
            self.logger.error("Model search found a model the procedure rules out")
            raise OracleDisagreement(f"A model with {found.bound} elements contradicts the result")

    # -- interpolation ---------------------------------------------------------

    def interpolate(self, side: str = "a", closure: Optional[AmalgClosure] = None) -> ReportManager:
        """
        Computes and verifies an interpolant of goalA and goalB.

        The report passes when both entailment checks and the shared-symbol
        audit pass.
        """
        self._require(self.problem.goal_a, "goalA")
        self._require(self.problem.goal_b, "goalB")
        report = self._report("interpolate")
        interpolator = Interpolator(self.spec, self.disjunct_cap, self.debug_checks)
        task = InterpolationProblem(
            self.spec,
            list(self.problem.goal_a),
            list(self.problem.goal_b),
            closure=closure or self.problem.closure,
            shared=self.problem.params or None,
            side=side,
        )
        outcome: InterpolantReport = interpolator.solve(task)
        S_A, S_B = outcome.separated
        report.add_step(
            StepRecord(
                "separation",
                f"closure {outcome.closure!r}",
                sets={
                    "shared functions": list(outcome.shared_functions),
                    "shared constants": [str(c) for c in outcome.shared_constants],
                },
                details={"S_A": [str(c) for c in S_A], "S_B": [str(c) for c in S_B]},
            )
        )
        self._elimination_steps(report, outcome.elimination)
        report.add_notes(outcome.notes)
        self.last_formula = outcome.interpolant
        report.set_result("interpolant", outcome.interpolant)
        report.checks["A entails I"] = outcome.a_entails
        report.checks["B and I unsat"] = outcome.b_refutes
        report.checks["shared-symbol audit"] = not outcome.audit
        report.checks["separated sets unsat"] = outcome.separable
        report.passed = outcome.verified
        if self.oracle:
            self._oracle_refutes(report, list(self.problem.goal_a) + list(self.problem.goal_b))
        return report

    def run(self, task: Optional[str] = None, **kwargs) -> ReportManager:
        """Dispatches to the task named by `task` or by the problem file."""
        task = task or self.problem.task
        if task == "sat":
            return self.check_sat(seed_terms=kwargs.get("seed_terms"))
        if task == "symelim":
            return self.eliminate_symbols(kwargs.get("seed_terms"))
        if task == "interpolate":
            return self.interpolate(kwargs.get("side", "a"))
        raise ProblemError(f"No task given; expected one of sat, symelim, interpolate (got {task!r})")
