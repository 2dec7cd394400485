"""
Hierarchical reasoning in (chains of) local theory extensions.

A level's axioms K are instantiated over a closed set of ground extension
terms, the result is flattened and purified (extension terms named by
fresh constants, recorded in Def), congruence instances Con0 are added,
and the level's symbols are gone. Folding this from the top level down
leaves a ground problem for the base theory.
"""

import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from hierax.base_theories import (
    DEFAULT_DISJUNCT_CAP,
    BaseTheoryId,
    BaseTheorySolver,
    Verdict,
    make_signature,
)
from hierax.core import (
    App,
    Clause,
    Const,
    HieraxError,
    Literal,
    Num,
    Signature,
    Term,
    Var,
    apply_subst,
    check_flat_linear,
    est_terms,
    function_symbols,
    is_constant_leaf,
    is_ground,
    iter_subterms,
)


logger = logging.getLogger(__name__)


class NonGroundInstance(HieraxError, ValueError):
    """
    Raised when a variable of an axiom does not occur below an extension
    function of its level, so instantiation could not make it ground.
    """

    pass


class LevelViolation(HieraxError, ValueError):
    """Raised when an axiom mentions a symbol of a higher level than its own."""

    pass


# ---------------------------------------------------------------------------
# Closure operators
# ---------------------------------------------------------------------------


class ClosureOperator:
    """A named policy turning ground extension terms into an instance set."""

    name = "abstract"

    def apply(self, K: Sequence[Clause], terms: Iterable[Term], level: int, signature: Signature) -> List[Term]:
        raise NotImplementedError

    def __eq__(self, other):
        return type(self) is type(other)

    def __hash__(self):
        return hash(self.name)

    def __repr__(self):
        return "{}()".format(type(self).__name__)


class IdentityClosure(ClosureOperator):
    """
    The default closure: the extension terms of K together with every
    level-rooted ground subterm of the given terms.
    """

    name = "identity"

    def apply(self, K, terms, level, signature):
        found = dict.fromkeys(est_terms(K, [], level, signature))
        for term in terms:
            for sub in iter_subterms(term):
                if is_ground(sub) and signature.is_extension_term(sub, level):
                    found[sub] = None
        return list(found)


CLOSURE_CATALOG = {IdentityClosure.name: IdentityClosure}


def closure_by_name(name: str) -> ClosureOperator:
    try:
        return CLOSURE_CATALOG[name]()
    except KeyError:
        raise ValueError(
            "Unknown closure '{}'; available: {}".format(name, sorted(CLOSURE_CATALOG))
        )


# ---------------------------------------------------------------------------
# Theory specifications
# ---------------------------------------------------------------------------


@dataclass
class ExtensionLevel:
    index: int
    functions: Dict[str, int]
    axioms: List[Clause] = field(default_factory=list)
    closure: ClosureOperator = field(default_factory=IdentityClosure)


class TheorySpec:
    """
    A base theory together with an ordered chain of extension levels.

    Attributes:
        base (BaseTheoryId): The base theory.
        signature (Signature): Symbols of every level, parameters included.
        levels (list): `ExtensionLevel` entries, level 1 first.
    """

    def __init__(self, base, signature: Signature, levels: Sequence[ExtensionLevel]):
        self.logger = logging.getLogger(__name__)
        self.base = BaseTheoryId.parse(base)
        self.signature = signature
        self.levels = list(levels)
        self._validate()

    @classmethod
    def build(cls, base, levels: Sequence[Tuple[Dict[str, int], Sequence[Clause]]], params=(), free_constants=()):
        """
        Builds a spec from `(functions, axioms)` pairs, level 1 first.

        Example:
            >>> spec = TheorySpec.build("DLO", [({"f": 1}, [])], params=["f"])
            >>> spec.depth
            1
        """
        signature = make_signature(
            base, [dict(functions) for functions, _ in levels], params, free_constants
        )
        entries = [
            ExtensionLevel(index, dict(functions), list(axioms))
            for index, (functions, axioms) in enumerate(levels, start=1)
        ]
        return cls(base, signature, entries)

    def _validate(self):
        for level in self.levels:
            symbols = set(level.functions)
            for clause in level.axioms:
                mentioned = function_symbols(clause)
                for symbol in mentioned:
                    found = self.signature.level_of(symbol)
                    if found is not None and found > level.index:
                        self.logger.error("Axiom %s at level %d uses '%s'", clause, level.index, symbol)
                        raise LevelViolation(
                            "Axiom {} at level {} uses '{}' from level {}".format(
                                clause, level.index, symbol, found
                            )
                        )
                if not symbols.intersection(mentioned):
                    raise LevelViolation(
                        "Axiom {} mentions no symbol of level {}".format(clause, level.index)
                    )
            report = check_flat_linear(level.axioms, level.index, self.signature)
            for shape in report.shapes:
                if not shape.variables_covered:
                    self.logger.error("Uncovered variable in %s", shape.clause)
                    raise NonGroundInstance(
                        "A variable of {} does not occur below a level-{} function".format(
                            shape.clause, level.index
                        )
                    )

    @property
    def depth(self) -> int:
        return len(self.levels)

    @property
    def params(self):
        return self.signature.params

    def level(self, index: int) -> ExtensionLevel:
        self.signature.level_symbols(index)
        return self.levels[index - 1]

    def axioms(self, index: int) -> List[Clause]:
        return self.level(index).axioms

    def all_axioms(self) -> List[Clause]:
        return [c for level in self.levels for c in level.axioms]

    def with_params(self, params) -> "TheorySpec":
        return TheorySpec(self.base, self.signature.with_params(params), self.levels)


# ---------------------------------------------------------------------------
# Instantiation
# ---------------------------------------------------------------------------


def _match(pattern: Term, term: Term, sigma: Dict[Var, Term]) -> Optional[Dict[Var, Term]]:
    if isinstance(pattern, Var):
        bound = sigma.get(pattern)
        if bound is None:
            extended = dict(sigma)
            extended[pattern] = term
            return extended
        return sigma if bound == term else None
    if isinstance(pattern, App):
        if not isinstance(term, App) or term.symbol != pattern.symbol or len(term.args) != len(pattern.args):
            return None
        for p_arg, t_arg in zip(pattern.args, term.args):
            sigma = _match(p_arg, t_arg, sigma)
            if sigma is None:
                return None
        return sigma
    return sigma if pattern == term else None


def instantiate(K: Iterable[Clause], T: Iterable[Term], level: int, signature: Signature) -> List[Clause]:
    """
    Computes K[T]: every instance of a clause of K in which each
    level-rooted term occurrence belongs to T.

    Substitutions are found by matching every non-ground occurrence against
    the terms of T with the same root and intersecting the assignments.

    Raises:
        NonGroundInstance: If some variable is not below a level function.
    """
    symbols = signature.level_symbols(level)
    by_root: Dict[str, List[Term]] = {}
    for term in T:
        if isinstance(term, App) and term.symbol in symbols:
            by_root.setdefault(term.symbol, []).append(term)
    out: Dict[Clause, None] = {}
    for clause in K:
        occurrences = []
        for literal in clause.literals:
            for term in literal.terms:
                for sub in iter_subterms(term):
                    if isinstance(sub, App) and sub.args and sub.symbol in symbols and not is_ground(sub):
                        occurrences.append(sub)
        occurrences = list(dict.fromkeys(occurrences))
        covered = {v for occ in occurrences for v in iter_subterms(occ) if isinstance(v, Var)}
        missing = [v for v in clause.variables() if v not in covered]
        if missing:
            logger.error("Variables %s of %s are not below level-%d functions", missing, clause, level)
            raise NonGroundInstance(
                "Variable {} of {} would stay free".format(missing[0].name, clause)
            )
        for sigma in _assignments(occurrences, by_root, {}):
            out[apply_subst(clause, sigma)] = None
    logger.debug("K[T] at level %d: %d instances over %d terms", level, len(out), sum(map(len, by_root.values())))
    return list(out)


def _assignments(occurrences, by_root, sigma):
    if not occurrences:
        yield sigma
        return
    head, rest = occurrences[0], occurrences[1:]
    for candidate in by_root.get(head.symbol, ()):
        extended = _match(head, candidate, sigma)
        if extended is not None:
            yield from _assignments(rest, by_root, extended)


# ---------------------------------------------------------------------------
# Purification
# ---------------------------------------------------------------------------


@dataclass
class PurificationResult:
    """
    Outcome of flattening and purifying one level.

    Attributes:
        level (int): The purified level.
        k0 (list): Purified axiom instances.
        g0 (list): Purified goal clauses.
        defs (dict): Fresh constant -> extension term with constant arguments.
        con0 (list): Congruence instances over `defs`.
        links (list): Unit equations naming non-constant arguments.
        argument_defs (dict): Fresh constant -> the argument it names.
        instance_terms (list): The instance set used for K[T].
        instances (list): K[T] before purification.
    """

    level: int
    k0: List[Clause] = field(default_factory=list)
    g0: List[Clause] = field(default_factory=list)
    defs: Dict[Const, App] = field(default_factory=dict)
    con0: List[Clause] = field(default_factory=list)
    links: List[Clause] = field(default_factory=list)
    argument_defs: Dict[Const, Term] = field(default_factory=dict)
    instance_terms: List[Term] = field(default_factory=list)
    instances: List[Clause] = field(default_factory=list)

    @property
    def purified(self) -> List[Clause]:
        return list(dict.fromkeys(self.k0 + self.g0))

    def clauses(self) -> List[Clause]:
        """K0 ∪ G0, link equations and Con0, without duplicates."""
        return list(dict.fromkeys(self.k0 + self.g0 + self.links + self.con0))

    def trivial_con0(self) -> List[Clause]:
        return [c for c in self.con0 if is_trivial_congruence(c)]

    def unpurify(self) -> List[Clause]:
        """Replaces fresh constants by what they name and drops Con0 and links."""
        mapping: Dict[Term, Term] = dict(self.defs)
        mapping.update(self.argument_defs)

        def expand(term):
            if term in mapping:
                return expand(mapping[term])
            if isinstance(term, App) and term.args:
                return App(term.symbol, tuple(expand(a) for a in term.args))
            return term

        restored = []
        for clause in self.k0 + self.g0:
            restored.append(
                Clause(
                    tuple(
                        Literal(lit.predicate, expand(lit.left), expand(lit.right), lit.positive)
                        for lit in clause.literals
                    )
                )
            )
        return list(dict.fromkeys(restored))


def is_trivial_congruence(clause: Clause) -> bool:
    """A congruence instance whose premises and conclusion are reflexive."""
    return all(lit.left == lit.right for lit in clause.literals)


def _simple_argument(term: Term) -> bool:
    return is_constant_leaf(term) or isinstance(term, Num)


def flatten_purify(
    clauses: Iterable[Clause],
    level: int,
    signature: Signature,
    axiom_instances: Iterable[Clause] = (),
) -> PurificationResult:
    """
    Replaces, bottom-up, every term rooted at a level function of positive
    arity by a fresh constant. Identical terms share one constant.
    Non-constant arguments are first named by a fresh constant with a link
    equation `e = t`, so every definition has constant arguments.

    Args:
        clauses: Ground goal clauses (purified into `g0`).
        level (int): The level whose symbols are removed.
        signature (Signature): Source of fresh names.
        axiom_instances: Ground axiom instances (purified into `k0`).

    Returns:
        PurificationResult: The purified sets, `defs` and `con0`.
    """
    symbols = signature.level_symbols(level)
    result = PurificationResult(level=level)
    named: Dict[App, Const] = {}
    arguments: Dict[Term, Const] = {}

    def name_argument(term):
        found = arguments.get(term)
        if found is None:
            found = signature.fresh_constant()
            arguments[term] = found
            result.argument_defs[found] = term
            result.links.append(Clause((Literal("=", found, term),)))
        return found

    def purify(term):
        if not isinstance(term, App) or not term.args:
            return term
        args = tuple(purify(a) for a in term.args)
        if term.symbol not in symbols:
            return App(term.symbol, args)
        flat = App(
            term.symbol,
            tuple(a if _simple_argument(a) else name_argument(a) for a in args),
        )
        found = named.get(flat)
        if found is None:
            found = signature.fresh_constant()
            named[flat] = found
            result.defs[found] = flat
        return found

    def purify_clause(clause):
        return Clause(
            tuple(
                Literal(lit.predicate, purify(lit.left), purify(lit.right), lit.positive)
                for lit in clause.literals
            )
        )

    result.k0 = list(dict.fromkeys(purify_clause(c) for c in axiom_instances))
    result.g0 = list(dict.fromkeys(purify_clause(c) for c in clauses))
    result.con0 = congruence_instances(result.defs)
    if result.links:
        logger.info(
            "Level %d: %d non-constant arguments named by link equations",
            level,
            len(result.links),
        )
    return result


def congruence_instances(defs: Dict[Const, App]) -> List[Clause]:
    """
    One congruence instance per unordered pair of definitions with the same
    root, the diagonal included.

    Example:
        >>> a, a1 = Const("a"), Const("a1")
        >>> [str(c) for c in congruence_instances({a1: App("g", (a,))})]
        ['(or (distinct a a) (= a1 a1))']
    """
    items = list(defs.items())
    out = []
    for i, (c, t) in enumerate(items):
        if not t.args:
            continue
        for d, s in items[i:]:
            if s.symbol != t.symbol:
                continue
            premises = [Literal("=", x, y, False) for x, y in zip(t.args, s.args)]
            out.append(Clause(tuple(premises + [Literal("=", c, d)])))
    return out


# ---------------------------------------------------------------------------
# Hierarchical reduction
# ---------------------------------------------------------------------------


class HierarchicalReducer:
    """
    Reduces ground problems over a `TheorySpec` to its base theory.

    Attributes:
        spec (TheorySpec): The theory extension chain.
        solver (BaseTheorySolver): Engine for the base checks.
    """

    def __init__(self, spec: TheorySpec, disjunct_cap: int = DEFAULT_DISJUNCT_CAP):
        self.spec = spec
        self.solver = BaseTheorySolver(spec.base, disjunct_cap)
        self.logger = logging.getLogger(__name__)

    def instance_terms(self, level: int, G: Sequence[Clause], seed_terms: Iterable[Term] = ()) -> List[Term]:
        ext = self.spec.level(level)
        terms = est_terms(ext.axioms, G, level, self.spec.signature)
        terms += [t for t in seed_terms if t not in terms]
        return ext.closure.apply(ext.axioms, terms, level, self.spec.signature)

    def reduce_step(
        self, level: int, G: Sequence[Clause], seed_terms: Iterable[Term] = (), instantiate_axioms: bool = True
    ):
        """
        Removes the symbols of `level`.

        Returns:
            tuple: (K0 ∪ G0 ∪ links ∪ Con0, PurificationResult)
        """
        G = list(G)
        self.logger.info("Reducing level %d (%d clauses)", level, len(G))
        terms, instances = [], []
        if instantiate_axioms:
            terms = self.instance_terms(level, G, seed_terms)
            instances = instantiate(self.spec.axioms(level), terms, level, self.spec.signature)
        result = flatten_purify(G, level, self.spec.signature, instances)
        result.instance_terms = terms
        result.instances = instances
        self.logger.debug("Level %d defs: %s", level, {str(k): str(v) for k, v in result.defs.items()})
        self.logger.debug("Level %d Con0: %s", level, [str(c) for c in result.con0])
        return result.clauses(), result

    def reduce_chain(self, G: Sequence[Clause], seed_terms: Iterable[Term] = (), instantiate_axioms: bool = True):
        """
        Folds `reduce_step` from the top level down to the base.

        Returns:
            tuple: (base clauses, list of PurificationResult, top level first)
        """
        seed_terms = list(seed_terms)
        current = list(G)
        results = []
        for level in range(self.spec.depth, 0, -1):
            current, result = self.reduce_step(level, current, seed_terms, instantiate_axioms)
            results.append(result)
        return current, results

    def decide_sat_extension(self, G: Sequence[Clause]) -> Verdict:
        reduced, _ = self.reduce_chain(G)
        self.logger.warning("Verdict relies on the declared locality of the extension chain.")
        return self.solver.decide_ground_sat(reduced)


def reduce_step(spec: TheorySpec, level: int, G: Sequence[Clause], seed_terms: Iterable[Term] = ()):
    return HierarchicalReducer(spec).reduce_step(level, G, seed_terms)


def reduce_chain(spec: TheorySpec, G: Sequence[Clause], seed_terms: Iterable[Term] = ()):
    return HierarchicalReducer(spec).reduce_chain(G, seed_terms)


def decide_sat_extension(spec: TheorySpec, G: Sequence[Clause], disjunct_cap: int = DEFAULT_DISJUNCT_CAP) -> Verdict:
    return HierarchicalReducer(spec, disjunct_cap).decide_sat_extension(G)


# ---------------------------------------------------------------------------
# Bounded model search
# ---------------------------------------------------------------------------


@dataclass
class OracleResult:
    """
    Result of the bounded model search.

    `verdict` is SAT when a model was found and UNSAT when no model with at
    most `bound` elements exists; it is None when the base is not supported.
    """

    verdict: Optional[Verdict]
    bound: int
    model: Dict[Tuple, int] = field(default_factory=dict)


class _Unknown(Exception):
    def __init__(self, cell):
        super().__init__(cell)
        self.cell = cell


def _value(term, env, assignment):
    if isinstance(term, Var):
        return env[term]
    if isinstance(term, (Const, App)):
        args = tuple(_value(a, env, assignment) for a in getattr(term, "args", ()))
        name = term.name if isinstance(term, Const) else term.symbol
        cell = (name, args)
        if cell not in assignment:
            raise _Unknown(cell)
        return assignment[cell]
    raise TypeError("Terms of {} are not supported by the model search".format(type(term).__name__))


def _clause_status(clause, env, assignment):
    pending = None
    for lit in clause.literals:
        try:
            left = _value(lit.left, env, assignment)
            right = _value(lit.right, env, assignment)
        except _Unknown as unknown:
            pending = pending or unknown.cell
            continue
        if lit.predicate == "=":
            holds = left == right
        elif lit.predicate == "<=":
            holds = left <= right
        else:
            holds = left < right
        if holds == lit.positive:
            return True, None
    if pending is None:
        return False, None
    return None, pending


def search_model(spec: TheorySpec, G: Sequence[Clause], bound: int = 4) -> OracleResult:
    """
    Looks for a model of the extension chain and `G` whose domain is a
    chain `0 < 1 < ... < n-1` with n up to `bound`. Function tables and
    constant values are assigned lazily, only when a constraint needs them.
    """
    if spec.base is BaseTheoryId.LRA:
        logger.warning("Bounded model search does not cover linear arithmetic; skipped.")
        return OracleResult(None, bound)
    G = list(G)
    axioms = spec.all_axioms()
    for size in range(1, bound + 1):
        domain = range(size)
        constraints = [(c, {}) for c in G]
        for clause in axioms:
            variables = clause.variables()
            for values in itertools.product(domain, repeat=len(variables)):
                constraints.append((clause, dict(zip(variables, values))))
        model = _dfs(constraints, {}, domain)
        if model is not None:
            logger.debug("Model with %d elements: %s", size, model)
            return OracleResult(Verdict.SAT, size, model)
    return OracleResult(Verdict.UNSAT, bound)


def _dfs(constraints, assignment, domain):
    branch_cell = None
    for clause, env in constraints:
        status, cell = _clause_status(clause, env, assignment)
        if status is False:
            return None
        if status is None and branch_cell is None:
            branch_cell = cell
    if branch_cell is None:
        return dict(assignment)
    for value in domain:
        assignment[branch_cell] = value
        model = _dfs(constraints, assignment, domain)
        if model is not None:
            return model
        del assignment[branch_cell]
    return None
