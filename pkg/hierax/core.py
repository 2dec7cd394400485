import logging
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Tuple, Union


logger = logging.getLogger(__name__)


class HieraxError(Exception):
    """
    Base class for every error raised by the hierax library.
    """

    pass


class SignatureError(HieraxError, ValueError):
    """
    Raised when a signature is inconsistent (overlapping symbol sets,
    parameters outside the extension levels, unknown levels).
    """

    pass


# ---------------------------------------------------------------------------
# Terms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Var:
    """A variable leaf. Variables are only ever bound by clauses or quantifiers."""

    name: str
    _hash: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_hash", hash(("var", self.name)))

    def __hash__(self):
        return self._hash

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Const:
    """A free (uninterpreted, non-extension) constant, including fresh `#k` names."""

    name: str
    _hash: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_hash", hash(("const", self.name)))

    def __hash__(self):
        return self._hash

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Num:
    """An exact rational numeral (linear arithmetic only)."""

    value: Fraction
    _hash: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "value", Fraction(self.value))
        object.__setattr__(self, "_hash", hash(("num", self.value)))

    def __hash__(self):
        return self._hash

    def __str__(self):
        return format_fraction(self.value)


@dataclass(frozen=True)
class App:
    """
    An application of a function symbol to arguments.

    Declared extension constants (arity-0 extension symbols such as a
    constant parameter `c`) are represented as `App("c", ())`.
    """

    symbol: str
    args: Tuple["Term", ...] = ()
    _hash: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))
        object.__setattr__(self, "_hash", hash(("app", self.symbol, self.args)))

    def __hash__(self):
        return self._hash

    def __str__(self):
        if not self.args:
            return self.symbol
        return "({} {})".format(self.symbol, " ".join(str(a) for a in self.args))


Term = Union[Var, Const, Num, App]


def format_fraction(value: Fraction) -> str:
    """
    Renders a rational as `p` or `p/q`.

    Example:
        >>> format_fraction(Fraction(3, 2))
        '3/2'
        >>> format_fraction(Fraction(-4))
        '-4'
    """
    if value.denominator == 1:
        return str(value.numerator)
    return "{}/{}".format(value.numerator, value.denominator)


class TermBank:
    """
    Hash-consing table for terms.

    `intern` returns one canonical instance per structurally equal term so
    set membership during instantiation compares by identity first. The
    table is the only shared mutable state of the core and is guarded by a
    lock.
    """

    def __init__(self):
        self._table: Dict[Term, Term] = {}
        self._lock = threading.Lock()

    def intern(self, term: Term) -> Term:
        if isinstance(term, App) and term.args:
            term = App(term.symbol, tuple(self.intern(a) for a in term.args))
        with self._lock:
            return self._table.setdefault(term, term)

    def __len__(self):
        return len(self._table)


def is_ground(term: Term) -> bool:
    if isinstance(term, Var):
        return False
    if isinstance(term, App):
        return all(is_ground(a) for a in term.args)
    return True


def iter_subterms(term: Term) -> Iterator[Term]:
    """Yields the subterms of `term` bottom-up (arguments before the term)."""
    if isinstance(term, App):
        for arg in term.args:
            yield from iter_subterms(arg)
    yield term


def subterms(term: Term) -> List[Term]:
    """
    Returns all subterms of `term`, including `term` itself.

    The result is ordered bottom-up and free of duplicates.

    Example:
        >>> [str(t) for t in subterms(App("f", (Const("a"), Const("b"))))]
        ['a', 'b', '(f a b)']
    """
    return list(dict.fromkeys(iter_subterms(term)))


def term_variables(term: Term) -> List[Var]:
    return [t for t in dict.fromkeys(iter_subterms(term)) if isinstance(t, Var)]


def is_constant_leaf(term: Term) -> bool:
    """True for free constants and declared arity-0 extension symbols."""
    return isinstance(term, Const) or (isinstance(term, App) and not term.args)


# ---------------------------------------------------------------------------
# Literals, clauses, formulas
# ---------------------------------------------------------------------------

PREDICATES = ("=", "<=", "<")


@dataclass(frozen=True)
class Literal:
    """
    A binary literal `left predicate right` with a polarity.

    Only `=`, `<=` and `<` are stored; `>=` and `>` are turned around by the
    parser.
    """

    predicate: str
    left: Term
    right: Term
    positive: bool = True
    _hash: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.predicate not in PREDICATES:
            raise ValueError("Unknown predicate: {}".format(self.predicate))
        object.__setattr__(
            self,
            "_hash",
            hash(("lit", self.predicate, self.left, self.right, self.positive)),
        )

    def __hash__(self):
        return self._hash

    @property
    def terms(self) -> Tuple[Term, Term]:
        return (self.left, self.right)

    def negate(self) -> "Literal":
        return Literal(self.predicate, self.left, self.right, not self.positive)

    def atom(self) -> "Literal":
        return self if self.positive else self.negate()

    def __str__(self):
        text = "({} {} {})".format(self.predicate, self.left, self.right)
        if self.positive:
            return text
        if self.predicate == "=":
            return "(distinct {} {})".format(self.left, self.right)
        return "(not {})".format(text)


@dataclass(frozen=True)
class Clause:
    """A finite disjunction of literals; its variables are implicitly universal."""

    literals: Tuple[Literal, ...]

    def __post_init__(self):
        object.__setattr__(self, "literals", tuple(self.literals))

    def variables(self) -> List[Var]:
        found = {}
        for literal in self.literals:
            for term in literal.terms:
                for v in term_variables(term):
                    found[v] = None
        return list(found)

    def is_ground(self) -> bool:
        return all(is_ground(t) for lit in self.literals for t in lit.terms)

    def __len__(self):
        return len(self.literals)

    def __str__(self):
        if not self.literals:
            return "false"
        if len(self.literals) == 1:
            return str(self.literals[0])
        return "(or {})".format(" ".join(str(lit) for lit in self.literals))


@dataclass(frozen=True)
class Truth:
    value: bool

    def __str__(self):
        return "true" if self.value else "false"


TRUE = Truth(True)
FALSE = Truth(False)


@dataclass(frozen=True)
class Not:
    arg: "Formula"

    def __str__(self):
        return "(not {})".format(self.arg)


@dataclass(frozen=True)
class And:
    args: Tuple["Formula", ...]

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))

    def __str__(self):
        return "(and {})".format(" ".join(str(a) for a in self.args))


@dataclass(frozen=True)
class Or:
    args: Tuple["Formula", ...]

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))

    def __str__(self):
        return "(or {})".format(" ".join(str(a) for a in self.args))


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"

    def __str__(self):
        return "(=> {} {})".format(self.left, self.right)


@dataclass(frozen=True)
class Quantified:
    """A quantifier block `(exists (x ...) body)` or `(forall (x ...) body)`."""

    kind: str
    variables: Tuple[Var, ...]
    body: "Formula"

    def __post_init__(self):
        if self.kind not in ("exists", "forall"):
            raise ValueError("Unknown quantifier: {}".format(self.kind))
        object.__setattr__(self, "variables", tuple(self.variables))

    def __str__(self):
        return "({} ({}) {})".format(
            self.kind, " ".join(v.name for v in self.variables), self.body
        )


Formula = Union[Literal, Truth, Not, And, Or, Implies, Quantified]


def conj(parts: Iterable[Formula]) -> Formula:
    """Conjunction with flattening and unit folding."""
    flat = []
    for part in parts:
        if part == TRUE:
            continue
        if part == FALSE:
            return FALSE
        if isinstance(part, And):
            flat.extend(part.args)
        else:
            flat.append(part)
    flat = list(dict.fromkeys(flat))
    if not flat:
        return TRUE
    if len(flat) == 1:
        return flat[0]
    return And(tuple(flat))


def disj(parts: Iterable[Formula]) -> Formula:
    """Disjunction with flattening and unit folding."""
    flat = []
    for part in parts:
        if part == FALSE:
            continue
        if part == TRUE:
            return TRUE
        if isinstance(part, Or):
            flat.extend(part.args)
        else:
            flat.append(part)
    flat = list(dict.fromkeys(flat))
    if not flat:
        return FALSE
    if len(flat) == 1:
        return flat[0]
    return Or(tuple(flat))


def clause_formula(clause: Clause) -> Formula:
    return disj(clause.literals)


def clauses_formula(clauses: Iterable[Clause]) -> Formula:
    return conj(clause_formula(c) for c in clauses)


def nnf(formula: Formula, negate: bool = False) -> Formula:
    """
    Negation normal form: negations only on literals, no implications.
    Quantifiers are kept and dualized under negation.
    """
    if isinstance(formula, Literal):
        return formula.negate() if negate else formula
    if isinstance(formula, Truth):
        return Truth(formula.value != negate)
    if isinstance(formula, Not):
        return nnf(formula.arg, not negate)
    if isinstance(formula, Implies):
        return nnf(Or((Not(formula.left), formula.right)), negate)
    if isinstance(formula, And):
        parts = [nnf(a, negate) for a in formula.args]
        return disj(parts) if negate else conj(parts)
    if isinstance(formula, Or):
        parts = [nnf(a, negate) for a in formula.args]
        return conj(parts) if negate else disj(parts)
    if isinstance(formula, Quantified):
        kind = formula.kind
        if negate:
            kind = "forall" if kind == "exists" else "exists"
        return Quantified(kind, formula.variables, nnf(formula.body, negate))
    raise TypeError("Not a formula: {!r}".format(formula))


def negation(formula: Formula) -> Formula:
    return nnf(formula, negate=True)


def clausify(formula: Formula) -> List[Clause]:
    """
    Converts a quantifier-free formula (or the matrix of a universal
    formula) to clauses by distribution. Used for axioms and goals, which
    are small.
    """
    while isinstance(formula, Quantified) and formula.kind == "forall":
        formula = formula.body
    formula = nnf(formula)
    if isinstance(formula, Quantified):
        raise ValueError("Existential quantifiers cannot be clausified")
    return [Clause(tuple(lits)) for lits in _cnf(formula)]


def _cnf(formula: Formula) -> List[Tuple[Literal, ...]]:
    if isinstance(formula, Literal):
        return [(formula,)]
    if isinstance(formula, Truth):
        return [] if formula.value else [()]
    if isinstance(formula, And):
        out = []
        for arg in formula.args:
            out.extend(_cnf(arg))
        return list(dict.fromkeys(out))
    if isinstance(formula, Or):
        result = [()]
        for arg in formula.args:
            result = [
                tuple(dict.fromkeys(left + right))
                for left in result
                for right in _cnf(arg)
            ]
        return list(dict.fromkeys(result))
    raise ValueError("Unexpected node in clausification: {!r}".format(formula))


# ---------------------------------------------------------------------------
# Traversal and substitution
# ---------------------------------------------------------------------------


def iter_atoms(obj) -> Iterator[Literal]:
    """Yields every literal of a literal, clause, formula or iterable of those."""
    if isinstance(obj, Literal):
        yield obj
    elif isinstance(obj, Clause):
        yield from obj.literals
    elif isinstance(obj, Truth):
        return
    elif isinstance(obj, Not):
        yield from iter_atoms(obj.arg)
    elif isinstance(obj, (And, Or)):
        for arg in obj.args:
            yield from iter_atoms(arg)
    elif isinstance(obj, Implies):
        yield from iter_atoms(obj.left)
        yield from iter_atoms(obj.right)
    elif isinstance(obj, Quantified):
        yield from iter_atoms(obj.body)
    else:
        for item in obj:
            yield from iter_atoms(item)


def iter_all_subterms(obj) -> Iterator[Term]:
    for literal in iter_atoms(obj):
        for term in literal.terms:
            yield from iter_subterms(term)


def ground_subterms(obj) -> List[Term]:
    return [t for t in dict.fromkeys(iter_all_subterms(obj)) if is_ground(t)]


def constants_of(obj) -> List[Term]:
    """Free constants and arity-0 extension symbols, in order of first occurrence."""
    return [t for t in dict.fromkeys(iter_all_subterms(obj)) if is_constant_leaf(t)]


def function_symbols(obj) -> List[str]:
    found = {}
    for term in iter_all_subterms(obj):
        if isinstance(term, App):
            found[term.symbol] = None
    return list(found)


def free_variables(obj) -> List[Var]:
    """Variables not bound by an enclosing quantifier, in order of occurrence."""
    found: Dict[Var, None] = {}
    _collect_free(obj, frozenset(), found)
    return list(found)


def _collect_free(obj, bound, found):
    if isinstance(obj, Quantified):
        _collect_free(obj.body, bound | set(obj.variables), found)
    elif isinstance(obj, Not):
        _collect_free(obj.arg, bound, found)
    elif isinstance(obj, (And, Or)):
        for arg in obj.args:
            _collect_free(arg, bound, found)
    elif isinstance(obj, Implies):
        _collect_free(obj.left, bound, found)
        _collect_free(obj.right, bound, found)
    elif isinstance(obj, (Literal, Clause)):
        for literal in iter_atoms(obj):
            for term in literal.terms:
                for v in term_variables(term):
                    if v not in bound:
                        found[v] = None


def replace_term(term: Term, mapping: Mapping[Term, Term]) -> Term:
    """Replaces subterms top-down; a replaced subterm is not searched again."""
    hit = mapping.get(term)
    if hit is not None:
        return hit
    if isinstance(term, App) and term.args:
        args = tuple(replace_term(a, mapping) for a in term.args)
        if args != term.args:
            return App(term.symbol, args)
    return term


def replace_in_literal(literal: Literal, mapping: Mapping[Term, Term]) -> Literal:
    return Literal(
        literal.predicate,
        replace_term(literal.left, mapping),
        replace_term(literal.right, mapping),
        literal.positive,
    )


def replace_in_clause(clause: Clause, mapping: Mapping[Term, Term]) -> Clause:
    return Clause(tuple(replace_in_literal(lit, mapping) for lit in clause.literals))


def replace_in_formula(formula: Formula, mapping: Mapping[Term, Term]) -> Formula:
    """Capture-free replacement: bound variables shadow mapping keys."""
    if isinstance(formula, Literal):
        return replace_in_literal(formula, mapping)
    if isinstance(formula, Truth):
        return formula
    if isinstance(formula, Not):
        return Not(replace_in_formula(formula.arg, mapping))
    if isinstance(formula, And):
        return And(tuple(replace_in_formula(a, mapping) for a in formula.args))
    if isinstance(formula, Or):
        return Or(tuple(replace_in_formula(a, mapping) for a in formula.args))
    if isinstance(formula, Implies):
        return Implies(
            replace_in_formula(formula.left, mapping),
            replace_in_formula(formula.right, mapping),
        )
    if isinstance(formula, Quantified):
        inner = {k: v for k, v in mapping.items() if k not in formula.variables}
        return Quantified(
            formula.kind, formula.variables, replace_in_formula(formula.body, inner)
        )
    raise TypeError("Not a formula: {!r}".format(formula))


Substitution = Mapping[Var, Term]


def apply_subst(clause: Clause, sigma: Substitution) -> Clause:
    """
    Instantiates a clause. Literal order and polarity are preserved; the
    result is ground exactly when `sigma` covers every variable of the clause.

    Example:
        >>> c = Clause((Literal("<=", Var("x"), Var("x")),))
        >>> str(apply_subst(c, {Var("x"): Const("a")}))
        '(<= a a)'
    """
    if not sigma:
        return clause
    return replace_in_clause(clause, sigma)


# ---------------------------------------------------------------------------
# Signature
# ---------------------------------------------------------------------------


class Signature:
    """
    Partitioned signature: base symbols, extension levels Σ₁…Σₙ, parameters
    and the free-constant pool.

    Attributes:
        base_functions (dict): Base function name -> arity.
        base_predicates (dict): Base predicate name -> arity.
        levels (list): One dict (symbol -> arity) per extension level, level 1 first.
        params (frozenset): Parameter symbols Σ_P.
        free_constants (set): Free constant names seen so far.
        bank (TermBank): Hash-consing table of this problem.
    """

    def __init__(
        self,
        base_functions: Optional[Mapping[str, int]] = None,
        base_predicates: Optional[Mapping[str, int]] = None,
        levels: Optional[List[Mapping[str, int]]] = None,
        params: Iterable[str] = (),
        free_constants: Iterable[str] = (),
    ):
        self.logger = logging.getLogger(__name__)
        self.base_functions = dict(base_functions or {})
        self.base_predicates = {"=": 2, "<=": 2, "<": 2}
        self.base_predicates.update(base_predicates or {})
        self.levels = [dict(level) for level in (levels or [])]
        self.params = frozenset(params)
        self.free_constants = set(free_constants)
        self.bank = TermBank()
        self._fresh_counter = 0
        self._fresh_lock = threading.Lock()
        self._level_of: Dict[str, int] = {}
        self._validate()

    def _validate(self):
        for name in self.base_functions:
            self._level_of[name] = 0
        for index, level in enumerate(self.levels, start=1):
            for name in level:
                if name in self._level_of:
                    where = self._level_of[name]
                    self.logger.error("Symbol '%s' declared twice.", name)
                    raise SignatureError(
                        "Symbol '{}' declared at level {} and at level {}".format(
                            name, where, index
                        )
                    )
                self._level_of[name] = index
        overlap = self.free_constants & set(self._level_of)
        if overlap:
            raise SignatureError(
                "Free constants clash with declared symbols: {}".format(sorted(overlap))
            )
        for name in self.params:
            if self._level_of.get(name, 0) == 0:
                raise SignatureError(
                    "Parameter '{}' is not an extension symbol".format(name)
                )

    @property
    def depth(self) -> int:
        return len(self.levels)

    def level_of(self, symbol: str) -> Optional[int]:
        """0 for base symbols, the level index for extension symbols, None otherwise."""
        return self._level_of.get(symbol)

    def arity(self, symbol: str) -> Optional[int]:
        level = self._level_of.get(symbol)
        if level is None:
            return None
        if level == 0:
            return self.base_functions[symbol]
        return self.levels[level - 1][symbol]

    def level_symbols(self, level: int) -> Dict[str, int]:
        if not 1 <= level <= len(self.levels):
            raise SignatureError("Unknown level {}".format(level))
        return self.levels[level - 1]

    def is_extension(self, symbol: str) -> bool:
        return self._level_of.get(symbol, 0) > 0

    def is_param(self, symbol: str) -> bool:
        return symbol in self.params

    def is_extension_term(self, term: Term, level: Optional[int] = None) -> bool:
        if not isinstance(term, App):
            return False
        found = self._level_of.get(term.symbol, 0)
        if level is None:
            return found > 0
        return found == level

    def declare_constant(self, name: str) -> Const:
        if name in self._level_of:
            raise SignatureError(
                "'{}' is a declared function symbol, not a free constant".format(name)
            )
        self.free_constants.add(name)
        return self.bank.intern(Const(name))

    def fresh_constant(self) -> Const:
        """Returns a new `#k` constant that collides with no known symbol."""
        with self._fresh_lock:
            while True:
                self._fresh_counter += 1
                name = "#{}".format(self._fresh_counter)
                if name not in self.free_constants and name not in self._level_of:
                    break
            self.free_constants.add(name)
        return self.bank.intern(Const(name))

    def reset_fresh(self):
        with self._fresh_lock:
            self._fresh_counter = 0
            self.free_constants = {
                n for n in self.free_constants if not n.startswith("#")
            }

    def with_params(self, params: Iterable[str]) -> "Signature":
        """A copy of this signature with a different parameter set."""
        clone = Signature(
            self.base_functions,
            self.base_predicates,
            self.levels,
            params,
            self.free_constants,
        )
        clone.bank = self.bank
        clone._fresh_counter = self._fresh_counter
        return clone


# ---------------------------------------------------------------------------
# Structural queries
# ---------------------------------------------------------------------------


def est_terms(K: Iterable[Clause], G: Iterable, level: int, signature: Signature) -> List[Term]:
    """
    Collects the ground terms rooted at a level-`level` extension symbol
    occurring in `K` or `G`.

    Args:
        K: Axiom clauses of the level.
        G: Ground clauses (or formulas) of the goal.
        level (int): The extension level.
        signature (Signature): The problem signature.

    Returns:
        list: Ordered, duplicate-free list of ground extension terms.
    """
    signature.level_symbols(level)
    found = {}
    for source in (K, G):
        for term in iter_all_subterms(list(source)):
            if is_ground(term) and signature.is_extension_term(term, level):
                found[term] = None
    return list(found)


@dataclass(frozen=True)
class ClauseShape:
    """Flatness/linearity classification of a single clause."""

    clause: Clause
    flatness: str
    linear: bool
    variables_covered: bool

    @property
    def flat(self) -> bool:
        return self.flatness == "flat"


@dataclass
class FlatLinearReport:
    level: int
    shapes: List[ClauseShape]

    @property
    def all_flat(self) -> bool:
        return all(s.flatness == "flat" for s in self.shapes)

    @property
    def all_quasi_flat(self) -> bool:
        return all(s.flatness != "non-flat" for s in self.shapes)

    @property
    def all_linear(self) -> bool:
        return all(s.linear for s in self.shapes)

    @property
    def all_covered(self) -> bool:
        return all(s.variables_covered for s in self.shapes)


def _level_occurrences(clause: Clause, level_symbols) -> List[App]:
    """Occurrences (with repetition) of terms rooted at a level function of positive arity."""
    out = []
    for literal in clause.literals:
        for term in literal.terms:
            for sub in iter_subterms(term):
                if isinstance(sub, App) and sub.args and sub.symbol in level_symbols:
                    out.append(sub)
    return out


def _mentions(term: Term, level_symbols) -> bool:
    return any(
        isinstance(s, App) and s.symbol in level_symbols for s in iter_subterms(term)
    )


def classify_clause(clause: Clause, level_symbols) -> ClauseShape:
    occurrences = _level_occurrences(clause, level_symbols)
    flatness = "flat"
    for occ in occurrences:
        for arg in occ.args:
            if isinstance(arg, Var):
                continue
            if is_ground(arg) and not _mentions(arg, level_symbols):
                if flatness == "flat":
                    flatness = "quasi-flat"
            else:
                flatness = "non-flat"
    linear = True
    owner: Dict[Var, App] = {}
    for occ in occurrences:
        occ_vars = [a for a in iter_subterms(occ) if isinstance(a, Var)]
        if len(occ_vars) != len(set(occ_vars)):
            linear = False
        for v in set(occ_vars):
            if v in owner and owner[v] != occ:
                linear = False
            owner.setdefault(v, occ)
    covered = set()
    for occ in occurrences:
        covered.update(a for a in iter_subterms(occ) if isinstance(a, Var))
    return ClauseShape(
        clause=clause,
        flatness=flatness,
        linear=linear,
        variables_covered=set(clause.variables()) <= covered,
    )


def check_flat_linear(K: Iterable[Clause], level: int, signature: Signature) -> FlatLinearReport:
    """
    Classifies every clause of `K` as flat / quasi-flat / non-flat and
    linear / non-linear with respect to the functions of `level`, and
    records whether every variable occurs below one of them.
    """
    symbols = set(signature.level_symbols(level))
    return FlatLinearReport(level, [classify_clause(c, symbols) for c in K])
