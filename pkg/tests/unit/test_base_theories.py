import random
from fractions import Fraction

import pytest

from hierax.base_theories import (
    BaseTheoryId,
    BaseTheorySolver,
    DisjunctLimitExceeded,
    ForeignVariable,
    Linear,
    LinearAtom,
    NonLinearAtom,
    UnsupportedPredicate,
    Verdict,
    decide_ground_sat,
    finite_order_oracle,
    linearize,
    qe_theory_for,
)
from hierax.core import (
    TRUE,
    And,
    App,
    Clause,
    Const,
    Literal,
    Num,
    Or,
    Quantified,
    Var,
    clausify,
)
from hierax.locality import TheorySpec
from hierax.problem_handler import parse_formula


def F(text, base="DLO", levels=()):
    return parse_formula(text, TheorySpec.build(base, [(lv, []) for lv in levels]))


class TestTheoryIds:
    def test_parse_is_case_insensitive(self):
        assert BaseTheoryId.parse("tord") is BaseTheoryId.TORD
        assert BaseTheoryId.parse(BaseTheoryId.LRA) is BaseTheoryId.LRA

    def test_unknown_theory(self):
        with pytest.raises(ValueError, match="Unknown base theory: SLat"):
            BaseTheoryId.parse("SLat")

    @pytest.mark.parametrize(
        "theory, engine",
        [("DLO", "DLO"), ("TOrd", "DLO"), ("LRA", "LRA"), ("EQ", "InfiniteSet")],
        ids=["dlo", "tord-completion", "lra", "eq-completion"],
    )
    def test_elimination_theory(self, theory, engine):
        assert str(qe_theory_for(theory)) == engine

    def test_model_completion_is_idempotent(self):
        for theory in BaseTheoryId:
            assert theory.model_completion.model_completion is theory.model_completion


ground_cases = [
    {"id": "DLO strict cycle", "base": "DLO", "text": "(and (< a b) (< b a))", "expected": Verdict.UNSAT},
    {
        "id": "DLO antisymmetry",
        "base": "DLO",
        "text": "(and (<= a b) (<= b a) (distinct a b))",
        "expected": Verdict.UNSAT,
    },
    {"id": "DLO disjunction", "base": "DLO", "text": "(or (< a b) (< b a))", "expected": Verdict.SAT},
    {"id": "TOrd three-cycle", "base": "TOrd", "text": "(and (< a b) (< b c) (< c a))", "expected": Verdict.UNSAT},
    {
        "id": "LRA bounds",
        "base": "LRA",
        "text": "(and (<= (+ a b) 1) (<= 1 a) (< 0 b))",
        "expected": Verdict.UNSAT,
    },
    {"id": "LRA rational point", "base": "LRA", "text": "(and (<= (* 2 a) 3) (<= 3/2 a))", "expected": Verdict.SAT},
    {
        "id": "LRA disequation",
        "base": "LRA",
        "text": "(and (distinct a 1) (<= a 1) (<= 1 a))",
        "expected": Verdict.UNSAT,
    },
    {"id": "EQ transitivity", "base": "EQ", "text": "(and (= a b) (= b c) (distinct a c))", "expected": Verdict.UNSAT},
    {"id": "EQ disjunction", "base": "EQ", "text": "(or (= a b) (distinct b c))", "expected": Verdict.SAT},
]


@pytest.mark.parametrize(
    "base, text, expected",
    [(case["base"], case["text"], case["expected"]) for case in ground_cases],
    ids=[case["id"] for case in ground_cases],
)
def test_decide_ground_sat(base, text, expected):
    assert decide_ground_sat(base, clausify(F(text, base))) is expected


qe_cases = [
    {
        "id": "DLO interval",
        "base": "DLO",
        "text": "(exists (x) (and (< a x) (< x b)))",
        "expected": "(< a b)",
    },
    {
        "id": "DLO no endpoints",
        "base": "DLO",
        "text": "(exists (x) (and (<= a x) (distinct x a)))",
        "expected": "true",
    },
    {
        "id": "DLO two variables",
        "base": "DLO",
        "text": "(exists (x y) (and (< a x) (< x y) (< y b)))",
        "expected": "(< a b)",
    },
    {
        "id": "DLO universal",
        "base": "DLO",
        "text": "(forall (x) (or (< x a) (<= b x)))",
        "expected": "(<= b a)",
    },
    {
        "id": "LRA scaled bound",
        "base": "LRA",
        "text": "(exists (x) (and (<= a x) (<= (+ x x) b)))",
        "expected": "(<= (* 2 a) b)",
    },
    {
        "id": "LRA equality substitution",
        "base": "LRA",
        "text": "(exists (x) (and (< x a) (= (+ x 1) b)))",
        "expected": "(< b (+ a 1))",
    },
    {
        "id": "EQ substitution",
        "base": "EQ",
        "text": "(exists (x) (and (= x a) (distinct x b)))",
        "expected": "(distinct a b)",
    },
    {
        "id": "EQ infinite domain",
        "base": "EQ",
        "text": "(exists (x) (and (distinct x a) (distinct x b)))",
        "expected": "true",
    },
]


@pytest.mark.parametrize(
    "base, text, expected",
    [(case["base"], case["text"], case["expected"]) for case in qe_cases],
    ids=[case["id"] for case in qe_cases],
)
def test_qe(base, text, expected):
    solver = BaseTheorySolver(base)
    phi, psi = F(text, base), F(expected, base)
    result = solver.qe(phi)
    assert solver.equivalent(result, psi)
    assert solver.equivalent(phi, psi)


class TestErrors:
    def test_order_predicate_in_equality_theory(self):
        with pytest.raises(UnsupportedPredicate, match="not available in EQ"):
            decide_ground_sat("EQ", clausify(F("(< a b)")))

    def test_product_of_unknowns(self):
        with pytest.raises(NonLinearAtom, match="Product of unknowns"):
            decide_ground_sat("LRA", clausify(F("(<= (* a b) 1)", "LRA")))

    def test_variable_below_extension_symbol(self):
        phi = F("(exists (x) (< (f x) a))", levels=[{"f": 1}])
        with pytest.raises(ForeignVariable, match="below uninterpreted symbol"):
            BaseTheorySolver("DLO").qe(phi)

    def test_disjunct_cap(self):
        phi = F("(exists (x) (and (or (< a x) (< b x)) (or (< x c) (< x d))))")
        with pytest.raises(DisjunctLimitExceeded, match="More than 1"):
            BaseTheorySolver("DLO", disjunct_cap=1).qe(phi)

    def test_simplify_rejects_quantifiers(self):
        with pytest.raises(ValueError, match="quantifier-free"):
            BaseTheorySolver("DLO").simplify(F("(exists (x) (< x a))"))


class TestSimplify:
    @pytest.mark.parametrize(
        "text, expected",
        [
            ("(and (<= a b) (distinct a b))", "(< a b)"),
            ("(or (and (< a b) (< b c)) (< a b))", "(< a b)"),
            ("(and (< a b) (<= a b))", "(< a b)"),
            ("(and (< a b) (< b a))", "false"),
        ],
        ids=["strict merge", "implied disjunct", "implied literal", "unsatisfiable"],
    )
    def test_simplify(self, text, expected):
        result = BaseTheorySolver("DLO", debug_checks=True).simplify(F(text))
        assert str(result) == expected

    def test_simplify_keeps_meaning(self):
        solver = BaseTheorySolver("LRA", debug_checks=True)
        phi = F("(or (and (<= a 1) (<= 1 a)) (< a 0))", "LRA")
        assert solver.equivalent(solver.simplify(phi), phi)


class TestLinear:
    def test_linearize(self):
        a, b = Const("a"), Const("b")
        lin = linearize(App("-", (App("*", (Num(2), a)), App("+", (b, Num(Fraction(1, 2)))))))
        assert lin.coeff(a) == 2
        assert lin.coeff(b) == -1
        assert lin.const == Fraction(-1, 2)

    def test_inequality_is_scaled_to_a_positive_leading_coefficient(self):
        a, b = Const("a"), Const("b")
        atom = LinearAtom.from_linear(Linear({a: -2, b: 1}, -4), "<=")
        assert atom.coefficients == ((a, 1), (b, Fraction(-1, 2)))
        assert atom.lower
        assert atom.bound == -2
        assert str(atom.to_formula()) == "(<= -2 (+ a (* -1/2 b)))"
        assert atom.to_linear().coeff(a) == -1

    @pytest.mark.parametrize(
        "coeffs, op, lower",
        [({"a": 3}, "<", False), ({"a": -3}, "=", False), ({"a": -3}, "<", True)],
        ids=["upper bound", "equation", "lower bound"],
    )
    def test_leading_coefficient(self, coeffs, op, lower):
        atom = LinearAtom.from_linear(Linear({Const(k): q for k, q in coeffs.items()}, 1), op)
        assert atom.coefficients[0][1] == 1
        assert atom.lower is lower


class TestFiniteOrderOracle:
    def test_agrees_on_cycle(self):
        assert finite_order_oracle(clausify(F("(and (< a b) (< b c) (< c a))"))) is Verdict.UNSAT

    def test_finds_chain(self):
        assert finite_order_oracle(clausify(F("(and (< a b) (<= b c) (distinct a c))"))) is Verdict.SAT

    def test_bound_below_atom_count(self):
        with pytest.raises(ValueError, match="below the 3 atoms"):
            finite_order_oracle(clausify(F("(and (< a b) (< b c))")), bound=2)


# ---------------------------------------------------------------------------
# Randomized suites
# ---------------------------------------------------------------------------

CONSTANTS = [Const(n) for n in "abcde"]
VARIABLES = [Var("x"), Var("y")]


def _random_term(rng, base):
    leaves = VARIABLES + CONSTANTS[: rng.randint(1, 5)]
    term = rng.choice(leaves)
    if base == "LRA" and rng.random() < 0.4:
        other = rng.choice(leaves + [Num(1)])
        if rng.random() < 0.5:
            return App("+", (term, other))
        return App("*", (Num(rng.choice([2, -1, Fraction(1, 2)])), term))
    return term


def _random_literal(rng, base):
    predicates = ["="] if base == "EQ" else ["=", "<=", "<"]
    literal = Literal(rng.choice(predicates), _random_term(rng, base), _random_term(rng, base))
    return literal.negate() if rng.random() < 0.3 else literal


def _random_matrix(rng, base, atoms):
    parts = [_random_literal(rng, base) for _ in range(atoms)]
    while len(parts) > 1:
        i = rng.randrange(len(parts) - 1)
        node = And if rng.random() < 0.6 else Or
        parts[i: i + 2] = [node((parts[i], parts[i + 1]))]
    return parts[0]


def random_exists(rng, base):
    variables = tuple(VARIABLES[: rng.randint(1, 2)])
    return Quantified("exists", variables, _random_matrix(rng, base, rng.randint(1, 4)))


@pytest.mark.slow
@pytest.mark.parametrize("base", ["DLO", "LRA", "EQ"])
def test_qe_matches_test_point_elimination(base):
    """
    Elimination by disjunct enumeration and by test points agree on
    random one-block existential formulas.
    """
    rng = random.Random(20240 + len(base))
    solver = BaseTheorySolver(base)
    for _ in range(500):
        phi = random_exists(rng, base)
        result = solver.qe(phi)
        assert solver.decide_entails(phi, result), str(phi)
        assert solver.decide_entails(result, phi), str(phi)


@pytest.mark.slow
def test_total_order_verdicts_match_chain_oracle():
    rng = random.Random(7)
    solver = BaseTheorySolver("TOrd")
    for _ in range(500):
        clauses = []
        for _ in range(rng.randint(1, 4)):
            lits = []
            for _ in range(rng.randint(1, 2)):
                u, v = rng.sample(CONSTANTS[:4], 2)
                lit = Literal(rng.choice(["=", "<=", "<"]), u, v)
                lits.append(lit.negate() if rng.random() < 0.3 else lit)
            clauses.append(Clause(tuple(lits)))
        assert solver.decide_ground_sat(clauses) is finite_order_oracle(clauses), [str(c) for c in clauses]


def _scaled(formula, k):
    if isinstance(formula, Literal):
        return Literal(
            formula.predicate,
            App("*", (Num(k), formula.left)),
            App("*", (Num(k), formula.right)),
            formula.positive,
        )
    if isinstance(formula, Quantified):
        return Quantified(formula.kind, formula.variables, _scaled(formula.body, k))
    return type(formula)(tuple(_scaled(a, k) for a in formula.args))


@pytest.mark.slow
def test_linear_elimination_ignores_positive_scaling():
    rng = random.Random(31)
    solver = BaseTheorySolver("LRA")
    for _ in range(200):
        phi = random_exists(rng, "LRA")
        k = rng.choice([2, 3, Fraction(1, 3), Fraction(5, 2)])
        assert solver.equivalent(solver.qe(phi), solver.qe(_scaled(phi, k))), str(phi)


@pytest.mark.slow
def test_dense_and_total_orders_agree_on_ground_clauses():
    rng = random.Random(11)
    dense, total = BaseTheorySolver("DLO"), BaseTheorySolver("TOrd")
    for _ in range(300):
        clauses = []
        for _ in range(rng.randint(1, 5)):
            lits = []
            for _ in range(rng.randint(1, 3)):
                lit = Literal(rng.choice(["=", "<=", "<"]), rng.choice(CONSTANTS), rng.choice(CONSTANTS))
                lits.append(lit.negate() if rng.random() < 0.3 else lit)
            clauses.append(Clause(tuple(lits)))
        assert dense.decide_ground_sat(clauses) is total.decide_ground_sat(clauses), [str(c) for c in clauses]


def test_entails_true_on_tautology():
    solver = BaseTheorySolver("DLO")
    assert solver.decide_entails(TRUE, F("(or (<= a b) (< b a))"))
