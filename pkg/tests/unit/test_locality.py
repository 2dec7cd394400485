import random

import pytest

from hierax.base_theories import Verdict
from hierax.core import App, Clause, Const, Literal, Var, clausify, replace_term
from hierax.locality import (
    HierarchicalReducer,
    IdentityClosure,
    LevelViolation,
    NonGroundInstance,
    TheorySpec,
    closure_by_name,
    congruence_instances,
    decide_sat_extension,
    flatten_purify,
    instantiate,
    search_model,
)

a, b = Const("a"), Const("b")
x, y = Var("x"), Var("y")


def f(t):
    return App("f", (t,))


def g(t):
    return App("g", (t,))


MONOTONE_F = Clause((Literal("<=", x, y).negate(), Literal("<=", f(x), f(y))))


def _walk(term):
    yield term
    for arg in getattr(term, "args", ()):
        yield from _walk(arg)


def random_ground_term(rng, depth):
    if depth == 0 or rng.random() < 0.3:
        return rng.choice([a, b, Const("d")])
    return rng.choice([f, g])(random_ground_term(rng, depth - 1))


@pytest.fixture
def two_levels():
    return TheorySpec.build("DLO", [({"f": 1}, [MONOTONE_F]), ({"g": 1}, [])])


class TestTheorySpec:
    def test_axiom_using_higher_level(self):
        clause = Clause((Literal("<=", f(x), g(x)),))
        with pytest.raises(LevelViolation, match="from level 2"):
            TheorySpec.build("DLO", [({"f": 1}, [clause]), ({"g": 1}, [])])

    def test_uncovered_variable_is_rejected(self):
        with pytest.raises(NonGroundInstance, match="does not occur below a level-1 function"):
            TheorySpec.build("DLO", [({"f": 1}, [Clause((Literal("<=", f(x), y),))])])

    def test_depth_and_params(self, two_levels):
        assert two_levels.depth == 2
        assert two_levels.with_params(["f"]).params == frozenset({"f"})
        assert two_levels.axioms(1) == [MONOTONE_F]


class TestInstantiate:
    def test_all_pairs_of_instance_terms(self, two_levels):
        instances = instantiate([MONOTONE_F], [f(a), f(b)], 1, two_levels.signature)
        assert len(instances) == 4
        assert Clause((Literal("<=", a, b).negate(), Literal("<=", f(a), f(b)))) in instances

    def test_only_terms_of_the_instance_set(self, two_levels):
        instances = instantiate([MONOTONE_F], [f(a), g(b)], 1, two_levels.signature)
        assert instances == [Clause((Literal("<=", a, a).negate(), Literal("<=", f(a), f(a))))]

    def test_free_variable_raises(self, two_levels):
        with pytest.raises(NonGroundInstance, match="Variable y"):
            instantiate([Clause((Literal("<=", f(x), y),))], [f(a)], 1, two_levels.signature)


class TestPurification:
    def test_nested_argument_gets_link_equation(self, two_levels):
        goal = Clause((Literal("<", g(f(a)), b),))
        result = flatten_purify([goal], 2, two_levels.signature)
        n1, n2 = Const("#1"), Const("#2")
        assert result.links == [Clause((Literal("=", n1, f(a)),))]
        assert result.defs == {n2: g(n1)}
        assert result.g0 == [Clause((Literal("<", n2, b),))]
        assert result.trivial_con0() == result.con0
        assert result.unpurify() == [goal]

    def test_shared_terms_share_a_name(self, two_levels):
        goal = Clause((Literal("<", g(a), b), Literal("=", g(a), a)))
        result = flatten_purify([goal], 2, two_levels.signature)
        assert len(result.defs) == 1

    def test_arity_zero_symbols_stay(self):
        spec = TheorySpec.build("DLO", [({"f": 1, "c": 0}, [])])
        c = App("c", ())
        result = flatten_purify([Clause((Literal("<", c, f(c)),))], 1, spec.signature)
        assert list(result.defs.values()) == [f(c)]
        assert result.links == []

    def test_congruence_pairs_include_diagonal(self):
        a1, a2 = Const("a1"), Const("a2")
        con0 = congruence_instances({a1: g(a), a2: g(b)})
        assert len(con0) == 3
        assert Clause((Literal("=", a, b, False), Literal("=", a1, a2))) in con0

    def test_congruence_by_root(self):
        a1, a2 = Const("a1"), Const("a2")
        assert len(congruence_instances({a1: g(a), a2: f(a)})) == 2


class TestClosure:
    def test_identity_closure(self, two_levels):
        closure = IdentityClosure()
        terms = closure.apply([MONOTONE_F], [f(f(a))], 1, two_levels.signature)
        assert set(terms) == {f(a), f(f(a))}
        again = closure.apply([MONOTONE_F], terms, 1, two_levels.signature)
        assert set(again) == set(terms)

    def test_closure_by_name(self):
        assert closure_by_name("identity") == IdentityClosure()
        with pytest.raises(ValueError, match="Unknown closure 'everything'"):
            closure_by_name("everything")

    def test_identity_closure_laws(self, two_levels):
        rng = random.Random(3)
        closure, sig = IdentityClosure(), two_levels.signature
        renaming = {a: Const("a2"), b: Const("b2"), Const("d"): Const("d2")}

        def close(terms):
            return set(closure.apply([MONOTONE_F], list(terms), 1, sig))

        for _ in range(200):
            small = [random_ground_term(rng, 3) for _ in range(rng.randint(0, 3))]
            large = small + [random_ground_term(rng, 3) for _ in range(rng.randint(0, 3))]
            level_terms = {
                s for t in small for s in _walk(t) if isinstance(s, App) and sig.is_extension_term(s, 1)
            }
            assert level_terms <= close(small)
            assert close(small) <= close(large)
            assert close(close(small)) == close(small)
            renamed = {replace_term(t, renaming) for t in close(small)}
            assert close(replace_term(t, renaming) for t in small) == renamed


class TestReduction:
    def test_semi_galois_goal_is_unsat(self, load_problem):
        problem = load_problem("sgc_tord.hx")
        spec = problem.to_theory_spec()
        assert decide_sat_extension(spec, problem.goals) is Verdict.UNSAT

    def test_half_of_semi_galois_goal_is_sat(self, load_problem):
        problem = load_problem("sgc_tord.hx")
        spec = problem.to_theory_spec()
        assert decide_sat_extension(spec, problem.goals[:2]) is Verdict.SAT

    def test_semi_galois_tables(self, load_problem):
        problem = load_problem("sgc_tord.hx")
        _, results = HierarchicalReducer(problem.to_theory_spec()).reduce_chain(problem.goals)
        assert len(results) == 1
        result = results[0]
        assert {str(c): str(t) for c, t in result.defs.items()} == {"#1": "(g a)", "#2": "(f b)"}
        assert {str(c) for c in result.g0} == {"(<= d #1)", "(<= a c)", "(<= b d)", "(not (<= #2 c))"}
        assert sorted(str(c) for c in result.con0) == [
            "(or (distinct a a) (= #1 #1))",
            "(or (distinct b b) (= #2 #2))",
        ]
        assert result.links == []

    def test_chain_reduction(self, load_problem):
        problem = load_problem("chain.hx")
        spec = problem.to_theory_spec()
        reducer = HierarchicalReducer(spec)
        reduced, results = reducer.reduce_chain(problem.goals)
        assert [r.level for r in results] == [2, 1]
        assert {t.symbol for t in results[0].defs.values()} == {"g"}
        assert {t.symbol for t in results[1].defs.values()} == {"f", "h"}
        assert reducer.solver.decide_ground_sat(reduced) is Verdict.UNSAT

    def test_case_split_alone_is_not_monotone(self, monotone_g):
        problem, spec = monotone_g
        assert decide_sat_extension(spec, problem.goals) is Verdict.SAT

    def test_reduce_without_axioms(self, two_levels, clauses):
        goal = clauses("(< (f a) (f b))", two_levels)
        reduced, result = HierarchicalReducer(two_levels).reduce_step(1, goal, instantiate_axioms=False)
        assert result.instances == []
        assert len(result.defs) == 2
        assert Clause((Literal("=", a, b, False), Literal("=", Const("#1"), Const("#2")))) in reduced


class TestModelSearch:
    def test_finds_model(self, monotone_g):
        problem, spec = monotone_g
        found = search_model(spec, problem.goals, bound=3)
        assert found.verdict is Verdict.SAT
        assert found.bound <= 3

    def test_no_small_model(self, load_problem):
        problem = load_problem("sgc_tord.hx")
        found = search_model(problem.to_theory_spec(), problem.goals, bound=2)
        assert found.verdict is Verdict.UNSAT

    def test_linear_arithmetic_is_skipped(self):
        spec = TheorySpec.build("LRA", [({"f": 1}, [])])
        assert search_model(spec, clausify(Literal("<", f(a), a))).verdict is None

    @pytest.mark.slow
    def test_reduction_never_refutes_a_found_model(self, monotone_g):
        _, spec = monotone_g
        rng = random.Random(17)
        c1, c2, c = Const("c1"), Const("c2"), App("c", ())
        pool = [c1, c2, c, App("f", (c1,)), App("h", (c2,)), g(c1), g(c2), g(c)]
        for _ in range(100):
            goal = []
            for _ in range(rng.randint(1, 3)):
                literal = Literal(rng.choice(["=", "<=", "<"]), rng.choice(pool), rng.choice(pool))
                goal.append(Clause((literal.negate() if rng.random() < 0.3 else literal,)))
            spec.signature.reset_fresh()
            found = search_model(spec, goal, bound=2)
            if found.verdict is Verdict.SAT:
                assert decide_sat_extension(spec, goal) is Verdict.SAT, [str(cl) for cl in goal]
