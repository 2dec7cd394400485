import random

import pytest

from hierax.base_theories import BaseTheorySolver
from hierax.core import FALSE, TRUE, App, Clause, Const, Literal, Signature, iter_subterms, replace_term
from hierax.interpolation import (
    InterpolationProblem,
    Interpolator,
    NotUnsat,
    SharedConstants,
    SharingError,
    SubtermOnly,
    shared_constants,
    shared_functions,
)
from hierax.locality import TheorySpec

a, b, d, e = Const("a"), Const("b"), Const("d"), Const("e")


def f(t):
    return App("f", (t,))


@pytest.fixture
def flat_spec():
    return TheorySpec.build("DLO", [({"f": 1, "k": 1}, [])])


def unit(predicate, left, right):
    return [Clause((Literal(predicate, left, right),))]


class TestClosures:
    def test_shared_constants_closure(self):
        closure = SharedConstants(["f"], [d])
        sig = Signature(levels=[{"f": 1}])
        assert [str(t) for t in closure.apply([], [d], [d], sig)] == ["d", "(f d)"]

    def test_shared_constants_are_computed(self):
        closure = SharedConstants(["f"])
        assert closure.shared([], [a, f(d)], [d, b]) == [d]

    def test_subterm_only_is_smallest(self):
        sig = Signature(levels=[{"f": 1}])
        terms_a, terms_b = [f(a), d], [d]
        small = set(SubtermOnly().apply([], terms_a, terms_b, sig))
        large = set(SharedConstants(["f"]).apply([], terms_a, terms_b, sig))
        assert small == {a, f(a), d}
        assert small < large

    def test_closures_compare_by_options(self):
        assert SharedConstants(["f"], [d]) == SharedConstants(["f"], [d])
        assert SharedConstants(["f"]) != SharedConstants(["f"], [d])
        assert SubtermOnly() != SharedConstants()


def _leaves(terms):
    return {s for t in terms for s in iter_subterms(t) if isinstance(s, Const)}


def _symbols(terms):
    return {s.symbol for t in terms for s in iter_subterms(t) if isinstance(s, App)}


def _random_terms(rng, count):
    def term(depth):
        if depth == 0 or rng.random() < 0.35:
            return rng.choice([a, b, d, e])
        if rng.random() < 0.6:
            return f(term(depth - 1))
        return App("k", (term(depth - 1), term(depth - 1)))

    return [term(2) for _ in range(count)]


closure_cases = [
    {"id": "subterm-only", "closure": SubtermOnly()},
    {"id": "shared-constants f", "closure": SharedConstants(["f"])},
    {"id": "shared-constants f k", "closure": SharedConstants(["f", "k"])},
]


@pytest.mark.parametrize("closure", [c["closure"] for c in closure_cases], ids=[c["id"] for c in closure_cases])
def test_amalgamation_closure_laws(closure):
    rng = random.Random(13)
    sig = Signature(levels=[{"f": 1, "k": 2}])
    renaming = {a: Const("a2"), b: Const("b2"), d: Const("d2"), e: Const("e2")}

    def W(terms_a, terms_b):
        return set(closure.apply([], list(terms_a), list(terms_b), sig))

    def rename(terms):
        return [replace_term(t, renaming) for t in terms]

    for _ in range(200):
        terms_a, terms_b = _random_terms(rng, rng.randint(0, 3)), _random_terms(rng, rng.randint(0, 3))
        more_a = terms_a + _random_terms(rng, rng.randint(0, 2))
        more_b = terms_b + _random_terms(rng, rng.randint(0, 2))
        closed = W(terms_a, terms_b)
        assert {s for t in terms_a for s in iter_subterms(t)} <= closed
        assert closed <= W(more_a, more_b)
        assert W(closed, terms_b) == closed
        assert W(rename(terms_a), rename(terms_b)) == set(rename(closed))
        assert _leaves(closed) <= _leaves(terms_a)
        assert _symbols(closed) <= _symbols(terms_a) | set(getattr(closure, "functions", ()))


class TestSharedSymbols:
    def test_axioms_relate_symbols(self, sgc_interp):
        problem, spec = sgc_interp
        assert shared_functions(spec, problem.goal_a, problem.goal_b) == ["f", "g"]

    def test_shared_constants_are_free_constants_of_both_sides(self, sgc_interp):
        problem, _ = sgc_interp
        assert set(shared_constants(problem.goal_a, problem.goal_b)) == {d, Const("c")}

    def test_unrelated_symbols(self, flat_spec):
        A, B = unit("<", f(a), a), unit("<", App("k", (a,)), a)
        assert shared_functions(flat_spec, A, B) == []


class TestSemiGalois:
    @pytest.mark.parametrize("side", ["a", "b"])
    def test_interpolant(self, sgc_interp, formula, side):
        problem, spec = sgc_interp
        task = InterpolationProblem(spec, problem.goal_a, problem.goal_b, closure=problem.closure, side=side)
        report = Interpolator(spec, debug_checks=True).solve(task)
        assert BaseTheorySolver("TOrd").equivalent(report.interpolant, formula("(<= (f d) c)", spec))
        assert report.verified
        assert report.separable
        assert report.audit == []

    def test_separated_sets(self, sgc_interp):
        problem, spec = sgc_interp
        S_A, S_B = Interpolator(spec).separate_instantiate(problem.goal_a, problem.goal_b, problem.closure)
        assert all("g" not in str(c) for c in S_B)
        assert len(S_A) > len(problem.goal_a)


class TestCaseSplit:
    def test_interpolant_avoids_g(self, casesplit_interp, case_split_gamma2):
        problem, spec = casesplit_interp
        report = Interpolator(spec).compute_interpolant(problem.goal_a, problem.goal_b, shared=problem.params)
        assert report.shared_functions == ["f", "h", "c"]
        assert "g" not in str(report.interpolant)
        assert BaseTheorySolver("DLO").equivalent(report.interpolant, case_split_gamma2(spec))
        assert report.verified


class TestEdgeCases:
    def test_satisfiable_pair(self, sgc_interp):
        problem, spec = sgc_interp
        with pytest.raises(NotUnsat, match="satisfiable"):
            Interpolator(spec).compute_interpolant(problem.goal_a, [])

    def test_widened_sharing(self, flat_spec):
        A, B = unit("<", f(a), a), unit("<", a, f(a))
        with pytest.raises(SharingError, match="not shared by A and B"):
            Interpolator(flat_spec).compute_interpolant(A, B, shared=["k"])

    def test_invalid_side(self, flat_spec):
        with pytest.raises(ValueError, match="side must be"):
            Interpolator(flat_spec).compute_interpolant([], [], side="c")

    def test_shared_side_is_its_own_interpolant(self, flat_spec):
        A, B = unit("<", f(a), a), unit("<", a, f(a))
        report = Interpolator(flat_spec).compute_interpolant(A, B)
        assert BaseTheorySolver("DLO").equivalent(report.interpolant, Literal("<", f(a), a))
        assert report.verified

    def test_unsatisfiable_b_gives_true(self, flat_spec):
        report = Interpolator(flat_spec).compute_interpolant(unit("<=", a, b), unit("<", b, b))
        assert report.interpolant == TRUE
        assert report.verified

    def test_unsatisfiable_a_gives_false(self, flat_spec):
        report = Interpolator(flat_spec).compute_interpolant(unit("<", a, a), unit("<=", a, b))
        assert report.interpolant == FALSE
        assert report.verified

    def test_audit(self, flat_spec):
        interpolant = Literal("<", App("k", (d,)), e)
        assert Interpolator(flat_spec).audit(interpolant, ["f"], [d]) == ["k", "e"]
