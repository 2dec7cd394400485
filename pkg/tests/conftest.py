# tests/conftest.py
import logging
from pathlib import Path

import pytest

from hierax.core import clausify
from hierax.problem_handler import parse_formula, parse_problem


PROBLEM_DIR = Path(__file__).resolve().parent.parent / "data" / "problems"


def pytest_configure(config):
    # Configure the root logger to display DEBUG level messages
    logging.basicConfig(
        level=logging.DEBUG, format="%(asctime)s [%(levelname)s] %(message)s"
    )


@pytest.fixture
def problem_dir():
    return PROBLEM_DIR


@pytest.fixture
def load_problem():
    """Fixture returning a loader for the regression problems in data/problems."""

    def _load(name):
        return parse_problem((PROBLEM_DIR / name).read_text(encoding="utf-8"))

    return _load


@pytest.fixture
def formula():
    """Parses a formula against a spec: formula("(<= a b)", spec)."""
    return parse_formula


@pytest.fixture
def clauses():
    """Parses a ground formula against a spec and clausifies it."""

    def _clauses(text, spec):
        return clausify(parse_formula(text, spec))

    return _clauses


@pytest.fixture
def monotone_g(load_problem):
    problem = load_problem("monotone_g.hx")
    return problem, problem.to_theory_spec()


@pytest.fixture
def sgc_interp(load_problem):
    problem = load_problem("sgc_interp.hx")
    return problem, problem.to_theory_spec()


@pytest.fixture
def casesplit_interp(load_problem):
    problem = load_problem("casesplit_interp.hx")
    return problem, problem.to_theory_spec()


# g at c1 and c2 follows f up to c and h after it; the congruence of the
# parameter values survives elimination.
CASE_SPLIT_GAMMA2 = """
(and
  (or (and (<= c1 c2) (<= c2 c) (< (f c2) (f c1)))
      (and (<= c1 c) (< c c2) (< (h c2) (f c1)))
      (and (< c c1) (<= c1 c2) (< (h c2) (h c1))))
  (=> (= c1 c2) (= (f c1) (f c2)))
  (=> (= c1 c2) (= (h c1) (h c2))))
"""


@pytest.fixture
def case_split_gamma2():
    """The formula over f, h and c that witnesses non-monotonicity of g."""

    def _expected(spec):
        return parse_formula(CASE_SPLIT_GAMMA2, spec)

    return _expected
