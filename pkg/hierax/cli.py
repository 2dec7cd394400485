"""
Command-line entry point::

    hierax --task symelim data/problems/monotone_g.hx

Exit codes: 0 task succeeded, 1 negative verdict (a satisfiable goal, a
failed check, no interpolant), 2 input error, 3 engine limit reached.
"""

import argparse
import logging
import sys
from typing import List, Optional

from hierax.base_theories import DEFAULT_DISJUNCT_CAP, DisjunctLimitExceeded
from hierax.core import HieraxError
from hierax.hierax import Hierax, OracleDisagreement
from hierax.interpolation import NotUnsat
from hierax.problem_handler import TASKS, parse_terms
from hierax.report import render_smtlib


EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_INPUT = 2
EXIT_LIMIT = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hierax",
        description="Hierarchical reasoning, symbol elimination and interpolation in local theory extensions.",
    )
    parser.add_argument("problem", help="Problem file (.hx)")
    parser.add_argument("--task", choices=TASKS, help="Overrides the (task ...) form of the problem file")
    parser.add_argument("--trace", type=int, choices=(0, 1, 2), default=0, help="Trace detail")
    parser.add_argument("--oracle", action="store_true", help="Cross-check with bounded model search")
    parser.add_argument("--oracle-bound", type=int, default=4, help="Largest domain tried by --oracle")
    parser.add_argument("--disjunct-cap", type=int, default=DEFAULT_DISJUNCT_CAP)
    parser.add_argument("--debug-checks", action="store_true", help="Re-check simplifications by entailment")
    parser.add_argument("--seed-terms", metavar="FILE", help="Extra instance terms, overriding (seed-terms ...)")
    parser.add_argument("--eliminate-side", choices=("a", "b"), default="a")
    parser.add_argument("--smtlib-out", metavar="FILE", help="Write the constraint or interpolant as SMT-LIB")
    parser.add_argument("--report-json", metavar="FILE", help="Write the report as JSON")
    parser.add_argument(
        "--log-level",
        default="WARNING",
        choices=("DEBUG", "INFO", "WARNING", "ERROR"),
    )
    return parser


def run_cli(argv: Optional[List[str]] = None) -> int:
    """
    Runs one task and prints its report.

    Returns:
        int: The exit code.
    """
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
    )
    logger = logging.getLogger("hierax.cli")

    try:
        with open(args.problem, encoding="utf-8") as handle:
            text = handle.read()
        runner = Hierax(
            text,
            disjunct_cap=args.disjunct_cap,
            debug_checks=args.debug_checks,
            trace_level=args.trace,
            oracle=args.oracle,
            oracle_bound=args.oracle_bound,
            problem_name=args.problem,
        )
        seed_terms = None
        if args.seed_terms:
            with open(args.seed_terms, encoding="utf-8") as handle:
                seed_terms = parse_terms(handle.read(), runner.spec)
        report = runner.run(args.task, seed_terms=seed_terms, side=args.eliminate_side)
    except DisjunctLimitExceeded as e:
        logger.error("Engine limit: %s", e)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_LIMIT
    except (NotUnsat, OracleDisagreement) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NEGATIVE
    except (HieraxError, OSError) as e:
        logger.error("Input error: %s", e)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT

    sys.stdout.write(report.render_text())
    if args.report_json:
        report.write_json(args.report_json)
    if args.smtlib_out and report.result is not None:
        _write_smtlib(args.smtlib_out, runner, report)
    return EXIT_OK if report.passed else EXIT_NEGATIVE


def _write_smtlib(path: str, runner: Hierax, report):
    formula = runner.last_formula
    text = render_smtlib(formula, runner.spec, comment=f"{report.result['kind']} for {runner.problem_name}")
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(text)


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
