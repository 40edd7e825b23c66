"""
Command-line entry point

    python src/cli.py adversary --fixture conTwoAdd-I1 --predicate "ret > 0" --horizon 80 --bound 1/16
    python src/cli.py exact fixtures/twoAdd.cpl --horizon 30
    python src/cli.py adversary --fixture bloom --horizon unbounded
    python src/cli.py efp --size 2 --hashes 1 --insertions 2

Exit codes: 0 success or bound holds, 1 bound violated or erasure refuted,
2 usage error, 3 resource guard hit, 4 erase-check inconclusive.
"""

import argparse
import logging
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional

# Add src directory to path if not already there
src_path = Path(__file__).parent
if str(src_path) not in sys.path:
    sys.path.insert(0, str(src_path))

from pydantic import BaseModel, ValidationError

from modules.analyzer import Analyzer
from modules.config import Config
from modules.errors import ResourceGuardError, UnknownFixtureError
from modules.reports import EraseReport, QueryReport, render_text
from utils.constants import (
    EXIT_GUARD,
    EXIT_INCONCLUSIVE,
    EXIT_OK,
    EXIT_USAGE,
    EXIT_VIOLATED,
    SCHEDULER_KINDS,
    UNBOUNDED
)
from utils.helpers import parse_rational
from utils.logging import setup_logging

logger = logging.getLogger(__name__)

PROGRAM_COMMANDS = ("parse", "exact", "adversary", "safety", "mc", "erase", "erase-check")


def _non_negative(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {value}")
    return value


def _positive(text: str) -> int:
    value = _non_negative(text)
    if value == 0:
        raise argparse.ArgumentTypeError("expected a positive integer, got 0")
    return value


def _horizon(text: str):
    if text.strip().lower() == UNBOUNDED:
        return UNBOUNDED
    return _non_negative(text)


def _probability(text: str) -> Fraction:
    try:
        return parse_rational(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _confidence(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not 0 < value < 1:
        raise argparse.ArgumentTypeError(f"confidence must lie in (0, 1), got {value}")
    return value


def _param(text: str):
    """KEY=VALUE where VALUE is an integer or a comma-separated list of integers"""
    key, sep, raw = text.partition("=")
    if not sep or not key:
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE, got {text!r}")
    try:
        if "," in raw or raw.startswith("["):
            value = [int(part) for part in raw.strip("[]").split(",") if part.strip()]
        else:
            value = int(raw)
    except ValueError:
        raise argparse.ArgumentTypeError(f"parameter values must be integers, got {raw!r}") from None
    return key, value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="Print the report as JSON")
    common.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR (logs go to stderr)")
    common.add_argument("--log-file", default=None, help="Also write logs to this file")

    program = argparse.ArgumentParser(add_help=False)
    program.add_argument("program", nargs="?", help="Path to a .cpl program")
    program.add_argument("--fixture", help="Use a catalogue fixture instead of a file")
    program.add_argument("--param", action="append", type=_param, default=[], metavar="KEY=VALUE",
                         help="Parameter of a generated fixture, e.g. keys=0,1 (repeatable)")

    horizon = argparse.ArgumentParser(add_help=False)
    horizon.add_argument("--horizon", type=_horizon,
                         help="Scheduler steps, or 'unbounded' for the limit (adversary, safety); "
                              "doubles from the configured start horizon when omitted")

    parser = argparse.ArgumentParser(
        prog="probsched",
        description="Exact and statistical analysis of randomized concurrent programs"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", parents=[common, program], help="Parse and pretty-print a program")
    p.add_argument("--core", action="store_true", help="Also print the desugared core expression")

    p = sub.add_parser("exact", parents=[common, program, horizon], help="Value distribution under a policy")
    p.add_argument("--scheduler", default="round_robin", help=f"One of {', '.join(SCHEDULER_KINDS)}[:I,J,...]")
    p.add_argument("--dump-final", action="store_true", help="Dump every final configuration")

    p = sub.add_parser("adversary", parents=[common, program, horizon], help="Worst-case violation probability")
    p.add_argument("--predicate", help="Postcondition on thread 0's value, e.g. 'ret > 0'")
    p.add_argument("--bound", type=_probability, help="Exit 1 if the violation probability exceeds this")

    p = sub.add_parser("safety", parents=[common, program, horizon], help="Smallest non-stuck probability")
    p.add_argument("--bound", type=_probability, help="Exit 1 if the mass falls below this")

    p = sub.add_parser("mc", parents=[common, program], help="Monte Carlo estimate of the violation probability")
    p.add_argument("--predicate", help="Postcondition on thread 0's value")
    p.add_argument("--scheduler", default="round_robin", help=f"One of {', '.join(SCHEDULER_KINDS)}[:I,J,...]")
    p.add_argument("--trials", type=_positive)
    p.add_argument("--seed", type=_non_negative)
    p.add_argument("--max-steps", type=_non_negative)
    p.add_argument("--confidence", type=_confidence)
    p.add_argument("--timeout-as-violation", action="store_true", help="Count step-limit timeouts as violations")
    p.add_argument("--workers", type=_positive, help="Worker processes; the estimate does not depend on it")

    sub.add_parser("erase", parents=[common, program], help="Print the tape-erased program")

    p = sub.add_parser("erase-check", parents=[common, program, horizon],
                       help="Compare a program with its erased version")
    p.add_argument("--scheduler", default="round_robin")
    p.add_argument("--script-length", type=_non_negative, default=0,
                   help="Also compare under every scripted policy of this length")
    p.add_argument("--predicate", help="Also compare the largest violation probability for this predicate")
    p.add_argument("--no-limits", dest="limits", action="store_false",
                   help="Compare fixed policies only; without a complete one the check is inconclusive")

    p = sub.add_parser("efp", parents=[common], help="Bloom filter false-positive probability")
    p.add_argument("--size", type=_positive, required=True)
    p.add_argument("--hashes", type=_positive, required=True)
    counts = p.add_mutually_exclusive_group(required=True)
    counts.add_argument("--insertions", type=_non_negative, help="Keys inserted; each draws --hashes indices")
    counts.add_argument("--draws", type=_non_negative, help="Remaining index draws, for a partly filled filter")
    p.add_argument("--set-bits", type=_non_negative, default=0, help="Bits already set")

    p = sub.add_parser("bloom-oracle", parents=[common], help="Brute-force false-positive probability")
    p.add_argument("--size", type=_positive, required=True)
    p.add_argument("--hashes", type=_positive, required=True)
    p.add_argument("--keys", type=_non_negative, required=True)

    sub.add_parser("fixtures", parents=[common], help="List catalogue fixtures")
    return parser


def exit_code_for(report: BaseModel) -> int:
    if isinstance(report, QueryReport) and report.holds is False:
        return EXIT_VIOLATED
    if isinstance(report, EraseReport) and report.status == "failed":
        return EXIT_VIOLATED
    if isinstance(report, EraseReport) and report.status == "inconclusive":
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def run(args: argparse.Namespace, analyzer: Analyzer) -> BaseModel:
    """Dispatch a parsed command to the analyzer"""
    if args.command == "efp":
        return analyzer.efp(args.size, args.hashes, args.insertions, args.set_bits, args.draws)
    if args.command == "bloom-oracle":
        return analyzer.bloom_oracle(args.size, args.hashes, args.keys)
    if args.command == "fixtures":
        return analyzer.fixtures()

    params: Dict[str, Any] = dict(args.param)
    if params and not args.fixture:
        raise ValueError("--param only applies to --fixture")
    program = analyzer.resolve(
        path=args.program, fixture_name=args.fixture, params=params,
        require_main=args.command != "parse"
    )
    if args.command == "parse":
        return analyzer.parse(program, core=args.core)
    if args.command == "exact":
        return analyzer.exact(program, args.scheduler, args.horizon, args.dump_final)
    if args.command == "adversary":
        return analyzer.adversary(program, args.predicate, args.horizon, args.bound)
    if args.command == "safety":
        return analyzer.safety(program, args.horizon, args.bound)
    if args.command == "mc":
        return analyzer.mc(
            program, args.predicate, args.scheduler, args.trials, args.seed,
            args.max_steps, args.confidence, args.timeout_as_violation, args.workers
        )
    if args.command == "erase":
        return analyzer.erase(program)
    return analyzer.erase_check(
        program, args.horizon, args.scheduler, args.script_length, args.predicate, args.limits
    )


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse already printed the usage message
        return EXIT_OK if e.code == 0 else EXIT_USAGE

    try:
        settings = Config()
        setup_logging(args.log_level or settings.logging.level, args.log_file or settings.logging.log_file)
        report = run(args, Analyzer(settings))
    except ResourceGuardError as e:
        print(f"error: {e}", file=sys.stderr)
        last_value = getattr(e, "last_value", None)
        if last_value is not None:
            print(f"last completed value: {last_value}", file=sys.stderr)
        return EXIT_GUARD
    except UnknownFixtureError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ValidationError, ValueError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE

    print(report.model_dump_json(indent=2) if args.json else render_text(report))
    return exit_code_for(report)


if __name__ == "__main__":
    sys.exit(main())
