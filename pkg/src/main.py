"""Main application entry point.

This module parses the command line, loads settings, and dispatches to the
command handlers. Artifacts go to stdout (or --output), logs to stderr.
"""

import argparse
import logging
import sys
from typing import List, Optional

from src.config.settings import configure_logging, get_settings
from src.exceptions import CarnotError
from src.decorators.error_handling import error_record
from src.handlers.commands import (
    CommandContext,
    algebra_validate_command,
    blowup_command,
    curve_lift_command,
    curve_show_command,
    excess_command,
    select_intervals_command,
    shorten_command,
    surgery_check_command,
)

logger = logging.getLogger(__name__)


def _window_arg(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--window", nargs=2, type=float, action="append", metavar=("LO", "HI"),
        help="Window interval (repeat for a union); defaults to the whole domain",
    )


def build_parser() -> argparse.ArgumentParser:
    """Build the argument parser with every subcommand."""
    parser = argparse.ArgumentParser(
        prog="carnot-surgery",
        description="Carnot-group calculus, excess, curve surgery and the shortening pipeline",
    )
    parser.add_argument("--seed", type=int, help="Seed for the fuzz suites (env CARNOT_SEED)")
    parser.add_argument("--threads", type=int, help="Worker threads (env CARNOT_THREADS)")
    parser.add_argument("--log-level", help="Logging level (env LOG_LEVEL)")
    parser.add_argument("--output", "-o", help="Artifact path (stdout when omitted); relative paths go under CARNOT_OUTPUT_DIR")
    commands = parser.add_subparsers(dest="command", required=True)

    # algebra validate
    algebra = commands.add_parser("algebra", help="Algebra tables").add_subparsers(dest="action", required=True)
    validate = algebra.add_parser("validate", help="Validate an algebra")
    validate.add_argument("name", help="Built-in name or table path")
    validate.add_argument("--tolerance", type=float, default=1e-12)
    validate.add_argument("--suites", action="store_true", help="Also run the identity fuzz suites")
    validate.add_argument("--cases", type=int, help="Cases per suite (env CARNOT_FUZZ_CASES)")
    validate.set_defaults(handler=algebra_validate_command)

    # curve lift | show
    curve = commands.add_parser("curve", help="Curve files").add_subparsers(dest="action", required=True)
    lift = curve.add_parser("lift", help="Build a curve file")
    lift.add_argument("--algebra", default="heisenberg")
    lift.add_argument("--shape", choices=["corner", "line", "circle"])
    lift.add_argument(
        "--piece", nargs="+", type=float, action="append", metavar="DT_H",
        help="Piece as DT H1 ... Hr (repeat in time order)",
    )
    lift.add_argument("--start", nargs="+", type=float, help="Initial point coordinates")
    lift.add_argument("--offset", type=float, default=0.0, help="Initial time")
    lift.add_argument("--leg", type=float, default=1.0, help="Corner leg, line length or circle radius")
    lift.add_argument("--pieces", type=int, default=4096, help="Pieces of the circle lift")
    lift.set_defaults(handler=curve_lift_command)
    show = curve.add_parser("show", help="Summarize a curve file")
    show.add_argument("--curve", required=True)
    show.add_argument("--samples", type=int, default=9)
    show.set_defaults(handler=curve_show_command)

    # excess
    excess = commands.add_parser("excess", help="Excess over a window")
    excess.add_argument("--curve", required=True)
    _window_arg(excess)
    excess.add_argument("--mesh", type=int, help="Also minimize over a sphere mesh of this size")
    excess.add_argument("--scales", nargs="+", type=float, help="Scale sweep (CSV output)")
    excess.add_argument("--center", type=float, help="Center time of the scale sweep")
    excess.add_argument("--one-sided", action="store_true")
    excess.add_argument("--scaling", type=float, metavar="LAMBDA", help="Check the scaling identities")
    excess.add_argument("--tolerance", type=float, default=1e-10)
    excess.set_defaults(handler=excess_command)

    # select-intervals
    select = commands.add_parser("select-intervals", help="Independent increments inside a window")
    select.add_argument("--curve", required=True)
    _window_arg(select)
    select.add_argument("--depth", type=int, help="Grid depth (env CARNOT_GRID_DEPTH)")
    select.set_defaults(handler=select_intervals_command)

    # surgery check
    surgery = commands.add_parser("surgery", help="Surgery identities").add_subparsers(dest="action", required=True)
    check = surgery.add_parser("check", help="Run the identity fuzz suites")
    check.add_argument("--algebra", action="append", help="Algebra (repeatable)")
    check.add_argument("--suite", action="append", help="Suite name (repeatable)")
    check.add_argument("--cases", type=int, help="Cases per suite (env CARNOT_FUZZ_CASES)")
    check.set_defaults(handler=surgery_check_command)

    # shorten
    shorten = commands.add_parser("shorten", help="Cut-and-adjust shortening")
    shorten.add_argument("--curve", required=True)
    shorten.add_argument("--symmetric", action="store_true")
    shorten.add_argument("--eta", type=float, default=0.1)
    shorten.add_argument("--epsilon", "--eps", dest="epsilon", type=float, default=0.0)
    shorten.add_argument("--beta", type=float, default=0.05)
    shorten.add_argument("--rho-s", "--rho-last", dest="rho_s", type=float, default=0.5, help="Last window exponent")
    shorten.add_argument("--rho", nargs="+", type=float, help="Explicit window exponents (overrides --rho-s)")
    shorten.add_argument("--grid-depth", type=int)
    shorten.add_argument("--length-unit", type=float, default=1.0)
    shorten.add_argument("--tolerance", type=float, default=1e-8)
    shorten.add_argument("--sweep", nargs="+", type=float, metavar="ETA", help="Run an eta-sweep")
    shorten.add_argument("--scaling", type=float, metavar="LAMBDA", help="Run the scaling-law check")
    shorten.add_argument("--format", choices=["json", "csv"], default="json")
    shorten.add_argument("--curve-out", help="Write the shortened curve here")
    shorten.set_defaults(handler=shorten_command)

    # blowup
    blowup = commands.add_parser("blowup", help="Blow-up diagnostics at a time")
    blowup.add_argument("--curve", required=True)
    blowup.add_argument("--at", type=float, required=True, help="Anchor time")
    blowup.add_argument("--scales", nargs="+", type=float, required=True)
    blowup.add_argument("--one-sided", action="store_true")
    blowup.add_argument("--window-factor", type=float, default=1.0)
    blowup.add_argument("--tolerance", type=float, default=1e-2)
    blowup.add_argument("--format", choices=["json", "csv"], default="csv")
    blowup.set_defaults(handler=blowup_command)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Run one command and return its exit code."""
    args = build_parser().parse_args(argv)
    try:
        settings = get_settings().with_overrides(
            seed=args.seed, threads=args.threads, log_level=args.log_level
        )
    except CarnotError as e:
        print(error_record(e, e.exit_code), file=sys.stderr)
        return e.exit_code
    configure_logging(settings)
    logger.debug(f"Running {args.command} with seed={settings.seed}, threads={settings.threads}")
    return args.handler(args, CommandContext.create(settings, args.output))


if __name__ == "__main__":
    sys.exit(main())
