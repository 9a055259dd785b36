"""Command line entry point ``chernoff-lab``.

Exit codes: 0 success, 1 validation/parse error, 2 runtime failure,
3 bound violation detected.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .errors import ChernoffLabError, ParseError, ValidationError
from .experiments import SCENARIOS, emit_csv, load_config, run_bounds_suite, run_scenario

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_RUNTIME = 2
EXIT_VIOLATION = 3

WORKERS_ENV = "CHERNOFF_LAB_WORKERS"


def _workers(cli_value):
    if cli_value is not None:
        return max(1, cli_value)
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValidationError(f"{WORKERS_ENV}={env!r} is not an integer") from None
    return 1


def _cmd_run(args):
    config = load_config(args.config)
    workers = _workers(args.workers)
    report = run_scenario(config, workers=workers)
    out_dir = Path(args.output) if args.output else Path(config.output_path).parent
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / Path(config.output_path).name
    emit_csv(report, path)
    print(report.summary())
    print(f"wrote {path}")
    if report.violations:
        return EXIT_VIOLATION
    if any(r.failed for r in report.rows):
        return EXIT_RUNTIME
    return EXIT_OK


def _cmd_scenarios(args):
    width = max(len(name) for name in SCENARIOS)
    for name, desc in SCENARIOS.items():
        print(f"{name:<{width}}  {desc}")
    return EXIT_OK


def _cmd_check_bounds(args):
    if args.trials < 1:
        raise ValidationError("--trials must be >= 1")
    summary = run_bounds_suite(seed=args.seed, trials=args.trials, t=args.t)
    print(f"chernoff sqrt(n) bound    {summary.chernoff_violations}/{summary.chernoff_trials} violations")
    print(f"ordered-product 1/n bound {summary.ordered_violations}/{summary.ordered_trials} violations")
    print(f"telescoping bound         {summary.telescoping_violations}/{summary.telescoping_trials} violations")
    return EXIT_VIOLATION if summary.violations else EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="chernoff-lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment config and write a CSV report")
    run.add_argument("config", help="JSON experiment config")
    run.add_argument("--output", help="output directory (default: directory of output_path)")
    run.add_argument("--workers", type=int, default=None,
                     help=f"parallel workers (default: ${WORKERS_ENV} or 1)")
    run.add_argument("--verbose", action="store_true")
    run.set_defaults(func=_cmd_run)

    scen = sub.add_parser("scenarios", help="list built-in scenarios")
    scen.set_defaults(func=_cmd_scenarios)

    cb = sub.add_parser("check-bounds", help="run the seeded bound sweeps")
    cb.add_argument("--seed", type=int, default=42)
    cb.add_argument("--trials", type=int, default=100)
    cb.add_argument("--t", type=float, default=1.0)
    cb.add_argument("--verbose", action="store_true")
    cb.set_defaults(func=_cmd_check_bounds)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    logging.basicConfig(
        level=logging.DEBUG if getattr(args, "verbose", False) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (ParseError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ChernoffLabError, OSError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
