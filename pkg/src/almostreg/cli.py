"""Command line entry point for running scenario suites."""
from __future__ import annotations

import argparse
import os
import sys

from . import __version__
from .scenarios import ScenarioError, all_expectations_met, emit_report, load_scenario, run_suite


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="almostreg",
        description="Run almost-regularity scenario files and report results.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one or more scenario JSON files")
    run.add_argument("paths", nargs="+", help="scenario JSON files")
    run.add_argument("--seed", type=int, default=0,
                     help="seed for randomized checks (default 0)")
    run.add_argument("--jobs", type=int,
                     default=int(os.environ.get("ALMOSTREG_JOBS", "1")),
                     help="parallel worker processes (default ALMOSTREG_JOBS or 1)")
    run.add_argument("--format", choices=("text", "machine"), default="text",
                     help="report format (machine output is byte-stable)")
    run.add_argument("--tolerance-scale", type=float, default=1.0,
                     help="multiply every expectation tolerance by this factor")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.jobs < 1:
        parser.error("--jobs must be at least 1")
    if args.tolerance_scale <= 0:
        parser.error("--tolerance-scale must be positive")
    try:
        scenarios = [load_scenario(p) for p in args.paths]
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    reports = run_suite(scenarios, seed=args.seed, jobs=args.jobs,
                        tolerance_scale=args.tolerance_scale)
    payload = emit_report(reports, format=args.format)
    sys.stdout.buffer.write(payload)
    sys.stdout.buffer.flush()
    return 0 if all_expectations_met(reports) else 1


if __name__ == "__main__":
    raise SystemExit(main())
