"""Run every scenario under scenarios/ and print the suite report.

Thin wrapper over the library API; exits 0 only when all expectations hold,
matching the CLI contract of `almostreg run`.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from almostreg.scenarios import all_expectations_met, emit_report, run_suite

REPO_ROOT = Path(__file__).resolve().parents[1]


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--dir", type=Path, default=REPO_ROOT / "scenarios",
                        help="directory of scenario files")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--format", choices=("text", "machine"), default="text")
    args = parser.parse_args(argv)

    paths = sorted(args.dir.glob("*.json"))
    if not paths:
        print(f"no scenario files under {args.dir}", file=sys.stderr)
        return 2
    reports = run_suite(paths, seed=args.seed, jobs=args.jobs)
    sys.stdout.buffer.write(emit_report(reports, format=args.format))
    return 0 if all_expectations_met(reports) else 1


if __name__ == "__main__":
    raise SystemExit(main())
