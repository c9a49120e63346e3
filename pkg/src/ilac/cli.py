"""Command-line interface.

Subcommands:
  run     solve the configured sweep and write summary.csv / trace.csv
  curves  build the accuracy curves alone and export them as CSV
  verify  re-check an emitted summary.csv

Exit codes: 0 success, 1 configuration or verification error, 2 every sweep
point infeasible, 3 I/O error.
"""

from __future__ import annotations

import argparse
import sys

from . import runner, sysmodel

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INFEASIBLE = 2
EXIT_IO = 3


def _config_from_args(args) -> runner.RunConfig:
    return runner.parse_config(args.config, args.set or (), seed=args.seed)


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key=value configuration file")
    parser.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override one configuration key")
    parser.add_argument("--seed", type=int, help="override the global seed")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ilac",
        description="Joint learning/communication resource-allocation simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the configured bandwidth sweep")
    _add_config_flags(p_run)
    p_run.add_argument("--out", default="out", help="output directory for CSVs")

    p_curves = sub.add_parser("curves", help="build and export accuracy curves")
    _add_config_flags(p_curves)
    p_curves.add_argument("--out", default="curves.csv", help="curve CSV path")

    p_verify = sub.add_parser("verify", help="re-check an emitted summary.csv")
    p_verify.add_argument("--result", required=True, help="path to summary.csv")

    args = parser.parse_args(argv)

    if args.command == "verify":
        try:
            problems = runner.verify_summary(args.result)
        except OSError as exc:
            print(f"error: cannot read {args.result}: {exc}", file=sys.stderr)
            return EXIT_IO
        for problem in problems:
            print(f"verify: {problem}", file=sys.stderr)
        if problems:
            return EXIT_CONFIG
        print("verify: all rows consistent")
        return EXIT_OK

    try:
        cfg = _config_from_args(args)
    except (ValueError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "curves":
        try:
            curves = runner.build_curves(cfg)
            sysmodel.save_curves(curves.values(), args.out)
        except OSError as exc:
            print(f"I/O error: {exc}", file=sys.stderr)
            return EXIT_IO
        print(f"wrote {len(curves)} curves to {args.out}")
        return EXIT_OK

    # run
    try:
        result = runner.run(cfg)
        summary_path, trace_path = runner.write_csv(result, args.out)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    feasible_rows = sum(row.result is not None for row in result.rows)
    print(f"wrote {summary_path} and {trace_path} "
          f"({feasible_rows}/{len(result.rows)} rows feasible)")
    if not result.any_feasible:
        print("error: every sweep point was infeasible", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
