"""Command-line scenario runner.

Exit codes: 0 success, 1 configuration error (bad file, bad flag, unknown
preset), 2 numerical failure at a named sweep point.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .scenario import (
    ConfigError,
    PRESET_NAMES,
    SweepPointError,
    load_scenario,
    preset,
    run_scenario,
)
from .state_evolution import ConvergenceError


class _Parser(argparse.ArgumentParser):
    """argparse reports usage problems with exit code 2; remap them to 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="mcmimo",
        description="Run rate/fixed-point scenario sweeps and write CSV/JSON artifacts.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = _Parser(add_help=False)
    common.add_argument("--trials", type=int, default=None,
                        help="Monte Carlo realizations per sweep point")
    common.add_argument("--seed", type=int, default=None,
                        help="master seed for populations and channel draws")
    common.add_argument("--mode", choices=("analytic", "monte_carlo", "both"),
                        default=None, help="which result columns to compute")
    common.add_argument("--format", dest="formats", default=None,
                        help="comma-separated output formats (csv, json)")
    common.add_argument("--out", default=None, help="output directory")
    common.add_argument("--per-trial", action="store_true",
                        help="also write per-trial Monte Carlo CSVs")

    run_cmd = sub.add_parser("run", parents=[common],
                             help="run a scenario file")
    run_cmd.add_argument("scenario", help="path to a scenario file")

    preset_cmd = sub.add_parser("preset", parents=[common],
                                help="run a bundled reference scenario")
    preset_cmd.add_argument("name", help=f"one of {', '.join(PRESET_NAMES)}")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            sweep = load_scenario(args.scenario)
        else:
            sweep = preset(args.name, output_dir=args.out or "out")

        updates = {}
        if args.trials is not None:
            updates["trials"] = args.trials
        if args.seed is not None:
            updates["seed"] = args.seed
        if args.mode is not None:
            updates["mode"] = args.mode
        if args.formats is not None:
            updates["formats"] = tuple(
                tok for tok in args.formats.replace(",", " ").split() if tok
            )
        if args.out is not None:
            updates["output_dir"] = args.out
        if args.per_trial:
            updates["per_trial"] = True
        if updates:
            sweep = replace(sweep, **updates)

        manifest = run_scenario(sweep)
    except ConfigError as exc:
        print(f"mcmimo: config error: {exc}", file=sys.stderr)
        return 1
    except (SweepPointError, ConvergenceError) as exc:
        print(f"mcmimo: numerical failure: {exc}", file=sys.stderr)
        return 2

    n_files = len(manifest["outputs"]) + ("json" in sweep.formats)
    print(f"{sweep.name}: wrote {n_files} file(s) under {sweep.output_dir} "
          f"in {manifest['wall_time_s']:.2f}s")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
