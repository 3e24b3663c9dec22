"""Command line front end.

    sim run    --config scenario.toml [--seed N] [--out row.csv] [--trace trace.txt]
    sim sweep  --config scenario.toml --axis sources --values 1,2,5,10,15,20
               --seeds 5 --out sweep.csv [--workers N]
    sim oracle line5

Exit code 0 on success; 1 when the oracle expectations fail; 2 on a
configuration error (the message names the offending key).
"""

import argparse
import sys
from dataclasses import replace

from . import harness
from .scenario import Scenario, ScenarioError, load_scenario


def _load(path: str) -> Scenario:
    if path is None:
        return Scenario()
    return load_scenario(path)


def _cmd_run(args) -> int:
    scenario = _load(args.config)
    if args.seed is not None:
        scenario = replace(scenario, seed=args.seed)
    _, row = harness.run_scenario(scenario, trace_path=args.trace)
    lines = [",".join(harness.CSV_COLUMNS), ",".join(row)]
    if args.out:
        with open(args.out, "w") as fh:
            fh.write("\n".join(lines) + "\n")
    else:
        print("\n".join(lines))
    return 0


def _cmd_sweep(args) -> int:
    scenario = _load(args.config)
    values = [float(v) if "." in v else int(v) for v in args.values.split(",")]
    seeds = list(range(args.seeds))
    rows = harness.sweep(scenario, args.axis, values, seeds, workers=args.workers)
    harness.write_csv(args.out, rows)
    print(f"{len(rows)} rows -> {args.out}")
    return 0


def _cmd_oracle(args) -> int:
    if args.name != "line5":
        print(f"unknown oracle scenario: {args.name}", file=sys.stderr)
        return 2
    ok, lines = harness.line5_check()
    print("\n".join(lines))
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario, emit one CSV row")
    p_run.add_argument("--config", help="scenario TOML (defaults apply when omitted)")
    p_run.add_argument("--seed", type=int, help="override the scenario seed")
    p_run.add_argument("--out", help="write header+row to this file instead of stdout")
    p_run.add_argument("--trace", help="write the packet-event trace to this file")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a values x seeds x variants sweep")
    p_sweep.add_argument("--config", help="base scenario TOML")
    p_sweep.add_argument("--axis", required=True, choices=harness.SWEEP_AXES)
    p_sweep.add_argument("--values", required=True, help="comma-separated axis values")
    p_sweep.add_argument("--seeds", type=int, required=True, help="number of seeds (0..N-1)")
    p_sweep.add_argument("--out", required=True, help="output CSV path")
    p_sweep.add_argument("--workers", type=int, help="parallel worker processes")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_oracle = sub.add_parser("oracle", help="run a built-in hand-traced scenario")
    p_oracle.add_argument("name", help="oracle name (line5)")
    p_oracle.set_defaults(func=_cmd_oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
