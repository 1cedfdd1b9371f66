"""Command line: ``gwt run | validate | report``.

Exit codes: 0 success, 2 validation or invariant failure (bad scenario,
simulation error, mismatched tables, unreadable log).
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from .core import ConfigError
from .report import ValidationError, report, validate_tables
from .scenario import builtin_scenario, load_scenario
from .sim import RunLog, SimulationError, run

EXIT_FAILURE = 2


def _scenario_path(arg: str) -> Path:
    p = Path(arg)
    if p.exists():
        return p
    b = builtin_scenario(arg)
    return b if b.exists() else p


def cmd_run(args) -> int:
    cfg = load_scenario(_scenario_path(args.scenario))
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, rng_seed=args.seed)
    out = Path(args.out)
    result = run(cfg, out, live_gateway=args.live_gateway, port=args.port)
    report(result.log, out)
    print(f"{cfg.name}: {len(result.log)} ticks, {len(result.store.records)} records, "
          f"{len(result.alerts)} alerts -> {out}")
    return 0


def cmd_validate(args) -> int:
    rep = validate_tables(args.system, args.reference)
    sys.stdout.write(rep.format())
    return 0


def cmd_report(args) -> int:
    log = RunLog.read_csv(args.runlog)
    for p in report(log, args.dir):
        print(p)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gwt", description="Greenhouse digital twin")
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a scenario and write the log, store and report")
    r.add_argument("scenario", help="scenario JSON file or the name of a shipped scenario")
    r.add_argument("--seed", type=int, default=None, help="override rng_seed")
    r.add_argument("--out", default="run_out", help="output directory (default: run_out)")
    r.add_argument("--live-gateway", action="store_true", help="send telemetry through a real TCP listener")
    r.add_argument("--port", type=int, default=None, help="gateway port (default: $GWT_PORT or 8000)")
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("validate", help="compare two row-aligned measurement tables")
    v.add_argument("system")
    v.add_argument("reference")
    v.set_defaults(func=cmd_validate)

    p = sub.add_parser("report", help="write summary.txt, timeseries.csv, decisions.csv from a run log")
    p.add_argument("runlog")
    p.add_argument("dir")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValidationError, SimulationError, ValueError, OSError) as exc:
        print(f"gwt {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
