"""Command-line front end.

Subcommands:
  gen-contacts        write the contact plan of a scenario
  gen-weather         write one replication's weather plan
  run                 execute one replication, write result + event log
  sweep               run a full grid, write results/aggregates CSVs
  extract-equivalency derive equivalency points from a results CSV

Exit status: 0 on success, 1 on validation errors (bad flags, malformed
config, empty grid), 2 on runtime errors.  All randomness flows from the
seed; `HAGS_SIM_SEED` supplies a default when no seed is given.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import engine, harness
from .plan import serialize_contact_plan
from .scenario import (
    ScenarioError,
    build_contact_plan,
    parse_scenario,
    sample_scenario_weather,
)
from .weather import serialize_weather_plan


class _ValidationError(Exception):
    pass


def _default_seed() -> int | None:
    raw = os.environ.get("HAGS_SIM_SEED")
    if raw is None:
        return None
    try:
        return int(raw)
    except ValueError:
        raise _ValidationError(f"HAGS_SIM_SEED is not an integer: {raw!r}") from None


def _load_scenario(path: str, seed: int | None):
    p = Path(path)
    try:
        text = p.read_text("utf-8")
    except OSError as e:
        raise _ValidationError(f"cannot read scenario {path}: {e}") from None
    try:
        cfg = parse_scenario(text, p.parent)
    except ScenarioError as e:
        raise _ValidationError(f"{path}: {e}") from None
    if seed is None:
        seed = _default_seed()
    if seed is not None:
        from dataclasses import replace

        cfg = replace(cfg, seed=seed)
    return cfg


def _cmd_gen_contacts(args) -> int:
    cfg = _load_scenario(args.scenario, args.seed)
    plan = build_contact_plan(cfg)
    Path(args.out).write_text(serialize_contact_plan(plan), "utf-8")
    print(f"wrote {len(plan.contacts)} contacts to {args.out}")
    return 0


def _cmd_gen_weather(args) -> int:
    cfg = _load_scenario(args.scenario, args.seed)
    weather = sample_scenario_weather(cfg, args.rep)
    Path(args.out).write_text(serialize_weather_plan(weather), "utf-8")
    n = sum(len(v) for v in weather.intervals.values())
    print(f"wrote {n} blocked intervals to {args.out}")
    return 0


def _cmd_run(args) -> int:
    cfg = _load_scenario(args.scenario, args.seed)
    plan = build_contact_plan(cfg)
    weather = sample_scenario_weather(cfg, args.rep)
    result = engine.run(cfg, plan, weather, args.rep, log_events=True)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "result.json").write_text(result.to_json() + "\n", "utf-8")
    (outdir / "events.log").write_text("\n".join(result.event_log) + "\n", "utf-8")
    print(
        f"replication {args.rep}: delivered {result.delivered}/{result.generated}"
        f" -> {outdir}"
    )
    return 0


def _cmd_sweep(args) -> int:
    p = Path(args.grid)
    try:
        text = p.read_text("utf-8")
    except OSError as e:
        raise _ValidationError(f"cannot read grid {args.grid}: {e}") from None
    try:
        grid = harness.parse_grid(text, p.parent)
    except harness.GridError as e:
        raise _ValidationError(f"{args.grid}: {e}") from None
    if args.seed is None:
        args.seed = _default_seed()
    if args.seed is not None:
        from dataclasses import replace

        grid.base = replace(grid.base, seed=args.seed)

    rows = harness.run_sweep(grid, jobs=args.jobs)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    harness.write_results_csv(rows, outdir / "results.csv")
    harness.write_aggregates_csv(harness.aggregate_rows(rows), outdir / "aggregates.csv")
    print(f"{len(rows)} cells -> {outdir}/results.csv, {outdir}/aggregates.csv")
    return 0


def _cmd_extract_equivalency(args) -> int:
    try:
        rows = harness.read_results_csv(args.results)
    except OSError as e:
        raise _ValidationError(f"cannot read results {args.results}: {e}") from None
    except harness.GridError as e:
        raise _ValidationError(str(e)) from None
    points = harness.extract_equivalency_points(rows)
    harness.write_equivalency_csv(points, args.out)
    print(f"{len(points)} equivalency points -> {args.out}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hagsim",
        description="Optical LEO downlink simulator with terrestrial and high-altitude ground stations",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-contacts", help="write a scenario's contact plan")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(fn=_cmd_gen_contacts)

    p = sub.add_parser("gen-weather", help="write one replication's weather plan")
    p.add_argument("--scenario", required=True)
    p.add_argument("--rep", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(fn=_cmd_gen_weather)

    p = sub.add_parser("run", help="run one replication")
    p.add_argument("--scenario", required=True)
    p.add_argument("--rep", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(fn=_cmd_run)

    p = sub.add_parser("sweep", help="run a sweep grid")
    p.add_argument("--grid", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_sweep)

    p = sub.add_parser("extract-equivalency", help="extract curve crossings from results")
    p.add_argument("--results", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_extract_equivalency)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 1 if e.code not in (0, None) else 0
    try:
        return args.fn(args)
    except _ValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # noqa: BLE001 - boundary of the process
        print(f"runtime error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
