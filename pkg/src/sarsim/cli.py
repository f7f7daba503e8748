"""Command-line front end.

Exit codes: 0 success, 2 usage or configuration error, 3 mission timeout.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import statistics
import sys
from dataclasses import replace
from pathlib import Path

from sarsim.config import ConfigError, ExperimentSpec, load_experiment
from sarsim.engine import MissionResult, RunConfig, ScenarioRecipe, default_plan, read_trace_csv, run_batch, run_mission
from sarsim.mission import StrategyParams
from sarsim.planner import FlightPlan, PlanError, path_length
from sarsim.plot import check_consistency, render_svg
from sarsim.world import DEFAULT_AREA, DEFAULT_PARAMS, Rect, Scenario, ScenarioError, ScenarioKind, generate_scenario

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_TIMEOUT = 3

RUN_COLUMNS = (
    "strategy", "seed", "mission_time", "completed", "confirmed", "false_positives_confirmed",
    "false_positives_rejected", "recall", "vertical_transitions", "distance_flown", "config_hash",
)
SUMMARY_COLUMNS = (
    "strategy", "runs", "median_time", "mean_time", "min_time", "max_time",
    "mean_fp_confirmed", "mean_fp_rejected", "mean_recall", "timeouts",
)


class UsageError(Exception):
    pass


def _count(text: str) -> float:
    """An integer or ``inf``, for batch sizes and trigger distances."""
    if text.strip().lower() in ("inf", "infinity"):
        return math.inf
    return float(text)


def _area(text: str) -> Rect:
    try:
        x0, y0, x1, y1 = (float(v) for v in text.split(","))
        return Rect(x0, y0, x1, y1)
    except (ValueError, ScenarioError) as exc:
        raise argparse.ArgumentTypeError(f"expected x_min,y_min,x_max,y_max: {exc}") from exc


def resolve_seed(flag: int | None, fallback: int = 0) -> int:
    if flag is not None:
        return flag
    env = os.environ.get("SARSIM_SEED")
    if env:
        try:
            return int(env)
        except ValueError as exc:
            raise UsageError(f"SARSIM_SEED must be an integer, got {env!r}") from exc
    return fallback


def _load_spec(args) -> ExperimentSpec | None:
    if getattr(args, "config", None) is None:
        return None
    return load_experiment(args.config)


# scenario -----------------------------------------------------------------

def cmd_scenario(args) -> int:
    spec = _load_spec(args)
    kind = ScenarioKind(args.kind)
    base = DEFAULT_PARAMS[kind]
    area = args.area or DEFAULT_AREA
    if spec is not None and isinstance(spec.scenario, ScenarioRecipe) and spec.scenario.kind is kind:
        base = spec.scenario.params or base
        area = args.area or spec.scenario.area
    overrides = {
        k: getattr(args, k)
        for k in ("clusters", "per_cluster", "spread", "count", "spacing")
        if getattr(args, k) is not None
    }
    params = replace(base, **overrides)
    scenario = generate_scenario(kind, area, params, resolve_seed(args.seed))
    scenario.save(args.out)
    n = len(scenario.targets)
    if n:
        xs = [t.x for t in scenario.targets]
        ys = [t.y for t in scenario.targets]
        box = f"bbox=({min(xs):.2f},{min(ys):.2f})-({max(xs):.2f},{max(ys):.2f})"
    else:
        box = "bbox=none"
    print(f"targets={n} {box}")
    return EXIT_OK


# plan ---------------------------------------------------------------------

def cmd_plan(args) -> int:
    spec = _load_spec(args)
    strategy = spec.strategy(None) if spec else StrategyParams()
    camera = spec.camera if spec else RunConfig.camera
    overlap = args.overlap if args.overlap is not None else (spec.overlap if spec else 0.2)
    altitude = args.altitude if args.altitude is not None else strategy.scan_altitude
    if args.scenario:
        area = Scenario.load(args.scenario).area
    else:
        area = args.area or DEFAULT_AREA
    plan = default_plan(area, camera, altitude, overlap)
    plan.save(args.out)
    print(f"waypoints={len(plan)} lane_spacing={plan.lane_spacing:.3f} length={path_length(plan):.2f}")
    return EXIT_OK


# run ----------------------------------------------------------------------

def _run_config(args, spec: ExperimentSpec | None) -> RunConfig:
    if spec is None:
        spec = ExperimentSpec(
            name="", scenario=ScenarioRecipe(ScenarioKind(args.kind)), strategies=(StrategyParams(),), seeds=(0,),
        )
    strategy = spec.strategy(args.strategy)
    changes = {}
    if args.batch_size is not None:
        changes["batch_size"] = args.batch_size
    if args.trigger_distance is not None:
        changes["trigger_distance"] = args.trigger_distance
    if changes:
        strategy = replace(strategy, **changes, name="")
    scenario = Scenario.load(args.scenario) if args.scenario else spec.scenario
    plan = FlightPlan.load(args.plan) if args.plan else spec.plan
    cfg = spec.run_configs()[0]
    return replace(
        cfg, scenario=scenario, strategy=strategy, plan=plan,
        dt=args.dt if args.dt is not None else spec.dt, seed=resolve_seed(args.seed, spec.seeds[0]),
    )


def summary_line(result: MissionResult) -> str:
    return (
        f"time={result.mission_time:.2f} R={len(result.confirmed)} "
        f"fp={result.false_positives_confirmed} recall={result.recall:.3f}"
    )


def cmd_run(args) -> int:
    cfg = _run_config(args, _load_spec(args))
    result, trace = run_mission(cfg)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "result.json").write_text(result.to_json() + "\n")
        (out / "trace.csv").write_text(trace.to_csv())
        cfg.resolve_scenario().save(out / "scenario.json")
    print(summary_line(result))
    if not result.completed:
        print(f"mission timed out after {cfg.max_sim_time:g} s", file=sys.stderr)
        return EXIT_TIMEOUT
    return EXIT_OK


# sweep --------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.4f}"
    return str(v)


def run_rows(results: list[MissionResult]) -> list[dict]:
    return [
        {
            "strategy": r.strategy, "seed": r.seed, "mission_time": r.mission_time, "completed": r.completed,
            "confirmed": len(r.confirmed), "false_positives_confirmed": r.false_positives_confirmed,
            "false_positives_rejected": r.false_positives_rejected, "recall": r.recall,
            "vertical_transitions": r.vertical_transitions, "distance_flown": r.distance_flown,
            "config_hash": r.config_hash,
        }
        for r in results
    ]


def summarize(rows: list[dict]) -> list[dict]:
    """Per-strategy statistics, in order of first appearance."""
    groups: dict[str, list[dict]] = {}
    for row in rows:
        groups.setdefault(row["strategy"], []).append(row)
    out = []
    for name, g in groups.items():
        times = [float(r["mission_time"]) for r in g]
        out.append({
            "strategy": name,
            "runs": len(g),
            "median_time": statistics.median(times),
            "mean_time": statistics.fmean(times),
            "min_time": min(times),
            "max_time": max(times),
            "mean_fp_confirmed": statistics.fmean(float(r["false_positives_confirmed"]) for r in g),
            "mean_fp_rejected": statistics.fmean(float(r["false_positives_rejected"]) for r in g),
            "mean_recall": statistics.fmean(float(r["recall"]) for r in g),
            "timeouts": sum(1 for r in g if str(r["completed"]) != "True"),
        })
    return out


def read_runs_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _write_csv(path: Path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow(_fmt(row[c]) for c in columns)


def format_table(summary: list[dict], title: str = "") -> str:
    head = f"{'Strategy':<24}{'Runs':>5}{'Median (s)':>12}{'Mean (s)':>11}{'Min (s)':>10}{'Max (s)':>10}{'FP conf':>9}{'FP rej':>8}{'Recall':>8}{'T/O':>5}"
    lines = [title] if title else []
    lines += [head, "-" * len(head)]
    for s in summary:
        lines.append(
            f"{s['strategy']:<24}{s['runs']:>5}{s['median_time']:>12.2f}{s['mean_time']:>11.2f}"
            f"{s['min_time']:>10.2f}{s['max_time']:>10.2f}{s['mean_fp_confirmed']:>9.2f}"
            f"{s['mean_fp_rejected']:>8.2f}{s['mean_recall']:>8.3f}{s['timeouts']:>5}"
        )
    return "\n".join(lines) + "\n"


def sweep(spec: ExperimentSpec, out: Path, workers: int = 1) -> list[dict]:
    results = run_batch(spec.run_configs(), spec.seeds, workers=workers)
    rows = run_rows(results)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "runs.csv", RUN_COLUMNS, rows)
    with open(out / "results.jsonl", "w") as fh:
        for r in results:
            fh.write(r.to_json() + "\n")
    summary = summarize(rows)
    _write_csv(out / "summary.csv", SUMMARY_COLUMNS, summary)
    (out / "summary.txt").write_text(format_table(summary, spec.name))
    return summary


def cmd_sweep(args) -> int:
    spec = _load_spec(args)
    if args.seeds is not None or args.seed is not None or os.environ.get("SARSIM_SEED"):
        start = resolve_seed(args.seed, spec.seeds[0])
        count = args.seeds if args.seeds is not None else len(spec.seeds)
        if count < 1:
            raise UsageError("--seeds must be at least 1")
        spec = replace(spec, seeds=tuple(range(start, start + count)))
    if args.dt is not None:
        spec = replace(spec, dt=args.dt)
    out = Path(args.out or spec.out or ".")
    summary = sweep(spec, out, args.workers)
    sys.stdout.write(format_table(summary, spec.name))
    if any(s["timeouts"] for s in summary):
        print("some runs timed out; see the completed column in runs.csv", file=sys.stderr)
    return EXIT_OK


# plot ---------------------------------------------------------------------

def cmd_plot(args) -> int:
    records = read_trace_csv(Path(args.trace).read_text())
    if not records:
        raise UsageError(f"{args.trace}: empty trace")
    scenario = Scenario.load(args.scenario)
    for w in check_consistency(records, scenario):
        print(f"warning: {w}", file=sys.stderr)
    Path(args.out).write_text(render_svg(records, scenario, args.title or ""))
    return EXIT_OK


# parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sarsim", description="Two-altitude UAV search simulator.")
    p.add_argument("-v", "--verbose", action="store_true", help="log warnings and progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, dt=True):
        sp.add_argument("--config", help="experiment file or bundled preset name (clustered, abundant, sparse)")
        sp.add_argument("--seed", type=int, help="seed; falls back to $SARSIM_SEED")
        if dt:
            sp.add_argument("--dt", type=float, help="simulation step in seconds")

    s = sub.add_parser("scenario", help="generate a target layout")
    common(s, dt=False)
    s.add_argument("--kind", choices=[k.value for k in ScenarioKind if k is not ScenarioKind.CUSTOM], default="clustered")
    s.add_argument("--area", type=_area, help="x_min,y_min,x_max,y_max in meters")
    s.add_argument("--clusters", type=int)
    s.add_argument("--per-cluster", dest="per_cluster", type=int)
    s.add_argument("--spread", type=float)
    s.add_argument("--count", type=int)
    s.add_argument("--spacing", type=float)
    s.add_argument("-o", "--out", required=True, help="scenario file to write")
    s.set_defaults(func=cmd_scenario)

    pl = sub.add_parser("plan", help="generate a lawnmower coverage plan")
    common(pl, dt=False)
    pl.add_argument("--scenario", help="take the area from this scenario file")
    pl.add_argument("--area", type=_area)
    pl.add_argument("--altitude", type=float, help="scan altitude the footprint is computed for")
    pl.add_argument("--overlap", type=float)
    pl.add_argument("-o", "--out", required=True, help="plan file to write")
    pl.set_defaults(func=cmd_plan)

    r = sub.add_parser("run", help="simulate one mission")
    common(r)
    r.add_argument("--kind", choices=[k.value for k in ScenarioKind if k is not ScenarioKind.CUSTOM], default="clustered",
                   help="scenario kind when no config is given")
    r.add_argument("--scenario", help="scenario file; overrides the config")
    r.add_argument("--plan", help="plan file; overrides the config")
    r.add_argument("--strategy", help="strategy name or index within the config")
    r.add_argument("--batch-size", dest="batch_size", type=_count)
    r.add_argument("--trigger-distance", dest="trigger_distance", type=_count)
    r.add_argument("--out", help="directory for result.json, trace.csv and scenario.json")
    r.set_defaults(func=cmd_run)

    sw = sub.add_parser("sweep", help="run every strategy of an experiment over its seeds")
    common(sw)
    sw.add_argument("--seeds", type=int, help="number of seeds, starting at --seed or the config's first seed")
    sw.add_argument("--workers", type=int, default=1)
    sw.add_argument("--out", help="output directory (default: the config's out, else .)")
    sw.set_defaults(func=cmd_sweep)

    pt = sub.add_parser("plot", help="render a trace as SVG")
    pt.add_argument("trace", help="trace CSV written by run --out")
    pt.add_argument("scenario", help="scenario file the trace was flown over")
    pt.add_argument("-o", "--out", required=True, help="SVG file to write")
    pt.add_argument("--title")
    pt.set_defaults(func=cmd_plot)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s: %(message)s")
    if args.command == "sweep" and args.config is None:
        parser.error("sweep requires --config")
    try:
        return args.func(args)
    except (ConfigError, ScenarioError, PlanError, UsageError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"sarsim {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
