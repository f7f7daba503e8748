"""Experiment files: one TOML document describing a full comparison.

Layout::

    name = "clustered"
    seeds = { start = 0, count = 20 }   # or an explicit list
    dt = 0.1

    [scenario]          # kind + params, or file = "targets.json"
    kind = "clustered"

    [planner]           # overlap, or file = "plan.json"
    [speeds]
    [camera]            # field-of-view angles in degrees
    [detector]
    [strategy]          # fields shared by every strategy below

    [[strategies]]
    name = "n_c=1"
    batch_size = 1

Numbers accept ``inf`` (TOML's own literal) or the string ``"inf"``.
When the scenario block has no ``seed`` a fresh scenario is generated from
every run seed. Relative file paths resolve against the experiment file.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, fields, replace
from importlib import resources
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from sarsim.engine import RunConfig, ScenarioRecipe
from sarsim.mission import StrategyParams
from sarsim.perception import DetectorModel
from sarsim.planner import FlightPlan, PlanError
from sarsim.vehicle import CameraModel, SpeedProfile
from sarsim.world import DEFAULT_PARAMS, Rect, Scenario, ScenarioError, ScenarioKind, ScenarioParams

PRESETS = ("clustered", "abundant", "sparse")


class ConfigError(ValueError):
    """A malformed experiment file; the message names the offending field."""


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    scenario: Scenario | ScenarioRecipe
    strategies: tuple[StrategyParams, ...]
    seeds: tuple[int, ...]
    speeds: SpeedProfile = SpeedProfile()
    camera: CameraModel = CameraModel()
    detector: DetectorModel = DetectorModel()
    plan: FlightPlan | None = None
    overlap: float = 0.2
    dt: float = 0.1
    max_sim_time: float = 3600.0
    match_radius: float = 3.0
    out: str = ""

    def run_configs(self) -> list[RunConfig]:
        """One RunConfig per strategy, in file order, seeded with the first seed."""
        return [
            RunConfig(
                self.scenario, strategy=s, speeds=self.speeds, camera=self.camera, detector=self.detector,
                plan=self.plan, overlap=self.overlap, dt=self.dt, seed=self.seeds[0],
                max_sim_time=self.max_sim_time, match_radius=self.match_radius,
            )
            for s in self.strategies
        ]

    def strategy(self, key: str | None) -> StrategyParams:
        """Look a strategy up by name or by position; ``None`` means the first."""
        if key is None:
            return self.strategies[0]
        for s in self.strategies:
            if s.label == key:
                return s
        if key.isdigit() and int(key) < len(self.strategies):
            return self.strategies[int(key)]
        names = ", ".join(s.label for s in self.strategies)
        raise ConfigError(f"strategy {key!r} not found; available: {names}")

    def with_overrides(self, **changes) -> ExperimentSpec:
        return replace(self, **{k: v for k, v in changes.items() if v is not None})


def _number(where: str, value) -> float:
    if isinstance(value, str) and value.strip().lower() in ("inf", "+inf", "infinity"):
        return math.inf
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _build(cls, where: str, block: dict, renames: dict | None = None, **extra):
    if not isinstance(block, dict):
        raise ConfigError(f"{where}: expected a table")
    known = {f.name: f for f in fields(cls)}
    renames = renames or {}
    kwargs = dict(extra)
    for key, value in block.items():
        name, convert = renames.get(key, (key, None))
        if name not in known:
            raise ConfigError(f"{where}.{key}: unknown field")
        if convert is not None:
            kwargs[name] = convert(_number(f"{where}.{key}", value))
        elif known[name].type in ("str", str):
            if not isinstance(value, str):
                raise ConfigError(f"{where}.{key}: expected a string, got {value!r}")
            kwargs[name] = value
        elif known[name].type in ("int", int):
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"{where}.{key}: expected an integer, got {value!r}")
            kwargs[name] = value
        else:
            kwargs[name] = _number(f"{where}.{key}", value)
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


_DEGREES = {
    "horizontal_fov_deg": ("horizontal_fov", math.radians),
    "vertical_fov_deg": ("vertical_fov", math.radians),
}


def _resolve(base: Path | None, name: str) -> Path:
    p = Path(name)
    if not p.is_absolute() and base is not None:
        p = base / p
    if not p.exists():
        raise ConfigError(f"referenced file {str(p)!r} does not exist")
    return p


def _scenario(block: dict, base: Path | None) -> Scenario | ScenarioRecipe:
    if not isinstance(block, dict):
        raise ConfigError("scenario: expected a table")
    block = dict(block)
    if "file" in block:
        path = _resolve(base, block.pop("file"))
        if block:
            raise ConfigError(f"scenario: 'file' excludes {sorted(block)}")
        try:
            return Scenario.load(path)
        except (ScenarioError, ValueError) as exc:
            raise ConfigError(f"scenario.file: {exc}") from exc
    try:
        kind = ScenarioKind(block.pop("kind", "clustered"))
    except ValueError as exc:
        raise ConfigError(f"scenario.kind: {exc}") from exc
    area = _build(Rect, "scenario.area", block.pop("area")) if "area" in block else None
    params = None
    if "params" in block:
        base_params = DEFAULT_PARAMS.get(kind, ScenarioParams())
        merged = {f.name: getattr(base_params, f.name) for f in fields(ScenarioParams)}
        merged.update(block.pop("params"))
        params = _build(ScenarioParams, "scenario.params", merged)
    seed = block.pop("seed", None)
    if block:
        raise ConfigError(f"scenario.{sorted(block)[0]}: unknown field")
    recipe = ScenarioRecipe(kind, area or ScenarioRecipe.area, params)
    if seed is None:
        return recipe
    try:
        return recipe.build(int(seed))
    except ScenarioError as exc:
        raise ConfigError(f"scenario: {exc}") from exc


def _seeds(value) -> tuple[int, ...]:
    if isinstance(value, int) and not isinstance(value, bool):
        return (value,)
    if isinstance(value, list) and value and all(isinstance(s, int) and s >= 0 for s in value):
        return tuple(value)
    if isinstance(value, dict) and set(value) <= {"start", "count"}:
        start, count = value.get("start", 0), value.get("count", 1)
        if isinstance(start, int) and isinstance(count, int) and start >= 0 and count >= 1:
            return tuple(range(start, start + count))
    raise ConfigError(f"seeds: expected a non-empty list or {{start, count}}, got {value!r}")


def parse_experiment(data: dict, base: Path | None = None) -> ExperimentSpec:
    data = dict(data)
    top = {}
    for key in ("dt", "max_sim_time", "match_radius"):
        if key in data:
            top[key] = _number(key, data.pop(key))
    name = str(data.pop("name", ""))
    out = str(data.pop("out", ""))
    seeds = _seeds(data.pop("seeds", [0]))
    scenario = _scenario(data.pop("scenario", {}), base)

    planner = dict(data.pop("planner", {}))
    plan = None
    overlap = 0.2
    if "file" in planner:
        try:
            plan = FlightPlan.load(_resolve(base, planner.pop("file")))
        except (PlanError, ValueError, KeyError) as exc:
            raise ConfigError(f"planner.file: {exc}") from exc
    if "overlap" in planner:
        overlap = _number("planner.overlap", planner.pop("overlap"))
        if not 0.0 <= overlap < 1.0:
            raise ConfigError("planner.overlap: must lie in [0, 1)")
    if planner:
        raise ConfigError(f"planner.{sorted(planner)[0]}: unknown field")

    speeds = _build(SpeedProfile, "speeds", data.pop("speeds", {}), {"yaw_rate_deg": ("yaw_rate", math.radians)})
    camera = _build(CameraModel, "camera", data.pop("camera", {}), _DEGREES)
    detector = _build(DetectorModel, "detector", data.pop("detector", {}))

    shared = data.pop("strategy", {})
    listed = data.pop("strategies", [{}])
    if not isinstance(listed, list) or not listed:
        raise ConfigError("strategies: expected at least one [[strategies]] table")
    strategies = []
    for i, block in enumerate(listed):
        if not isinstance(block, dict) or not isinstance(shared, dict):
            raise ConfigError(f"strategies[{i}]: expected a table")
        strategies.append(_build(StrategyParams, f"strategies[{i}]", {**shared, **block}))
    if data:
        raise ConfigError(f"{sorted(data)[0]}: unknown field")

    try:
        return ExperimentSpec(
            name=name, scenario=scenario, strategies=tuple(strategies), seeds=seeds, speeds=speeds,
            camera=camera, detector=detector, plan=plan, overlap=overlap, out=out, **top,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def loads_experiment(text: str, base: Path | None = None) -> ExperimentSpec:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"not valid TOML: {exc}") from exc
    return parse_experiment(data, base)


def preset_text(name: str) -> str:
    return resources.files("sarsim.presets").joinpath(f"{name}.exp").read_text()


def load_experiment(ref: str | Path) -> ExperimentSpec:
    """Read an experiment file, or a bundled preset when ``ref`` is a preset name."""
    path = Path(ref)
    if not path.exists() and str(ref) in PRESETS:
        return loads_experiment(preset_text(str(ref)))
    if not path.exists():
        raise ConfigError(f"config {str(ref)!r} not found (bundled presets: {', '.join(PRESETS)})")
    return loads_experiment(path.read_text(), path.parent)
