"""Fixed-step closed loop: sense, decide, move. Plus metrics and analytic oracles."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

from sarsim.mission import (
    INF,
    ControllerState,
    Mode,
    StrategyParams,
    controller_step,
    initial_state,
)
from sarsim.perception import Detection, DetectorModel, sense
from sarsim.planner import FlightPlan, path_length, plan_lawnmower
from sarsim.vehicle import (
    CameraModel,
    SpeedProfile,
    VehicleState,
    advance,
    is_turning,
)
from sarsim.world import DEFAULT_AREA, Rect, Scenario, ScenarioKind, ScenarioParams, generate_scenario

EVENTS = ("detection", "mode_switch", "target_confirmed", "target_discarded", "waypoint_reached")
QUIET_EVERY = 10
MAX_CHAIN = 64


@dataclass(frozen=True)
class ScenarioRecipe:
    """A scenario that is generated from the run seed instead of being fixed."""

    kind: ScenarioKind
    area: Rect = DEFAULT_AREA
    params: ScenarioParams | None = None

    def build(self, seed: int) -> Scenario:
        return generate_scenario(self.kind, self.area, self.params, seed)


@dataclass(frozen=True)
class RunConfig:
    scenario: Scenario | ScenarioRecipe
    strategy: StrategyParams = StrategyParams()
    speeds: SpeedProfile = SpeedProfile()
    camera: CameraModel = CameraModel()
    detector: DetectorModel = DetectorModel()
    plan: FlightPlan | None = None  # None: lawnmower over the scenario area
    overlap: float = 0.2
    dt: float = 0.1
    seed: int = 0
    max_sim_time: float = 3600.0
    match_radius: float = 3.0

    def __post_init__(self):
        if not self.dt > 0 or not self.max_sim_time > 0 or not self.match_radius > 0:
            raise ValueError("dt, max_sim_time and match_radius must be positive")

    def resolve_scenario(self) -> Scenario:
        if isinstance(self.scenario, ScenarioRecipe):
            return self.scenario.build(self.seed)
        return self.scenario

    def resolve_plan(self, scenario: Scenario) -> FlightPlan:
        if self.plan is not None:
            return self.plan
        return default_plan(scenario.area, self.camera, self.strategy.scan_altitude, self.overlap)

    def to_dict(self) -> dict:
        d = {
            "strategy": asdict(self.strategy),
            "speeds": asdict(self.speeds),
            "camera": asdict(self.camera),
            "detector": asdict(self.detector),
            "plan": None if self.plan is None else self.plan.to_dict(),
            "overlap": self.overlap,
            "dt": self.dt,
            "seed": self.seed,
            "max_sim_time": self.max_sim_time,
            "match_radius": self.match_radius,
        }
        if isinstance(self.scenario, ScenarioRecipe):
            d["scenario"] = {
                "kind": self.scenario.kind.value,
                "area": asdict(self.scenario.area),
                "params": None if self.scenario.params is None else asdict(self.scenario.params),
            }
        else:
            d["scenario"] = self.scenario.to_dict()
        return d

    def config_hash(self) -> str:
        """Digest of everything except the seed."""
        d = self.to_dict()
        d.pop("seed")
        blob = json.dumps(d, sort_keys=True, default=_jsonable)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _jsonable(v):
    if isinstance(v, float) and math.isinf(v):
        return "inf"
    raise TypeError(f"cannot serialise {v!r}")


def default_plan(area: Rect, camera: CameraModel, scan_altitude: float, overlap: float) -> FlightPlan:
    """Lawnmower whose lane spacing comes from the footprint across the lanes."""
    w, h = camera.footprint_size(scan_altitude)
    across = h if area.width >= area.height else w
    return plan_lawnmower(area, across, overlap, scan_altitude)


@dataclass(frozen=True, slots=True)
class TraceRecord:
    t: float
    x: float
    y: float
    alt: float
    mode: Mode
    events: tuple[str, ...] = ()
    detail: str = ""

    @property
    def event(self) -> str:
        return ";".join(self.events) if self.events else "none"


@dataclass
class Trace:
    records: list[TraceRecord] = field(default_factory=list)
    mission_time: float = 0.0
    completed: bool = False
    detections: int = 0
    spurious_detections: int = 0

    def __len__(self):
        return len(self.records)

    def to_csv(self, every: int = QUIET_EVERY) -> str:
        """Rows for every step with an event, every ``every``-th quiet step, and the last step."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "x", "y", "alt", "mode", "event", "detail"])
        last = len(self.records) - 1
        for i, r in enumerate(self.records):
            if r.events or i % every == 0 or i == last:
                w.writerow([f"{r.t:.3f}", f"{r.x:.3f}", f"{r.y:.3f}", f"{r.alt:.3f}", r.mode.value, r.event, r.detail])
        return buf.getvalue()


def read_trace_csv(text: str) -> list[TraceRecord]:
    rows = csv.DictReader(io.StringIO(text))
    out = []
    for row in rows:
        ev = row["event"]
        out.append(
            TraceRecord(
                float(row["t"]), float(row["x"]), float(row["y"]), float(row["alt"]), Mode(row["mode"]),
                () if ev == "none" else tuple(ev.split(";")), row.get("detail", "") or "",
            )
        )
    return out


@dataclass(frozen=True)
class MissionResult:
    mission_time: float
    confirmed: tuple[tuple[float, float], ...]
    false_positives_confirmed: int
    false_positives_rejected: int
    recall: float
    vertical_transitions: int
    distance_flown: float
    completed: bool
    detections: int = 0
    spurious_detections: int = 0
    seed: int = 0
    config_hash: str = ""
    strategy: str = ""

    def record(self) -> dict:
        d = asdict(self)
        d["confirmed"] = [list(p) for p in self.confirmed]
        return d

    def to_json(self) -> str:
        return json.dumps(self.record(), sort_keys=True)


def match_confirmed(confirmed, scenario: Scenario, match_radius: float) -> dict[int, int]:
    """Greedy one-to-one association of confirmed positions to targets.

    Pairs within ``match_radius`` are taken shortest first; ties go to the
    lower target id, then the earlier confirmation. Returns {R index: target id}.
    """
    pairs = []
    for i, (x, y) in enumerate(confirmed):
        for t in scenario.targets:
            d = math.hypot(t.x - x, t.y - y)
            if d <= match_radius:
                pairs.append((d, t.id, i))
    pairs.sort()
    used_r: set[int] = set()
    used_t: set[int] = set()
    out = {}
    for _, tid, i in pairs:
        if i in used_r or tid in used_t:
            continue
        used_r.add(i)
        used_t.add(tid)
        out[i] = tid
    return out


def compute_metrics(trace: Trace, confirmed, scenario: Scenario, match_radius: float) -> MissionResult:
    if not trace.records:
        raise ValueError("empty trace")
    confirmed = tuple(tuple(p) for p in confirmed)
    matches = match_confirmed(confirmed, scenario, match_radius)
    n = len(scenario.targets)
    recall = 1.0 if n == 0 else len(matches) / n
    recs = trace.records
    dist = 0.0
    switches = 0
    rejected = 0
    for a, b in zip(recs, recs[1:]):
        dist += math.dist((a.x, a.y, a.alt), (b.x, b.y, b.alt))
    for r in recs:
        for e in r.events:
            if e == "mode_switch":
                switches += 1
            elif e == "target_discarded":
                rejected += 1
    return MissionResult(
        mission_time=trace.mission_time,
        confirmed=confirmed,
        false_positives_confirmed=len(confirmed) - len(matches),
        false_positives_rejected=rejected,
        recall=recall,
        vertical_transitions=switches,
        distance_flown=dist,
        completed=trace.completed,
        detections=trace.detections,
        spurious_detections=trace.spurious_detections,
    )


def _detail(before: ControllerState, after: ControllerState, dets) -> str:
    if not dets and after.confirmed is before.confirmed and after.discarded is before.discarded:
        return ""
    parts = []
    if dets:
        parts.append(f"seen={len(dets)}")
    for x, y in after.confirmed[len(before.confirmed):]:
        parts.append(f"confirmed={x:.2f}:{y:.2f}")
    for x, y in after.discarded[len(before.discarded):]:
        parts.append(f"discarded={x:.2f}:{y:.2f}")
    return " ".join(parts)


def _perception_rng(seed: int) -> random.Random:
    return random.Random(f"perception:{seed}")


def run_mission(config: RunConfig) -> tuple[MissionResult, Trace]:
    """Simulate one mission until it completes or ``max_sim_time`` elapses."""
    scenario = config.resolve_scenario()
    plan = config.resolve_plan(scenario)
    if not plan.waypoints:
        raise ValueError("plan has no waypoints")
    params, speeds, camera, detector = config.strategy, config.speeds, config.camera, config.detector
    dt = config.dt
    rng = _perception_rng(config.seed)
    area = scenario.area

    first = plan.waypoints[0]
    vehicle = VehicleState(first.x, first.y, 0.0)
    ctrl = initial_state(plan.waypoints, (first.x, first.y))
    trace = Trace()
    records = trace.records
    k = 0
    n_det = n_spur = 0

    while True:
        t = k * dt
        if vehicle.altitude > 0:
            dets = sense(detector, vehicle, scenario, camera, dt, rng)
            if dets:
                n_det += len(dets)
                n_spur += sum(1 for d in dets if d.source_target_id is None)
                # the search area is known; reports outside it are not candidates
                dets = [d for d in dets if area.contains(d.x, d.y)]
        else:
            dets = []
        before = ctrl
        start = vehicle
        ctrl, cmd = controller_step(ctrl, vehicle, dets, params, speeds)
        events = list(ctrl.events)
        finished_at = t if cmd is None else None

        if cmd is not None and t >= config.max_sim_time:
            records.append(TraceRecord(t, vehicle.x, vehicle.y, vehicle.altitude, ctrl.mode, tuple(events),
                                       _detail(before, ctrl, dets)))
            trace.mission_time = config.max_sim_time
            break

        budget = dt
        for _ in range(MAX_CHAIN):
            if cmd is None:
                break
            vehicle, used = advance(vehicle, cmd.target, speeds, cmd.speed, budget)
            budget -= used
            if budget <= 1e-12:
                break
            # waypoint reached with time to spare: let the controller pick the next one
            ctrl, nxt = controller_step(ctrl, vehicle, (), params, speeds)
            events.extend(ctrl.events)
            if nxt is None:
                finished_at = vehicle.time
                cmd = None
                break
            if nxt == cmd and used == 0.0:
                break
            cmd = nxt
        turning = is_turning(start, vehicle, dt)
        vehicle = VehicleState(vehicle.x, vehicle.y, vehicle.altitude, vehicle.horizontal_speed,
                               vehicle.vertical_speed, vehicle.heading, turning, (k + 1) * dt)

        records.append(TraceRecord(t, start.x, start.y, start.altitude, ctrl.mode if cmd is not None else before.mode,
                                   tuple(events), _detail(before, ctrl, dets)))
        k += 1
        if finished_at is not None:
            records.append(TraceRecord(k * dt, vehicle.x, vehicle.y, vehicle.altitude, Mode.SCAN, (), ""))
            trace.completed = True
            trace.mission_time = finished_at
            break

    trace.detections = n_det
    trace.spurious_detections = n_spur
    result = compute_metrics(trace, ctrl.confirmed, scenario, config.match_radius)
    result = replace(result, seed=config.seed, config_hash=config.config_hash(), strategy=params.label)
    return result, trace


def oracle_scan_time(plan: FlightPlan, speeds: SpeedProfile, scan_altitude: float, initial_altitude: float = 0.0) -> float:
    """Closed-form duration of a detection-free sweep: climb, then the plan at scan speed."""
    dz = scan_altitude - initial_altitude
    climb = dz / speeds.climb_rate if dz >= 0 else -dz / speeds.descent_rate
    return climb + path_length(plan) / speeds.scan_speed


def _run_one(cfg: RunConfig) -> MissionResult:
    return run_mission(cfg)[0]


def run_batch(configs, seeds, workers: int = 1) -> list[MissionResult]:
    """Every config under every seed, config-major; output order never depends on scheduling."""
    configs, seeds = list(configs), list(seeds)
    if not configs or not seeds:
        raise ValueError("run_batch needs at least one config and one seed")
    jobs = [replace(c, seed=int(s)) for c in configs for s in seeds]
    if workers <= 1 or len(jobs) == 1:
        return [_run_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_one, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


def fly_survey(
    plan: FlightPlan,
    altitude: float,
    speed: float,
    detector: DetectorModel,
    camera: CameraModel,
    scenario: Scenario,
    dt: float = 0.1,
    seed: int = 0,
    duration: float | None = None,
) -> list[Detection]:
    """Fly ``plan`` at constant altitude with the camera on and no controller.

    Starts airborne at the first waypoint. Stops at the last waypoint or
    after ``duration`` seconds, whichever comes first.
    """
    rng = _perception_rng(seed)
    speeds = SpeedProfile(scan_speed=speed)
    w0 = plan.waypoints[0]
    if len(plan.waypoints) > 1:
        w1 = plan.waypoints[1]
        h0 = math.atan2(w1.y - w0.y, w1.x - w0.x) % (2 * math.pi)
    else:
        h0 = 0.0
    vehicle = VehicleState(w0.x, w0.y, altitude, heading=h0)
    queue = list(plan.waypoints[1:])
    out: list[Detection] = []
    k = 0
    limit = INF if duration is None else duration
    while queue and k * dt < limit - 1e-9:
        out.extend(sense(detector, vehicle, scenario, camera, dt, rng))
        start = vehicle
        budget = dt
        while queue and budget > 1e-12:
            wp = queue[0]
            vehicle, used = advance(vehicle, (wp.x, wp.y, altitude), speeds, speed, budget)
            budget -= used
            if vehicle.x == wp.x and vehicle.y == wp.y:
                queue.pop(0)
        k += 1
        vehicle = replace(
            vehicle, time=k * dt, turning=is_turning(start, vehicle, dt)
        )
    return out
