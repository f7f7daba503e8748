"""Two-altitude search controller.

The vehicle sweeps the coverage plan high and fast (SCAN). Candidates
spotted on the way are collected; once enough have piled up, or the vehicle
has flown far enough past the last one, it drops to a low altitude and flies
slowly over each candidate (CHECK) to confirm or reject it, then resumes the
sweep. When the plan runs out, anything still collected is checked before
the mission ends.

All transition functions take a ``ControllerState`` and return a new one;
nothing is mutated in place.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum

from sarsim.perception import Detection
from sarsim.planner import Waypoint
from sarsim.vehicle import SpeedProfile, VehicleState, at_waypoint

log = logging.getLogger(__name__)

INF = math.inf


class Mode(str, Enum):
    SCAN = "SCAN"
    CHECK = "CHECK"


class MissionComplete(RuntimeError):
    """Raised when the controller is stepped after the mission has finished."""


@dataclass(frozen=True)
class StrategyParams:
    scan_altitude: float = 40.0
    check_altitude: float = 10.0
    batch_size: float = 1  # candidates to collect before checking; may be INF
    trigger_distance: float = INF  # distance past the last candidate that forces a check
    confidence_threshold: float = 0.7
    merge_radius: float = 3.0
    dwell_time: float = 2.0
    check_order: str = "nearest"  # or "discovery"
    waypoint_tolerance: float = 0.01
    resume_at_breakpoint: bool = True  # after checking, return to where the sweep was interrupted
    name: str = ""

    def __post_init__(self):
        if not self.scan_altitude > self.check_altitude > 0:
            raise ValueError("need scan_altitude > check_altitude > 0")
        if not (self.batch_size >= 1 and (self.batch_size == INF or float(self.batch_size).is_integer())):
            raise ValueError("batch_size must be a positive integer or inf")
        if not self.trigger_distance > 0:
            raise ValueError("trigger_distance must be positive")
        if not 0.0 <= self.confidence_threshold <= 1.0:
            raise ValueError("confidence_threshold must lie in [0, 1]")
        if not self.merge_radius > 0 or self.dwell_time < 0 or not self.waypoint_tolerance > 0:
            raise ValueError("merge_radius and waypoint_tolerance must be > 0, dwell_time >= 0")
        if self.check_order not in ("nearest", "discovery"):
            raise ValueError(f"unknown check_order {self.check_order!r}")

    @property
    def label(self) -> str:
        if self.name:
            return self.name
        fmt = lambda v: "inf" if v == INF else f"{v:g}"  # noqa: E731
        return f"batch={fmt(self.batch_size)},dist={fmt(self.trigger_distance)}"


@dataclass(frozen=True, slots=True)
class Candidate:
    x: float
    y: float
    confidence: float

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True, slots=True)
class WaypointCommand:
    x: float
    y: float
    altitude: float
    speed: float

    @property
    def target(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.altitude)


@dataclass(frozen=True)
class ControllerState:
    mode: Mode = Mode.SCAN
    remaining: tuple[Waypoint, ...] = ()
    scanned: tuple[Candidate, ...] = ()
    to_check: tuple[Candidate, ...] = ()
    confirmed: tuple[tuple[float, float], ...] = ()
    discarded: tuple[tuple[float, float], ...] = ()
    last_target: tuple[float, float] | None = None
    # where the sweep was left for a check; flown to before F[0]
    resume_point: tuple[float, float] | None = None
    dist_traveled: float = 0.0
    prev_position: tuple[float, float] = (0.0, 0.0)
    # confirmation bookkeeping for the candidate at the head of to_check
    arrived_at: float | None = None
    best: Detection | None = None
    completed: bool = False
    scanned_total: int = 0
    checks_total: int = 0
    events: tuple[str, ...] = field(default=(), compare=False)


def _evolve(state: ControllerState, **changes) -> ControllerState:
    # dataclasses.replace re-runs __init__; this copy is the hot path of every step
    new = object.__new__(ControllerState)
    new.__dict__.update(state.__dict__)
    new.__dict__.update(changes)
    return new


def initial_state(waypoints, start: tuple[float, float] = (0.0, 0.0)) -> ControllerState:
    return ControllerState(remaining=tuple(waypoints), prev_position=start)


def _near(p: tuple[float, float], pts, radius: float) -> bool:
    px, py = p
    r2 = radius * radius
    for q in pts:
        dx, dy = q[0] - px, q[1] - py
        if dx * dx + dy * dy <= r2:
            return True
    return False


def is_known(state: ControllerState, det: Detection, params: StrategyParams) -> bool:
    """True when the detection falls on a candidate already queued, confirmed or rejected."""
    p = det.estimated_position
    r = params.merge_radius
    return (
        _near(p, state.confirmed, r)
        or _near(p, state.discarded, r)
        or _near(p, (c.position for c in state.to_check), r)
    )


def handle_scanned_target(
    state: ControllerState,
    detection: Detection,
    params: StrategyParams,
    position: tuple[float, float] | None = None,
) -> ControllerState:
    if state.mode is not Mode.SCAN:
        raise ValueError("handle_scanned_target requires SCAN mode")
    cand = Candidate(detection.x, detection.y, detection.confidence)
    scanned = list(state.scanned)
    total = state.scanned_total
    r2 = params.merge_radius**2
    for i, s in enumerate(scanned):
        if (s.x - cand.x) ** 2 + (s.y - cand.y) ** 2 <= r2:
            if cand.confidence > s.confidence:
                scanned[i] = cand
            break
    else:
        scanned.append(cand)
        total += 1
    pos = position if position is not None else state.prev_position
    return _evolve(state, scanned=tuple(scanned), scanned_total=total, last_target=pos, dist_traveled=0.0)


def update_travel(state: ControllerState, current_position: tuple[float, float]) -> ControllerState:
    if state.last_target is None:
        d = 0.0
    else:
        d = math.dist(state.last_target, current_position)
    return _evolve(state, dist_traveled=d, prev_position=current_position)


def should_switch_to_check(state: ControllerState, params: StrategyParams) -> bool:
    if not state.scanned:
        return False
    if state.dist_traveled >= params.trigger_distance:
        return True
    if len(state.scanned) >= params.batch_size:
        return True
    # the plan is exhausted: whatever was collected gets checked now
    return not state.remaining


def order_nearest(cands, start: tuple[float, float]) -> list[Candidate]:
    """Greedy nearest-neighbour chain from ``start``; ties go to the earlier candidate."""
    pending = list(cands)
    out = []
    here = start
    while pending:
        best_i = min(range(len(pending)), key=lambda i: (math.dist(here, pending[i].position), i))
        nxt = pending.pop(best_i)
        out.append(nxt)
        here = nxt.position
    return out


def switch_to_check(
    state: ControllerState,
    current_position: tuple[float, float] | None = None,
    check_order: str = "nearest",
    breakpoint: bool = False,
) -> ControllerState:
    """Move S into the check queue.

    With ``breakpoint`` set the current position is remembered as the
    resume point, unless one is already pending from an earlier check.
    """
    if not state.scanned:
        log.warning("switch_to_check called with nothing scanned; ignoring")
        return state
    here = current_position if current_position is not None else state.prev_position
    queue = order_nearest(state.scanned, here) if check_order == "nearest" else list(state.scanned)
    resume = state.resume_point
    if breakpoint and resume is None and state.remaining:
        resume = here
    return _evolve(
        state,
        mode=Mode.CHECK,
        resume_point=resume,
        to_check=tuple(queue),
        scanned=(),
        dist_traveled=0.0,
        checks_total=state.checks_total + len(queue),
        arrived_at=None,
        best=None,
    )


def handle_checked_target(
    state: ControllerState,
    detections,
    params: StrategyParams,
    vehicle: VehicleState,
) -> ControllerState:
    """Confirm or reject the candidate at the head of the check queue.

    Confirming detections count only at check altitude. A candidate is
    resolved once the vehicle is over it: confirmed if a detection within
    ``merge_radius`` reached the threshold, otherwise rejected after
    ``dwell_time`` seconds of hovering.
    """
    if state.mode is not Mode.CHECK or not state.to_check:
        raise ValueError("handle_checked_target requires CHECK mode with a non-empty queue")
    head = state.to_check[0]
    best = state.best
    low = abs(vehicle.altitude - params.check_altitude) <= params.waypoint_tolerance
    if low:
        r2 = params.merge_radius**2
        for d in detections:
            if d.confidence < params.confidence_threshold:
                continue
            if (d.x - head.x) ** 2 + (d.y - head.y) ** 2 > r2:
                continue
            if best is None or d.confidence > best.confidence:
                best = d

    arrived_at = state.arrived_at
    over = at_waypoint(vehicle, (head.x, head.y, params.check_altitude), params.waypoint_tolerance)
    now = vehicle.time
    if over and arrived_at is None:
        arrived_at = now

    events = list(state.events)
    if over and best is not None:
        pos = (best.x, best.y)
        rest = tuple(c for c in state.to_check[1:] if not _near(c.position, (pos,), params.merge_radius))
        events.append("target_confirmed")
        return _evolve(
            state, to_check=rest, confirmed=state.confirmed + (pos,), arrived_at=None, best=None,
            events=tuple(events),
        )
    if over and now - arrived_at >= params.dwell_time:
        events.append("target_discarded")
        return _evolve(
            state, to_check=state.to_check[1:], discarded=state.discarded + (head.position,),
            arrived_at=None, best=None, events=tuple(events),
        )
    if best is state.best and arrived_at == state.arrived_at:
        return state
    return _evolve(state, best=best, arrived_at=arrived_at)


def _scan_command(state: ControllerState, params: StrategyParams, speeds: SpeedProfile) -> WaypointCommand:
    if state.resume_point is not None:
        x, y = state.resume_point
    else:
        x, y = state.remaining[0].x, state.remaining[0].y
    return WaypointCommand(x, y, params.scan_altitude, speeds.scan_speed)


def controller_step(
    state: ControllerState,
    vehicle: VehicleState,
    detections,
    params: StrategyParams,
    speeds: SpeedProfile,
) -> tuple[ControllerState, WaypointCommand | None]:
    """One pass of the control loop. Returns ``(state, None)`` once the mission completes."""
    if state.completed:
        raise MissionComplete("controller stepped after mission completion")
    here = (vehicle.x, vehicle.y)
    state = _evolve(state, events=()) if state.events else state
    switched = False

    if state.mode is Mode.SCAN:
        fresh = [d for d in detections if not is_known(state, d, params)]
        if fresh:
            for d in fresh:
                state = handle_scanned_target(state, d, params, here)
            state = _evolve(state, prev_position=here, events=state.events + ("detection",))
        else:
            state = update_travel(state, here)

        switch = should_switch_to_check(state, params)
        on_sweep = state.resume_point is None
        if state.resume_point is not None:
            rx, ry = state.resume_point
            if at_waypoint(vehicle, (rx, ry, params.scan_altitude), params.waypoint_tolerance):
                state = _evolve(state, resume_point=None)
        elif state.remaining:
            wp = state.remaining[0]
            if at_waypoint(vehicle, (wp.x, wp.y, params.scan_altitude), params.waypoint_tolerance):
                state = _evolve(state, remaining=state.remaining[1:], events=state.events + ("waypoint_reached",))
                switch = switch or should_switch_to_check(state, params)
        if switch:
            switched = True
            # only a vehicle flying the sweep itself leaves a gap behind it
            breakpoint = (
                params.resume_at_breakpoint and on_sweep
                and abs(vehicle.altitude - params.scan_altitude) <= params.waypoint_tolerance
            )
            state = switch_to_check(state, here, params.check_order, breakpoint)
            state = _evolve(state, events=state.events + ("mode_switch",))
        elif not state.remaining:
            return _evolve(state, completed=True, resume_point=None), None
        else:
            return state, _scan_command(state, params, speeds)

    # CHECK mode, possibly entered on this very step; scan-altitude
    # detections from the switching step never count as confirmations
    state = handle_checked_target(state, () if switched else detections, params, vehicle)
    state = _evolve(state, prev_position=here) if state.prev_position != here else state

    if not state.to_check:
        state = _evolve(state, mode=Mode.SCAN, events=state.events + ("mode_switch",))
        if not state.remaining:
            return _evolve(state, completed=True, resume_point=None), None
        return state, _scan_command(state, params, speeds)
    head = state.to_check[0]
    return state, WaypointCommand(head.x, head.y, params.check_altitude, speeds.check_speed)
