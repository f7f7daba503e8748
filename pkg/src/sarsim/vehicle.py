"""Constant-speed kinematic multirotor with a nadir camera.

Motion toward a 3-D waypoint is vertical first, then a straight horizontal
leg. Translation is instantaneous in direction; the heading (yaw) slews
toward the bearing of the waypoint at a bounded rate, and the vehicle is
flagged as turning while it does. States are immutable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from sarsim.world import Rect

TWO_PI = 2.0 * math.pi
TURN_THRESHOLD = 0.1  # rad of heading change per reference step
REFERENCE_STEP = 0.1  # s; the threshold scales with dt so turning is rate based
ALTITUDE_EPS = 1e-9
ARRIVAL_EPS = 1e-9


@dataclass(frozen=True, slots=True)
class VehicleState:
    x: float = 0.0
    y: float = 0.0
    altitude: float = 0.0
    horizontal_speed: float = 0.0
    vertical_speed: float = 0.0
    heading: float = 0.0
    turning: bool = False
    time: float = 0.0

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class CameraModel:
    horizontal_fov: float = math.radians(80.0)
    vertical_fov: float = math.radians(60.0)

    def __post_init__(self):
        for fov in (self.horizontal_fov, self.vertical_fov):
            if not 0.0 < fov < math.pi:
                raise ValueError(f"field of view must lie in (0, pi), got {fov}")

    def footprint_size(self, altitude: float) -> tuple[float, float]:
        return (
            2.0 * altitude * math.tan(self.horizontal_fov / 2.0),
            2.0 * altitude * math.tan(self.vertical_fov / 2.0),
        )


@dataclass(frozen=True)
class SpeedProfile:
    scan_speed: float = 10.0
    check_speed: float = 2.0
    climb_rate: float = 3.0
    descent_rate: float = 3.0
    yaw_rate: float = math.radians(180.0)

    def __post_init__(self):
        for name in ("scan_speed", "check_speed", "climb_rate", "descent_rate", "yaw_rate"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


def _wrap(angle: float) -> float:
    a = math.fmod(angle, TWO_PI)
    if a < 0:
        a += TWO_PI
    # fmod of a tiny negative can round up to exactly 2*pi
    return 0.0 if a >= TWO_PI else a


def heading_change(a: float, b: float) -> float:
    d = abs(a - b) % TWO_PI
    return min(d, TWO_PI - d)


def _slew(heading: float, goal: float, max_turn: float) -> float:
    diff = (goal - heading + math.pi) % TWO_PI - math.pi
    if abs(diff) <= max_turn:
        return goal
    return _wrap(heading + math.copysign(max_turn, diff))


def is_turning(before: VehicleState, after: VehicleState, dt: float, threshold: float = TURN_THRESHOLD) -> bool:
    return heading_change(before.heading, after.heading) > threshold * dt / REFERENCE_STEP


def advance(
    state: VehicleState,
    target: tuple[float, float, float],
    speeds: SpeedProfile,
    horizontal_speed_cmd: float,
    budget: float,
) -> tuple[VehicleState, float]:
    """Move toward ``target`` for at most ``budget`` seconds.

    Returns the new state and the time actually spent moving; the remainder
    is what the caller may spend on the next waypoint. ``time`` advances only
    by the time spent, and ``turning`` is left to the caller.
    """
    tx, ty, talt = target
    x, y, alt = state.x, state.y, state.altitude
    heading = state.heading
    used = 0.0
    vz = 0.0
    vh = 0.0
    dist = math.hypot(tx - x, ty - y)
    bearing = _wrap(math.atan2(ty - y, tx - x)) if dist > 0.0 else heading

    dz = talt - alt
    if abs(dz) > ALTITUDE_EPS:
        rate = speeds.climb_rate if dz > 0 else speeds.descent_rate
        t_needed = abs(dz) / rate
        if t_needed > budget + ALTITUDE_EPS / rate:
            alt += math.copysign(rate * budget, dz)
            heading = _slew(heading, bearing, speeds.yaw_rate * budget)
            return VehicleState(x, y, alt, 0.0, rate, heading, state.turning, state.time + budget), budget
        alt = talt
        used = min(t_needed, budget)
        vz = rate
    else:
        alt = talt

    remaining = budget - used
    if dist > 0.0 and remaining > 0.0:
        reach = horizontal_speed_cmd * remaining
        # snap when float error would otherwise leave a sliver for another step
        if reach >= dist - ARRIVAL_EPS:
            x, y = tx, ty
            t_move = dist / horizontal_speed_cmd
        else:
            x += (tx - x) * (reach / dist)
            y += (ty - y) * (reach / dist)
            t_move = remaining
        used += t_move
        vh = horizontal_speed_cmd
    # yaw keeps slewing through the whole interval, vertical part included
    heading = _slew(heading, bearing, speeds.yaw_rate * used)

    return VehicleState(x, y, alt, vh, vz, heading, state.turning, state.time + used), used


def step_toward(
    state: VehicleState,
    target: tuple[float, float, float],
    speeds: SpeedProfile,
    horizontal_speed_cmd: float,
    dt: float,
    turn_threshold: float = TURN_THRESHOLD,
) -> VehicleState:
    """One fixed step of ``dt`` seconds; the vehicle hovers once the waypoint is reached."""
    if not dt > 0 or not horizontal_speed_cmd > 0:
        raise ValueError("dt and horizontal_speed_cmd must be positive")
    new, _ = advance(state, target, speeds, horizontal_speed_cmd, dt)
    return replace(new, time=state.time + dt, turning=is_turning(state, new, dt, turn_threshold))


def at_waypoint(state: VehicleState, target: tuple[float, float, float], tolerance: float) -> bool:
    if not tolerance > 0:
        raise ValueError("tolerance must be positive")
    tx, ty, talt = target
    return math.dist((state.x, state.y, state.altitude), (tx, ty, talt)) <= tolerance


def footprint_at(state: VehicleState, camera: CameraModel) -> Rect:
    """Ground rectangle seen by the nadir camera, centred under the vehicle."""
    if not state.altitude > 0:
        raise ValueError("footprint undefined at or below ground level")
    w, h = camera.footprint_size(state.altitude)
    return Rect(state.x - w / 2, state.y - h / 2, state.x + w / 2, state.y + h / 2)
