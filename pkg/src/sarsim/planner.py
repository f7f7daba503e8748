"""Boustrophedon (lawnmower) coverage plans over a rectangular area."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from sarsim.world import Rect


class PlanError(ValueError):
    pass


@dataclass(frozen=True)
class Waypoint:
    x: float
    y: float


@dataclass(frozen=True)
class FlightPlan:
    waypoints: tuple[Waypoint, ...]
    lane_spacing: float
    generated_for_altitude: float = 0.0

    def __post_init__(self):
        for a, b in zip(self.waypoints, self.waypoints[1:]):
            if a == b:
                raise PlanError(f"consecutive duplicate waypoint {a}")

    def __len__(self):
        return len(self.waypoints)

    def to_dict(self) -> dict:
        return {
            "lane_spacing": self.lane_spacing,
            "altitude": self.generated_for_altitude,
            "waypoints": [{"x": w.x, "y": w.y} for w in self.waypoints],
        }

    @classmethod
    def from_dict(cls, data: dict) -> FlightPlan:
        try:
            wps = tuple(Waypoint(float(w["x"]), float(w["y"])) for w in data["waypoints"])
            return cls(wps, float(data["lane_spacing"]), float(data.get("altitude", 0.0)))
        except (KeyError, TypeError) as exc:
            raise PlanError(f"malformed plan document: {exc!r}") from exc

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path) -> FlightPlan:
        return cls.from_dict(json.loads(Path(path).read_text()))


def plan_lawnmower(
    area: Rect,
    footprint_width: float,
    overlap_fraction: float = 0.2,
    altitude: float = 0.0,
) -> FlightPlan:
    """Serpentine sweep with lanes parallel to the longer side of ``area``.

    ``footprint_width`` is the camera footprint measured across the lanes.
    The lane count is the smallest that keeps the nominal spacing; lanes are
    then spread evenly so the outer ones sit half a lane in from the border.
    """
    if not footprint_width > 0:
        raise PlanError("footprint_width must be positive")
    if not 0.0 <= overlap_fraction < 1.0:
        raise PlanError("overlap_fraction must lie in [0, 1)")
    spacing = footprint_width * (1.0 - overlap_fraction)

    along_x = area.width >= area.height
    across = area.height if along_x else area.width
    # tolerate float noise such as 100 / (125 * 0.8)
    n_lanes = max(1, math.ceil(across / spacing - 1e-9))
    step = across / n_lanes

    # start from the corner closest to the origin; ties resolved by corner order
    cx, cy = min(area.corners(), key=lambda c: (math.hypot(*c), c))
    if along_x:
        lo, hi = (area.x_min, area.x_max) if cx == area.x_min else (area.x_max, area.x_min)
        sign = 1.0 if cy == area.y_min else -1.0
        offsets = [cy + sign * (k + 0.5) * step for k in range(n_lanes)]
    else:
        lo, hi = (area.y_min, area.y_max) if cy == area.y_min else (area.y_max, area.y_min)
        sign = 1.0 if cx == area.x_min else -1.0
        offsets = [cx + sign * (k + 0.5) * step for k in range(n_lanes)]

    wps: list[Waypoint] = []
    for k, off in enumerate(offsets):
        a, b = (lo, hi) if k % 2 == 0 else (hi, lo)
        if along_x:
            wps += [Waypoint(a, off), Waypoint(b, off)]
        else:
            wps += [Waypoint(off, a), Waypoint(off, b)]
    return FlightPlan(tuple(wps), spacing, altitude)


def path_length(plan: FlightPlan) -> float:
    if not plan.waypoints:
        raise PlanError("empty plan")
    w = plan.waypoints
    return sum(math.hypot(b.x - a.x, b.y - a.y) for a, b in zip(w, w[1:]))
