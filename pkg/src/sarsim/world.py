"""Ground truth for a search mission: the area, the targets, and scenario generators."""

from __future__ import annotations

import bisect
import json
import math
import random
from dataclasses import asdict, dataclass, field
from functools import cached_property
from enum import Enum
from pathlib import Path

MAX_PLACEMENT_ATTEMPTS = 10_000
CLUSTER_RESTART = 50


class ScenarioError(ValueError):
    """Raised when scenario parameters are invalid or placement is infeasible."""


class ScenarioKind(str, Enum):
    CLUSTERED = "clustered"
    ABUNDANT = "abundant"
    SPARSE = "sparse"
    CUSTOM = "custom"


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle on the ground plane (meters)."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise ScenarioError(f"degenerate rectangle {self}")

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    def contains(self, x: float, y: float) -> bool:
        return self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max

    def corners(self) -> list[tuple[float, float]]:
        return [
            (self.x_min, self.y_min),
            (self.x_max, self.y_min),
            (self.x_min, self.y_max),
            (self.x_max, self.y_max),
        ]


Area = Rect


@dataclass(frozen=True)
class Target:
    id: int
    x: float
    y: float

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class ScenarioParams:
    """Generation knobs. Clustered uses clusters/per_cluster/spread and spacing, the others count/spacing."""

    clusters: int = 2
    per_cluster: int = 4
    spread: float = 5.0
    count: int = 0
    spacing: float = 0.0


DEFAULT_AREA = Rect(0.0, 0.0, 200.0, 200.0)

DEFAULT_PARAMS = {
    ScenarioKind.CLUSTERED: ScenarioParams(clusters=2, per_cluster=4, spread=5.0, spacing=5.0),
    ScenarioKind.ABUNDANT: ScenarioParams(count=45, spacing=8.0),
    ScenarioKind.SPARSE: ScenarioParams(count=5, spacing=40.0),
}


@dataclass(frozen=True)
class Scenario:
    area: Rect
    targets: tuple[Target, ...]
    kind: ScenarioKind = ScenarioKind.CUSTOM
    seed: int = 0
    # Cluster centers are kept only so tests can verify the spatial law.
    centers: tuple[tuple[float, float], ...] = field(default=(), compare=False)

    def __post_init__(self):
        ids = [t.id for t in self.targets]
        if len(set(ids)) != len(ids):
            raise ScenarioError("target ids must be unique")
        for t in self.targets:
            if not self.area.contains(t.x, t.y):
                raise ScenarioError(f"target {t.id} at ({t.x}, {t.y}) lies outside the area")

    @cached_property
    def _by_x(self) -> tuple[list[float], list[Target]]:
        ordered = sorted(self.targets, key=lambda t: (t.x, t.id))
        return [t.x for t in ordered], ordered

    def targets_within(self, x_min: float, y_min: float, x_max: float, y_max: float) -> list[Target]:
        """Targets inside or on the boundary of the box, in id order."""
        xs, ordered = self._by_x
        lo = bisect.bisect_left(xs, x_min)
        hi = bisect.bisect_right(xs, x_max)
        hits = [t for t in ordered[lo:hi] if y_min <= t.y <= y_max]
        if len(hits) > 1:
            hits.sort(key=lambda t: t.id)
        return hits

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "seed": self.seed,
            "area": asdict(self.area),
            "targets": [{"id": t.id, "x": t.x, "y": t.y} for t in self.targets],
        }

    @classmethod
    def from_dict(cls, data: dict) -> Scenario:
        try:
            area = Rect(**{k: float(data["area"][k]) for k in ("x_min", "y_min", "x_max", "y_max")})
            targets = tuple(
                Target(int(t["id"]), float(t["x"]), float(t["y"])) for t in data.get("targets", [])
            )
            return cls(area, targets, ScenarioKind(data.get("kind", "custom")), int(data.get("seed", 0)))
        except (KeyError, TypeError) as exc:
            raise ScenarioError(f"malformed scenario document: {exc!r}") from exc

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def loads(cls, text: str) -> Scenario:
        return cls.from_dict(json.loads(text))

    def save(self, path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path) -> Scenario:
        return cls.loads(Path(path).read_text())


def _validate(kind: ScenarioKind, params: ScenarioParams) -> None:
    if kind is ScenarioKind.CLUSTERED:
        if params.clusters < 1 or params.per_cluster < 1:
            raise ScenarioError("clustered scenarios need clusters >= 1 and per_cluster >= 1")
        if not params.spread > 0:
            raise ScenarioError("cluster spread must be positive")
        if params.spacing < 0:
            raise ScenarioError("minimum spacing must be >= 0")
    elif kind in (ScenarioKind.ABUNDANT, ScenarioKind.SPARSE):
        if params.count < 0:
            raise ScenarioError("target count must be >= 0")
        if params.spacing < 0:
            raise ScenarioError("minimum spacing must be >= 0")
    else:
        raise ScenarioError("custom scenarios are loaded from files, not generated")


def _scatter(area: Rect, count: int, spacing: float, rng: random.Random) -> list[tuple[float, float]]:
    points: list[tuple[float, float]] = []
    attempts = 0
    while len(points) < count:
        if attempts >= MAX_PLACEMENT_ATTEMPTS:
            raise ScenarioError(
                f"placed only {len(points)} of {count} targets with spacing {spacing} m "
                f"in a {area.width:g}x{area.height:g} m area after {attempts} attempts"
            )
        attempts += 1
        p = (rng.uniform(area.x_min, area.x_max), rng.uniform(area.y_min, area.y_max))
        if all(math.dist(p, q) >= spacing for q in points):
            points.append(p)
    return points


def _clusters(area: Rect, params: ScenarioParams, rng: random.Random):
    r = params.spread
    if area.width <= 2 * r or area.height <= 2 * r:
        raise ScenarioError(f"cluster spread {r} m does not fit inside the area")
    # clusters must not overlap, otherwise "two clusters" can degenerate into one
    center_gap = 2 * r + params.spacing
    centers: list[tuple[float, float]] = []
    attempts = 0
    while len(centers) < params.clusters:
        if attempts >= MAX_PLACEMENT_ATTEMPTS:
            raise ScenarioError(f"could not place {params.clusters} disjoint clusters of radius {r} m")
        attempts += 1
        c = (rng.uniform(area.x_min + r, area.x_max - r), rng.uniform(area.y_min + r, area.y_max - r))
        if all(math.dist(c, q) >= center_gap for q in centers):
            centers.append(c)
    points: list[tuple[float, float]] = []
    attempts = 0
    for cx, cy in centers:
        cluster: list[tuple[float, float]] = []
        misses = 0
        while len(cluster) < params.per_cluster:
            if attempts >= MAX_PLACEMENT_ATTEMPTS:
                raise ScenarioError(
                    f"could not fit {params.per_cluster} targets {params.spacing} m apart "
                    f"within {r} m of each cluster centre after {attempts} attempts"
                )
            attempts += 1
            # sqrt keeps the density uniform over the disc
            rho = r * math.sqrt(rng.random())
            phi = rng.uniform(0.0, 2.0 * math.pi)
            p = (
                min(max(cx + rho * math.cos(phi), area.x_min), area.x_max),
                min(max(cy + rho * math.sin(phi), area.y_min), area.y_max),
            )
            if all(math.dist(p, q) >= params.spacing for q in points + cluster):
                cluster.append(p)
                misses = 0
            else:
                misses += 1
                if misses >= CLUSTER_RESTART:
                    # early picks boxed the cluster in; start it over
                    cluster, misses = [], 0
        points += cluster
    return centers, points


def generate_scenario(
    kind: ScenarioKind | str,
    area: Rect = DEFAULT_AREA,
    params: ScenarioParams | None = None,
    seed: int = 0,
) -> Scenario:
    """Build a scenario of the given kind. Identical arguments give identical targets."""
    kind = ScenarioKind(kind)
    if params is None:
        params = DEFAULT_PARAMS.get(kind, ScenarioParams())
    _validate(kind, params)
    rng = random.Random(seed)
    centers: list[tuple[float, float]] = []
    if kind is ScenarioKind.CLUSTERED:
        centers, points = _clusters(area, params, rng)
    else:
        points = _scatter(area, params.count, params.spacing, rng)
    targets = tuple(Target(i, x, y) for i, (x, y) in enumerate(points))
    return Scenario(area, targets, kind, seed, tuple(centers))


def targets_in_region(scenario: Scenario, region: Rect) -> list[Target]:
    """Targets inside or on the boundary of ``region``, in id order."""
    return scenario.targets_within(region.x_min, region.y_min, region.x_max, region.y_max)
