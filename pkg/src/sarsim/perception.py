"""Parametric object detector.

Stands in for a neural detector: true targets inside the camera footprint
are reported with an altitude-dependent probability, position noise and
confidence, and spurious detections arrive as a Poisson process whose rate
jumps while the vehicle is turning.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from sarsim.vehicle import CameraModel, VehicleState
from sarsim.world import Scenario


@dataclass(frozen=True)
class DetectorModel:
    p_max: float = 0.98
    p_min: float = 0.55
    h_ref_low: float = 5.0
    h_ref_high: float = 40.0
    confidence_mean_low: float = 0.9
    confidence_mean_high: float = 0.5
    confidence_spread: float = 0.1
    position_noise_per_meter_altitude: float = 0.02
    fp_rate_cruise: float = 0.002
    fp_turn_multiplier: float = 50.0
    fp_confidence_mean: float = 0.3
    frame_rate: float = 10.0

    def __post_init__(self):
        if not 0.0 <= self.p_min <= self.p_max <= 1.0:
            raise ValueError("need 0 <= p_min <= p_max <= 1")
        if not self.h_ref_low < self.h_ref_high:
            raise ValueError("need h_ref_low < h_ref_high")
        if self.fp_turn_multiplier < 1.0:
            raise ValueError("fp_turn_multiplier must be >= 1")
        if self.fp_rate_cruise < 0 or self.confidence_spread < 0:
            raise ValueError("rates and spreads must be non-negative")
        if self.position_noise_per_meter_altitude < 0 or not self.frame_rate > 0:
            raise ValueError("noise must be >= 0 and frame_rate > 0")

    @classmethod
    def perfect(cls) -> DetectorModel:
        return cls(p_max=1.0, p_min=1.0, position_noise_per_meter_altitude=0.0, fp_rate_cruise=0.0)

    def _lerp(self, low: float, high: float, altitude: float) -> float:
        if altitude <= self.h_ref_low:
            return low
        if altitude >= self.h_ref_high:
            return high
        frac = (altitude - self.h_ref_low) / (self.h_ref_high - self.h_ref_low)
        return low + (high - low) * frac


@dataclass(frozen=True, slots=True)
class Detection:
    x: float
    y: float
    confidence: float
    timestamp: float
    source_target_id: int | None = None

    @property
    def estimated_position(self) -> tuple[float, float]:
        return (self.x, self.y)

    @property
    def spurious(self) -> bool:
        return self.source_target_id is None


def detection_probability(model: DetectorModel, altitude: float) -> float:
    """Per-frame detection probability: flat below/above the reference band, linear inside."""
    return model._lerp(model.p_max, model.p_min, altitude)


def _clamp01(v: float) -> float:
    return 0.0 if v < 0.0 else 1.0 if v > 1.0 else v


def confidence_sample(model: DetectorModel, altitude: float, rng: random.Random) -> float:
    mean = model._lerp(model.confidence_mean_low, model.confidence_mean_high, altitude)
    return _clamp01(mean + model.confidence_spread * (2.0 * rng.random() - 1.0))


def poisson(lam: float, rng: random.Random) -> int:
    """Poisson draw by CDF inversion; consumes exactly one uniform."""
    if lam <= 0.0:
        return 0
    u = rng.random()
    k = 0
    p = math.exp(-lam)
    cdf = p
    while u > cdf and p > 0.0:
        k += 1
        p *= lam / k
        cdf += p
    return k


def sense(
    model: DetectorModel,
    state: VehicleState,
    scenario: Scenario,
    camera: CameraModel,
    dt: float,
    rng: random.Random,
) -> list[Detection]:
    if not dt > 0 or not state.altitude > 0:
        raise ValueError("sense needs dt > 0 and a vehicle above ground")
    alt = state.altitude
    w, h = camera.footprint_size(alt)
    x0, x1 = state.x - w / 2, state.x + w / 2
    y0, y1 = state.y - h / 2, state.y + h / 2
    t = state.time

    out: list[Detection] = []
    p = detection_probability(model, alt)
    p_step = 1.0 - (1.0 - p) ** (dt * model.frame_rate)
    sigma = model.position_noise_per_meter_altitude * alt
    conf_mean = model._lerp(model.confidence_mean_low, model.confidence_mean_high, alt)
    spread = model.confidence_spread
    for tgt in scenario.targets_within(x0, y0, x1, y1):
        if rng.random() >= p_step:
            continue
        ex, ey = tgt.x, tgt.y
        if sigma > 0:
            ex += rng.gauss(0.0, sigma)
            ey += rng.gauss(0.0, sigma)
        conf = _clamp01(conf_mean + spread * (2.0 * rng.random() - 1.0))
        out.append(Detection(ex, ey, conf, t, tgt.id))

    rate = model.fp_rate_cruise * (model.fp_turn_multiplier if state.turning else 1.0)
    for _ in range(poisson(rate * dt, rng)):
        fx = rng.uniform(x0, x1)
        fy = rng.uniform(y0, y1)
        conf = _clamp01(model.fp_confidence_mean + spread * (2.0 * rng.random() - 1.0))
        out.append(Detection(fx, fy, conf, t))
    return out
