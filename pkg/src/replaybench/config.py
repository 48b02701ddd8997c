"""Evaluation configuration: vehicle model, controller gains, penalty table.

Defaults are plausible urban-car values and the CARLA-leaderboard-style
penalty coefficients; everything is overridable through a JSON document.
"""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from typing import Dict

from .errors import ParseError

DEFAULT_PENALTIES: Dict[str, float] = {
    "collision_pedestrian": 0.50,
    "collision_cyclist": 0.60,
    "collision_vehicle": 0.60,
    "collision_static": 0.65,
    "red_light": 0.70,
    "off_road": 1.0,
    "route_deviation": 1.0,
    "timeout": 1.0,
    "policy_failure": 1.0,
}


@dataclass(frozen=True)
class VehicleParams:
    wheelbase: float = 2.9               # m
    max_steer: float = math.radians(35)  # rad
    max_steer_rate: float = math.radians(60)  # rad/s
    max_accel: float = 3.0               # m/s^2
    max_brake: float = 8.0               # m/s^2
    max_speed: float = 15.0              # m/s
    drag_coeff: float = 0.01             # 1/m, decel = drag_coeff * v^2


@dataclass(frozen=True)
class EvalConfig:
    vehicle: VehicleParams = field(default_factory=VehicleParams)
    penalties: Dict[str, float] = field(default_factory=lambda: dict(DEFAULT_PENALTIES))

    # episode shape
    timeout_factor: float = 2.0          # x recorded clip duration
    min_timeout_s: float = 20.0
    sensing_range: float = 85.0          # m, 360 degrees
    policy_tick_timeout_s: float = 10.0  # wall-clock wait per bridge reply

    # success / infraction thresholds
    rc_success_threshold: float = 0.95
    arrival_radius: float = 2.0          # m to destination
    route_deviation_limit: float = 8.0   # m lateral
    offroad_grace_s: float = 0.5         # continuous time outside drivable area
    dedupe_infractions: bool = True      # raise each kind at most once per episode

    # waypoint-to-control translation
    target_speed: float = 8.0            # m/s, used when a reply has no speed
    lookahead_gain: float = 0.8          # s, lookahead = clamp(gain * v, min, max)
    lookahead_min: float = 3.0
    lookahead_max: float = 12.0
    speed_kp: float = 1.5                # desired accel per m/s of speed error
    speed_ki: float = 0.5

    # open-loop evaluation
    l2_anchor_stride: int = 1            # ticks between anchors

    def __post_init__(self) -> None:
        for kind, coeff in self.penalties.items():
            if not (0.0 < coeff <= 1.0):
                raise ParseError(f"penalty {kind!r} must be in (0, 1], got {coeff}")

    def penalty(self, kind: str) -> float:
        return self.penalties.get(kind, 1.0)

    def timeout_ticks(self, n_ticks: int, tick_hz: int = 10) -> int:
        return max(int(round(self.timeout_factor * n_ticks)), int(self.min_timeout_s * tick_hz))

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        return out

    @staticmethod
    def from_dict(doc: dict) -> "EvalConfig":
        if not isinstance(doc, dict):
            raise ParseError("config document: top level must be an object")
        known = {f.name for f in dataclasses.fields(EvalConfig)}
        extra = set(doc) - known
        if extra:
            raise ParseError(f"config document: unknown keys {sorted(extra)}")
        kwargs = dict(doc)
        if "vehicle" in kwargs:
            vknown = {f.name for f in dataclasses.fields(VehicleParams)}
            vextra = set(kwargs["vehicle"]) - vknown
            if vextra:
                raise ParseError(f"config document: unknown vehicle keys {sorted(vextra)}")
            kwargs["vehicle"] = VehicleParams(**kwargs["vehicle"])
        if "penalties" in kwargs:
            merged = dict(DEFAULT_PENALTIES)
            merged.update({str(k): float(v) for k, v in kwargs["penalties"].items()})
            kwargs["penalties"] = merged
        return EvalConfig(**kwargs)

    @staticmethod
    def from_json(data) -> "EvalConfig":
        if isinstance(data, bytes):
            data = data.decode("utf-8")
        try:
            doc = json.loads(data)
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise ParseError(f"config document: {exc}") from exc
        return EvalConfig.from_dict(doc)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
