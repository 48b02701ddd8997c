"""Built-in baseline policies and the policy-handle protocol.

A policy exposes reset(scenario, cfg, seed) and act(observation) returning
either a ControlCommand or a WaypointPlan.  Predictor-capable policies also
implement predict_positions(scenario, anchor_tick, horizons_s) for open-loop
scoring.  Built-ins are pure functions of the observation history, so
repeated runs are bit-identical.
"""
from __future__ import annotations

import math
from typing import List, Optional, Sequence
from urllib.parse import parse_qsl

from .config import EvalConfig
from .errors import ParseError
from .geometry import Vec2
from .scenario import Scenario
from .simulation import Observation, WaypointPlan

EXPERT_SPEED_PREVIEW_TICKS = 2


class Policy:
    """Base handle: built-ins override reset/act."""

    name = "policy"
    kind = "builtin"
    mode = "waypoint-output"

    def reset(self, scenario: Scenario, cfg: EvalConfig, seed: int) -> None:
        raise NotImplementedError

    def act(self, obs: Observation):
        raise NotImplementedError

    def finish(self, result) -> None:
        pass


class ExpertReplayPolicy(Policy):
    """Re-drives the recorded ego: emits the recorded path ahead of the
    current time with the recorded speed a short preview ahead."""

    name = "expert"

    def __init__(self, scenario: Optional[Scenario] = None):
        self._track = scenario.ego_track() if scenario is not None else None

    def reset(self, scenario: Scenario, cfg: EvalConfig, seed: int) -> None:
        self._track = scenario.ego_track()

    def act(self, obs: Observation) -> WaypointPlan:
        track = self._track
        points = [s.pose.position for s in track.samples if s.tick >= obs.tick]
        if not points:
            points = [track.samples[-1].pose.position]
        idx = min(
            len(track.samples) - 1,
            next(
                (i for i, s in enumerate(track.samples) if s.tick >= obs.tick + EXPERT_SPEED_PREVIEW_TICKS),
                len(track.samples) - 1,
            ),
        )
        return WaypointPlan(points=tuple(points), target_speed=track.samples[idx].speed)

    def predict_positions(
        self, scenario: Scenario, anchor_tick: int, horizons_s: Sequence[float]
    ) -> List[Vec2]:
        track = scenario.ego_track()
        by_tick = {s.tick: s for s in track.samples}
        out = []
        for h in horizons_s:
            smp = by_tick[anchor_tick + int(round(h * 10))]
            out.append(smp.pose.position)
        return out


class PidFollowerPolicy(Policy):
    """Follows the remaining route waypoints at a constant target speed.

    Blind on purpose: ignores agents and signals, so red lights and crossing
    traffic become infractions.
    """

    name = "pid"

    def __init__(self, v_target: Optional[float] = None):
        self._v_requested = v_target
        self._v_target: Optional[float] = v_target

    def reset(self, scenario: Scenario, cfg: EvalConfig, seed: int) -> None:
        self._v_target = self._v_requested if self._v_requested is not None else cfg.target_speed
        if not (0.0 < self._v_target <= cfg.vehicle.max_speed):
            raise ValueError(f"v_target {self._v_target} outside (0, {cfg.vehicle.max_speed}]")

    def act(self, obs: Observation) -> WaypointPlan:
        return WaypointPlan(points=obs.route_remaining, target_speed=self._v_target)


class ConstantVelocityPolicy(Policy):
    """Extrapolates the current speed and heading along a straight line.

    Doubles as the open-loop predictor; speed_override=0 gives the
    stationary predictor.
    """

    name = "const"

    def __init__(self, speed_override: Optional[float] = None):
        self._speed_override = speed_override

    def reset(self, scenario: Scenario, cfg: EvalConfig, seed: int) -> None:
        pass

    def act(self, obs: Observation) -> WaypointPlan:
        ego = obs.ego
        speed = self._speed_override if self._speed_override is not None else ego.speed
        c, s = math.cos(ego.pose.heading), math.sin(ego.pose.heading)
        points = tuple(
            (ego.pose.x + k * 2.0 * c, ego.pose.y + k * 2.0 * s) for k in range(1, 9)
        )
        return WaypointPlan(points=points, target_speed=speed)

    def predict_positions(
        self, scenario: Scenario, anchor_tick: int, horizons_s: Sequence[float]
    ) -> List[Vec2]:
        track = scenario.ego_track()
        by_tick = {s.tick: s for s in track.samples}
        smp = by_tick[anchor_tick]
        speed = self._speed_override if self._speed_override is not None else smp.speed
        c, s = math.cos(smp.pose.heading), math.sin(smp.pose.heading)
        return [
            (smp.pose.x + speed * h * c, smp.pose.y + speed * h * s) for h in horizons_s
        ]


def builtin_expert_replay(scenario: Optional[Scenario] = None) -> ExpertReplayPolicy:
    return ExpertReplayPolicy(scenario)


def builtin_pid_follower(v_target: Optional[float] = None) -> PidFollowerPolicy:
    return PidFollowerPolicy(v_target)


def builtin_constant_velocity(speed_override: Optional[float] = None) -> ConstantVelocityPolicy:
    return ConstantVelocityPolicy(speed_override)


_BUILTIN_ALIASES = {
    "expert": "expert",
    "expert-replay": "expert",
    "pid": "pid",
    "pid-follower": "pid",
    "const": "const",
    "constant-velocity": "const",
}


def make_policy(spec: str):
    """Policy spec grammar: builtin:<name>[?k=v&...] | bridge:<host>:<port>."""
    if spec.startswith("builtin:"):
        rest = spec[len("builtin:"):]
        name, _, query = rest.partition("?")
        params = dict(parse_qsl(query, keep_blank_values=False)) if query else {}
        canonical = _BUILTIN_ALIASES.get(name)
        if canonical is None:
            raise ParseError(f"unknown builtin policy {name!r}")
        if canonical == "expert":
            if params:
                raise ParseError("builtin:expert takes no parameters")
            return ExpertReplayPolicy()
        if canonical == "pid":
            v = float(params.pop("v_target")) if "v_target" in params else None
            if params:
                raise ParseError(f"unknown pid parameters {sorted(params)}")
            return PidFollowerPolicy(v)
        if canonical == "const":
            v = float(params.pop("speed_override")) if "speed_override" in params else None
            if params:
                raise ParseError(f"unknown const parameters {sorted(params)}")
            return ConstantVelocityPolicy(v)
    if spec.startswith("bridge:"):
        rest = spec[len("bridge:"):]
        host, _, port = rest.rpartition(":")
        if not host or not port.isdigit():
            raise ParseError(f"bridge spec must be bridge:<host>:<port>, got {spec!r}")
        from .bridge import BridgePolicyServer

        return BridgePolicyServer(host, int(port))
    raise ParseError(f"unrecognized policy spec {spec!r}")
