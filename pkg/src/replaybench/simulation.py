"""Deterministic fixed-step closed-loop episode execution.

Each tick at 10 Hz: replay the recorded agents and signals, hand the policy
an observation, translate its reply into a control command, integrate the
ego with a kinematic bicycle model, and run the infraction monitor.  Two
runs with identical inputs produce bit-identical traces.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .config import EvalConfig, VehicleParams
from .errors import PolicyFault, ProtocolError
from .geometry import (
    OrientedBox,
    Vec2,
    clamp,
    normalize_angle,
    point_at_arclength,
    polyline_length,
    project_onto_polyline,
)
from .hdmap import HDMapModel
from .infractions import (
    AgentSnapshot,
    Infraction,
    InfractionKind,
    InfractionMonitor,
)
from .metrics import EpisodeResult, compute_success
from .scenario import (
    Pose2,
    Scenario,
    SignalState,
    TICK_DT,
    sample_track_at_tick,
    signal_state_at,
)

INTEGRATION_SUBSTEPS = 4


@dataclass(frozen=True)
class EgoState:
    pose: Pose2
    speed: float
    steering_angle: float
    acceleration: float

    def __post_init__(self) -> None:
        if self.speed < 0:
            raise ValueError("speed must be non-negative")


@dataclass(frozen=True)
class ControlCommand:
    """Normalized actuation; components are clamped to range on construction."""

    steer: float
    throttle: float
    brake: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "steer", clamp(float(self.steer), -1.0, 1.0))
        object.__setattr__(self, "throttle", clamp(float(self.throttle), 0.0, 1.0))
        object.__setattr__(self, "brake", clamp(float(self.brake), 0.0, 1.0))


@dataclass(frozen=True)
class WaypointPlan:
    """Waypoint reply in the world frame, optionally with a target speed."""

    points: Tuple[Vec2, ...]
    target_speed: Optional[float] = None


PolicyReply = Union[ControlCommand, WaypointPlan]


@dataclass(frozen=True)
class SignalView:
    group_id: str
    state: SignalState
    stop_line: Tuple[Vec2, Vec2]


@dataclass(frozen=True)
class Observation:
    tick: int
    ego: EgoState
    route_remaining: Tuple[Vec2, ...]
    agents: Tuple[AgentSnapshot, ...]
    signals: Tuple[SignalView, ...]


@dataclass(frozen=True)
class TickRecord:
    tick: int
    ego: EgoState
    command: ControlCommand
    route_s: float


@dataclass(frozen=True)
class EpisodeTrace:
    records: Tuple[TickRecord, ...]
    termination: str
    wall_time_s: float  # measurement only; excluded from serialized artifacts


def integrate_ego(state: EgoState, cmd: ControlCommand, vp: VehicleParams,
                  dt: float = TICK_DT) -> EgoState:
    """One 10 Hz tick of the kinematic bicycle, 4 semi-implicit sub-steps.

    Per sub-step: acceleration from throttle/brake/drag updates speed first,
    the steering angle rate-limits toward the commanded value, then heading
    and position advance with the updated quantities.
    """
    h = dt / INTEGRATION_SUBSTEPS
    x, y, theta = state.pose.x, state.pose.y, state.pose.heading
    v = state.speed
    delta = state.steering_angle
    target_delta = cmd.steer * vp.max_steer
    accel = 0.0
    for _ in range(INTEGRATION_SUBSTEPS):
        accel = cmd.throttle * vp.max_accel - cmd.brake * vp.max_brake - vp.drag_coeff * v * v
        v = clamp(v + accel * h, 0.0, vp.max_speed)
        step = clamp(target_delta - delta, -vp.max_steer_rate * h, vp.max_steer_rate * h)
        delta = clamp(delta + step, -vp.max_steer, vp.max_steer)
        theta = normalize_angle(theta + (v / vp.wheelbase) * math.tan(delta) * h)
        x += v * math.cos(theta) * h
        y += v * math.sin(theta) * h
    return EgoState(
        pose=Pose2(x, y, theta), speed=v, steering_angle=delta, acceleration=accel
    )


class WaypointController:
    """Pure-pursuit steering plus a PI speed loop with feedforward.

    The longitudinal law turns the speed error into a desired acceleration
    (PI, in m/s^2) plus a slope feedforward from consecutive target speeds,
    then compensates drag; throttle and brake are mutually exclusive.
    Waypoint lists shorter than the lookahead fall back to their last point.
    """

    def __init__(self, cfg: EvalConfig):
        self._cfg = cfg
        self._integral = 0.0
        self._prev_target: Optional[float] = None

    def reset(self) -> None:
        self._integral = 0.0
        self._prev_target = None

    def _goal_point(self, ego: EgoState, points: Sequence[Vec2], lookahead: float) -> Vec2:
        ex, ey = ego.pose.x, ego.pose.y
        for p in points:
            if math.hypot(p[0] - ex, p[1] - ey) >= lookahead:
                return p
        return points[-1]

    def command(
        self, ego: EgoState, points: Sequence[Vec2], v_target: float, dt: float = TICK_DT
    ) -> ControlCommand:
        cfg = self._cfg
        vp = cfg.vehicle
        if not points:
            raise ValueError("waypoint list is empty")
        lookahead = clamp(cfg.lookahead_gain * ego.speed, cfg.lookahead_min, cfg.lookahead_max)
        gx, gy = self._goal_point(ego, points, lookahead)
        dx, dy = gx - ego.pose.x, gy - ego.pose.y
        dist = math.hypot(dx, dy)
        if dist < 1e-6:
            steer = 0.0
        else:
            alpha = normalize_angle(math.atan2(dy, dx) - ego.pose.heading)
            curvature = 2.0 * math.sin(alpha) / max(dist, 1e-6)
            steer = clamp(math.atan(curvature * vp.wheelbase) / vp.max_steer, -1.0, 1.0)

        error = v_target - ego.speed
        self._integral = clamp(self._integral + error * dt, -3.0, 3.0)
        slope = 0.0
        if self._prev_target is not None:
            slope = clamp((v_target - self._prev_target) / dt, -vp.max_brake, vp.max_accel)
        self._prev_target = v_target
        accel_des = slope + cfg.speed_kp * error + cfg.speed_ki * self._integral
        net = accel_des + vp.drag_coeff * ego.speed * ego.speed
        if net >= 0.0:
            return ControlCommand(steer=steer, throttle=net / vp.max_accel, brake=0.0)
        return ControlCommand(steer=steer, throttle=0.0, brake=-net / vp.max_brake)


def waypoints_to_control(
    ego: EgoState,
    points: Sequence[Vec2],
    v_target: float,
    cfg: Optional[EvalConfig] = None,
    controller: Optional[WaypointController] = None,
) -> ControlCommand:
    """Single-shot waypoint translation; pass a controller to keep PI state."""
    ctl = controller if controller is not None else WaypointController(cfg or EvalConfig())
    return ctl.command(ego, points, v_target)


def replay_agents(scenario: Scenario, tick: int) -> List[AgentSnapshot]:
    """Poses of all non-ego agents at a tick, sorted by track id.

    Inside the recorded clip an agent exists only within its sample span.
    After the clip ends, agents alive at the final recorded tick freeze at
    their last sample (reported stationary); all others stay absent.
    """
    out: List[AgentSnapshot] = []
    last_tick = scenario.n_ticks - 1
    for track in scenario.tracks:
        if track.track_id == scenario.ego.agent_id:
            continue
        if tick > last_tick:
            if track.last_tick < last_tick:
                continue
            pose, speed = track.samples[-1].pose, 0.0
        elif track.alive_at(tick):
            pose, speed = sample_track_at_tick(track, tick)
        else:
            continue
        out.append(
            AgentSnapshot(
                track_id=track.track_id,
                category=track.category,
                box=OrientedBox(pose.x, pose.y, pose.heading, track.length, track.width),
                speed=speed,
            )
        )
    out.sort(key=lambda a: a.track_id)
    return out


def signal_states_at(scenario: Scenario, tick: int) -> Dict[str, SignalState]:
    """Signal states at a tick; the last schedule entry holds past clip end."""
    return {g.group_id: signal_state_at(g, tick) for g in scenario.signals}


def _route_remaining(route: Sequence[Vec2], s_mono: float) -> Tuple[Vec2, ...]:
    """Interpolated point at the covered arc length plus everything beyond it."""
    head = point_at_arclength(route, s_mono)
    acc = 0.0
    out: List[Vec2] = [head]
    for i in range(len(route) - 1):
        seg = math.hypot(route[i + 1][0] - route[i][0], route[i + 1][1] - route[i][1])
        acc += seg
        if acc > s_mono + 1e-9:
            out.append(route[i + 1])
    if len(out) == 1:
        out.append(route[-1])
    return tuple(out)


def run_episode(
    scenario: Scenario,
    hdmap: HDMapModel,
    policy,
    cfg: Optional[EvalConfig] = None,
    seed: int = 0,
) -> Tuple[EpisodeResult, EpisodeTrace]:
    """Execute one closed-loop episode; deterministic given its inputs.

    The policy must provide reset(scenario, cfg, seed) and act(observation)
    returning a ControlCommand or a WaypointPlan; an optional finish(result)
    hook is called after the episode.
    """
    cfg = cfg or EvalConfig()
    started = time.perf_counter()
    ego_track = scenario.ego_track()
    route = scenario.ego.route_waypoints
    total_len = polyline_length(route)
    dest = scenario.ego.destination.position

    first = ego_track.samples[0]
    ego = EgoState(pose=first.pose, speed=first.speed, steering_angle=0.0, acceleration=0.0)

    controller = WaypointController(cfg)
    monitor = InfractionMonitor(scenario, hdmap, cfg)
    policy.reset(scenario, cfg, seed)

    timeout_ticks = cfg.timeout_ticks(scenario.n_ticks)
    s0, d0 = project_onto_polyline(route, ego.pose.position)
    s_mono = s0 if abs(d0) <= cfg.route_deviation_limit else 0.0

    records: List[TickRecord] = []
    infractions: List[Infraction] = []
    termination = "timeout"
    failure: Optional[str] = None

    tick = 0
    while tick < timeout_ticks:
        agents = replay_agents(scenario, tick)
        states = {g.group_id: signal_state_at(g, tick) for g in scenario.signals}
        visible = tuple(
            a for a in agents
            if math.hypot(a.box.cx - ego.pose.x, a.box.cy - ego.pose.y) <= cfg.sensing_range
        )
        obs = Observation(
            tick=tick,
            ego=ego,
            route_remaining=_route_remaining(route, s_mono),
            agents=visible,
            signals=tuple(
                SignalView(g.group_id, states[g.group_id], g.stop_line) for g in scenario.signals
            ),
        )
        try:
            reply = policy.act(obs)
            if isinstance(reply, ControlCommand):
                cmd = reply
            elif isinstance(reply, WaypointPlan):
                if not reply.points:
                    raise PolicyFault("waypoint reply carries no points")
                v_target = reply.target_speed if reply.target_speed is not None else cfg.target_speed
                cmd = controller.command(ego, reply.points, v_target)
            else:
                raise PolicyFault(f"unsupported policy reply type {type(reply).__name__}")
        except (PolicyFault, ProtocolError) as exc:
            failure = str(exc)
            break

        ego = integrate_ego(ego, cmd, cfg.vehicle)
        tick += 1

        s_inst, d_inst = project_onto_polyline(route, ego.pose.position)
        if abs(d_inst) <= cfg.route_deviation_limit and s_inst > s_mono:
            s_mono = s_inst
        records.append(TickRecord(tick=tick, ego=ego, command=cmd, route_s=s_mono))

        ego_box = OrientedBox(
            ego.pose.x, ego.pose.y, ego.pose.heading, ego_track.length, ego_track.width
        )
        chk_agents = replay_agents(scenario, tick)
        chk_states = {g.group_id: signal_state_at(g, tick) for g in scenario.signals}
        new_infs = monitor.update(tick, ego_box, chk_agents, chk_states, d_inst)
        infractions.extend(new_infs)

        if any(inf.terminal for inf in new_infs):
            termination = next(inf for inf in new_infs if inf.terminal).kind.value
            break
        if math.hypot(ego.pose.x - dest[0], ego.pose.y - dest[1]) <= cfg.arrival_radius:
            termination = "destination_reached"
            break

    if failure is not None:
        termination = "policy_failure"
        infractions.append(
            Infraction(
                kind=InfractionKind.POLICY_FAILURE,
                tick=tick,
                penalty=cfg.penalty(InfractionKind.POLICY_FAILURE.value),
                terminal=True,
                subject=failure[:200],
            )
        )
    elif termination == "timeout":
        infractions.append(
            Infraction(
                kind=InfractionKind.TIMEOUT,
                tick=tick,
                penalty=cfg.penalty(InfractionKind.TIMEOUT.value),
                terminal=False,
                subject=None,
            )
        )

    rc = min(1.0, max(0.0, s_mono / total_len)) if total_len > 0 else 0.0
    if termination == "destination_reached":
        rc = 1.0  # arrival at the goal counts as full completion
    success = compute_success(rc, termination, infractions, cfg)
    result = EpisodeResult(
        scenario_id=scenario.scenario_id,
        rc=rc,
        infractions=tuple(infractions),
        success=success,
        termination=termination,
        duration_ticks=len(records),
    )
    trace = EpisodeTrace(
        records=tuple(records),
        termination=termination,
        wall_time_s=time.perf_counter() - started,
    )
    finish = getattr(policy, "finish", None)
    if finish is not None:
        finish(result)
    return result, trace
