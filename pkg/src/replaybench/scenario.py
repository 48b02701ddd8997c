"""Scenario data model: agent tracks, signal schedules, ego assignment.

A scenario is one recorded intersection clip sampled at a fixed 10 Hz.
All types are immutable after construction and validated eagerly; loading
rejects bad documents instead of repairing them.
"""
from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import InvariantError, ParseError
from .geometry import (
    Vec2,
    interp_angle,
    normalize_angle,
    point_segment_distance,
    transform_point,
)
from .hdmap import HDMapModel, point_in_drivable

TICK_HZ = 10
TICK_DT = 1.0 / TICK_HZ

WEATHER_TAGS = ("sunny", "cloudy", "overcast", "rain", "fog", "snow")
TIME_OF_DAY_TAGS = ("morning", "noon", "afternoon", "evening", "night")

# displacement between consecutive samples may exceed the speed-implied
# distance by at most this factor
SPEED_CONSISTENCY_SLACK = 3.0


class AgentCategory(str, Enum):
    CAR = "car"
    TRUCK = "truck"
    BUS = "bus"
    VAN = "van"
    MOTORCYCLE = "motorcycle"
    TRICYCLE = "tricycle"
    CYCLIST = "cyclist"
    PEDESTRIAN = "pedestrian"


VEHICLE_CATEGORIES = frozenset(
    {AgentCategory.CAR, AgentCategory.TRUCK, AgentCategory.BUS, AgentCategory.VAN}
)
VULNERABLE_CATEGORIES = frozenset({AgentCategory.PEDESTRIAN, AgentCategory.CYCLIST})


class SignalState(str, Enum):
    RED = "red"
    YELLOW = "yellow"
    GREEN = "green"
    OFF = "off"


MAIN_BEHAVIORS = ("IPC", "COV", "YLW", "UT", "STP", "STR", "LFT", "RT")
SUB_BEHAVIORS = (
    "COV-LFT", "COV-RT", "COV-STR",
    "IPC-LFT", "IPC-RT", "IPC-STR",
    "YLW-LFT", "YLW-STR",
    "UT-N", "UT-AN",
    "LFT", "RT", "STR", "STP",
)


@dataclass(frozen=True)
class BehaviorLabel:
    main: str
    sub: str

    def __post_init__(self) -> None:
        if self.main not in MAIN_BEHAVIORS:
            raise InvariantError("behavior.main", f"unknown label {self.main!r}")
        if self.sub not in SUB_BEHAVIORS:
            raise InvariantError("behavior.sub", f"unknown label {self.sub!r}")
        prefix = self.sub.split("-")[0]
        if prefix != self.main:
            raise InvariantError("behavior", f"sub {self.sub!r} inconsistent with main {self.main!r}")

    @staticmethod
    def from_sub(sub: str) -> "BehaviorLabel":
        return BehaviorLabel(main=sub.split("-")[0], sub=sub)


@dataclass(frozen=True)
class Pose2:
    """Planar pose; heading is normalized to (-pi, pi] on construction."""

    x: float
    y: float
    heading: float

    def __post_init__(self) -> None:
        for name in ("x", "y", "heading"):
            if not math.isfinite(getattr(self, name)):
                raise InvariantError(f"pose.{name}", "must be finite")
        object.__setattr__(self, "heading", normalize_angle(self.heading))

    @property
    def position(self) -> Vec2:
        return (self.x, self.y)


@dataclass(frozen=True)
class TrackSample:
    tick: int
    pose: Pose2
    speed: float


@dataclass(frozen=True)
class AgentTrack:
    track_id: str
    category: AgentCategory
    length: float
    width: float
    samples: Tuple[TrackSample, ...]

    def __post_init__(self) -> None:
        if not self.samples:
            raise InvariantError(f"track {self.track_id}", "samples must be non-empty")
        if not (self.length > 0 and self.width > 0):
            raise InvariantError(f"track {self.track_id}", "length and width must be positive")
        prev = None
        for smp in self.samples:
            if smp.tick < 0:
                raise InvariantError(f"track {self.track_id}", "ticks must be non-negative")
            if prev is not None:
                if smp.tick <= prev.tick:
                    raise InvariantError(f"track {self.track_id}", "ticks must be strictly increasing")
                dt = (smp.tick - prev.tick) * TICK_DT
                dist = math.hypot(smp.pose.x - prev.pose.x, smp.pose.y - prev.pose.y)
                allowed = SPEED_CONSISTENCY_SLACK * 0.5 * (smp.speed + prev.speed) * dt + 1e-6
                if dist > allowed:
                    raise InvariantError(
                        f"track {self.track_id}",
                        f"displacement {dist:.3f} m over {dt:.1f} s inconsistent with speeds "
                        f"{prev.speed:.2f}/{smp.speed:.2f} m/s",
                    )
            if smp.speed < 0:
                raise InvariantError(f"track {self.track_id}", "speed must be non-negative")
            prev = smp

    @property
    def first_tick(self) -> int:
        return self.samples[0].tick

    @property
    def last_tick(self) -> int:
        return self.samples[-1].tick

    def alive_at(self, tick: int) -> bool:
        return self.first_tick <= tick <= self.last_tick

    def positions(self) -> List[Vec2]:
        return [s.pose.position for s in self.samples]


@dataclass(frozen=True)
class ScheduleEntry:
    tick: int
    state: SignalState


@dataclass(frozen=True)
class SignalGroup:
    group_id: str
    stop_line: Tuple[Vec2, Vec2]
    controlled_lane_ids: Tuple[str, ...]
    schedule: Tuple[ScheduleEntry, ...]

    def __post_init__(self) -> None:
        if not self.schedule:
            raise InvariantError(f"signal {self.group_id}", "schedule must be non-empty")
        if self.schedule[0].tick != 0:
            raise InvariantError(f"signal {self.group_id}", "schedule must cover tick 0")
        for a, b in zip(self.schedule, self.schedule[1:]):
            if b.tick <= a.tick:
                raise InvariantError(f"signal {self.group_id}", "schedule ticks must be strictly increasing")
        a, b = self.stop_line
        if tuple(a) == tuple(b):
            raise InvariantError(f"signal {self.group_id}", "degenerate stop line")


def signal_state_at(g: SignalGroup, tick: int) -> SignalState:
    """State of the latest schedule entry with entry tick <= tick."""
    if tick < g.schedule[0].tick:
        raise ValueError(f"tick {tick} precedes first schedule entry of {g.group_id}")
    ticks = [e.tick for e in g.schedule]
    idx = bisect.bisect_right(ticks, tick) - 1
    return g.schedule[idx].state


@dataclass(frozen=True)
class EgoAssignment:
    agent_id: str
    source: Pose2
    destination: Pose2
    route_waypoints: Tuple[Vec2, ...]

    def __post_init__(self) -> None:
        if len(self.route_waypoints) < 2:
            raise InvariantError("ego.route_waypoints", "need at least 2 waypoints")
        for i in range(len(self.route_waypoints) - 1):
            a = self.route_waypoints[i]
            b = self.route_waypoints[i + 1]
            gap = math.hypot(b[0] - a[0], b[1] - a[1])
            if not (1.0 - 1e-9 <= gap <= 10.0 + 1e-9):
                raise InvariantError(
                    "ego.route_waypoints", f"spacing {gap:.3f} m at index {i} outside [1, 10] m"
                )


@dataclass(frozen=True)
class Scenario:
    scenario_id: str
    intersection_id: str
    tick_hz: int
    n_ticks: int
    weather: str
    time_of_day: str
    behavior: Optional[BehaviorLabel]
    tracks: Tuple[AgentTrack, ...]
    signals: Tuple[SignalGroup, ...]
    ego: EgoAssignment

    def __post_init__(self) -> None:
        if self.tick_hz != TICK_HZ:
            raise InvariantError("tick_hz", f"must be {TICK_HZ}, got {self.tick_hz}")
        if self.n_ticks <= 0:
            raise InvariantError("n_ticks", "must be positive")
        if self.weather not in WEATHER_TAGS:
            raise InvariantError("weather", f"unknown tag {self.weather!r}")
        if self.time_of_day not in TIME_OF_DAY_TAGS:
            raise InvariantError("time_of_day", f"unknown tag {self.time_of_day!r}")
        seen = set()
        for track in self.tracks:
            if track.track_id in seen:
                raise InvariantError("tracks", f"duplicate track_id {track.track_id!r}")
            seen.add(track.track_id)
            if track.last_tick >= self.n_ticks:
                raise InvariantError(
                    f"track {track.track_id}", f"tick {track.last_tick} >= n_ticks {self.n_ticks}"
                )
        ego_track = next((t for t in self.tracks if t.track_id == self.ego.agent_id), None)
        if ego_track is None:
            raise InvariantError("EgoAssignment", f"agent_id {self.ego.agent_id!r} not among tracks")
        path = ego_track.positions()
        for name, pose in (("source", self.ego.source), ("destination", self.ego.destination)):
            d = min(
                point_segment_distance(pose.position, path[i], path[i + 1])
                for i in range(len(path) - 1)
            ) if len(path) > 1 else math.hypot(path[0][0] - pose.x, path[0][1] - pose.y)
            if d > 1.0:
                raise InvariantError(
                    f"EgoAssignment.{name}", f"lies {d:.2f} m off the ego track path (limit 1 m)"
                )

    def ego_track(self) -> AgentTrack:
        for t in self.tracks:
            if t.track_id == self.ego.agent_id:
                return t
        raise KeyError(self.ego.agent_id)

    def track_by_id(self, track_id: str) -> AgentTrack:
        for t in self.tracks:
            if t.track_id == track_id:
                return t
        raise KeyError(track_id)


def sample_track_pose(track: AgentTrack, time_s: float) -> Tuple[Pose2, float]:
    """Pose and speed at a continuous time within the track's sample span.

    Exact stored samples at sample times; linear position/speed and
    shortest-arc heading interpolation in between.
    """
    t0 = track.first_tick * TICK_DT
    t1 = track.last_tick * TICK_DT
    if not (t0 <= time_s <= t1):
        raise ValueError(
            f"time {time_s:.3f} s outside track {track.track_id} span [{t0:.3f}, {t1:.3f}]"
        )
    times = [s.tick * TICK_DT for s in track.samples]
    idx = bisect.bisect_right(times, time_s) - 1
    if idx >= len(track.samples) - 1:
        last = track.samples[-1]
        return last.pose, last.speed
    a = track.samples[idx]
    b = track.samples[idx + 1]
    ta, tb = times[idx], times[idx + 1]
    if time_s == ta:
        return a.pose, a.speed
    u = (time_s - ta) / (tb - ta)
    pose = Pose2(
        x=a.pose.x + u * (b.pose.x - a.pose.x),
        y=a.pose.y + u * (b.pose.y - a.pose.y),
        heading=interp_angle(a.pose.heading, b.pose.heading, u),
    )
    return pose, a.speed + u * (b.speed - a.speed)


def sample_track_at_tick(track: AgentTrack, tick: int) -> Tuple[Pose2, float]:
    """Exact-tick variant of sample_track_pose (no float time round trip)."""
    if not track.alive_at(tick):
        raise ValueError(f"tick {tick} outside track {track.track_id} span")
    ticks = [s.tick for s in track.samples]
    idx = bisect.bisect_right(ticks, tick) - 1
    smp = track.samples[idx]
    if smp.tick == tick:
        return smp.pose, smp.speed
    return sample_track_pose(track, tick * TICK_DT)


# ---------------------------------------------------------------------------
# document I/O

_SCENARIO_KEYS = {
    "scenario_id", "intersection_id", "tick_hz", "n_ticks", "weather",
    "time_of_day", "behavior", "tracks", "signals", "ego",
}
_TRACK_KEYS = {"track_id", "category", "length", "width", "samples"}
_SIGNAL_KEYS = {"group_id", "stop_line", "controlled_lane_ids", "schedule"}
_EGO_KEYS = {"agent_id", "source", "destination", "route_waypoints"}
_BEHAVIOR_KEYS = {"main", "sub"}


def _reject_unknown(obj: dict, allowed: set, where: str) -> None:
    if not isinstance(obj, dict):
        raise ParseError(f"{where}: expected an object")
    extra = set(obj) - allowed
    if extra:
        raise ParseError(f"{where}: unknown keys {sorted(extra)}")
    missing = allowed - set(obj)
    if missing:
        raise ParseError(f"{where}: missing keys {sorted(missing)}")


def _parse_pose(raw, where: str) -> Pose2:
    if not (isinstance(raw, (list, tuple)) and len(raw) == 3):
        raise ParseError(f"{where}: pose must be [x, y, heading]")
    return Pose2(float(raw[0]), float(raw[1]), float(raw[2]))


def load_scenario(data) -> Scenario:
    """Parse and validate a scenario document (bytes or str of UTF-8 JSON)."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ParseError(f"scenario document: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError("scenario document: top level must be an object")
    _reject_unknown(doc, _SCENARIO_KEYS, "scenario document")

    tracks = []
    for i, raw in enumerate(doc["tracks"]):
        _reject_unknown(raw, _TRACK_KEYS, f"tracks[{i}]")
        samples = []
        for arr in raw["samples"]:
            if not (isinstance(arr, (list, tuple)) and len(arr) == 5):
                raise ParseError(f"tracks[{i}]: sample must be [tick, x, y, heading_rad, speed]")
            samples.append(
                TrackSample(
                    tick=int(arr[0]),
                    pose=Pose2(float(arr[1]), float(arr[2]), float(arr[3])),
                    speed=float(arr[4]),
                )
            )
        try:
            category = AgentCategory(str(raw["category"]))
        except ValueError as exc:
            raise InvariantError(f"tracks[{i}].category", str(exc)) from exc
        tracks.append(
            AgentTrack(
                track_id=str(raw["track_id"]),
                category=category,
                length=float(raw["length"]),
                width=float(raw["width"]),
                samples=tuple(samples),
            )
        )

    signals = []
    for i, raw in enumerate(doc["signals"]):
        _reject_unknown(raw, _SIGNAL_KEYS, f"signals[{i}]")
        sched = []
        for arr in raw["schedule"]:
            if not (isinstance(arr, (list, tuple)) and len(arr) == 2):
                raise ParseError(f"signals[{i}]: schedule entry must be [tick, state]")
            try:
                state = SignalState(str(arr[1]))
            except ValueError as exc:
                raise InvariantError(f"signals[{i}].schedule", str(exc)) from exc
            sched.append(ScheduleEntry(tick=int(arr[0]), state=state))
        sl = raw["stop_line"]
        signals.append(
            SignalGroup(
                group_id=str(raw["group_id"]),
                stop_line=((float(sl[0][0]), float(sl[0][1])), (float(sl[1][0]), float(sl[1][1]))),
                controlled_lane_ids=tuple(str(x) for x in raw["controlled_lane_ids"]),
                schedule=tuple(sched),
            )
        )

    raw_ego = doc["ego"]
    _reject_unknown(raw_ego, _EGO_KEYS, "ego")
    ego = EgoAssignment(
        agent_id=str(raw_ego["agent_id"]),
        source=_parse_pose(raw_ego["source"], "ego.source"),
        destination=_parse_pose(raw_ego["destination"], "ego.destination"),
        route_waypoints=tuple((float(p[0]), float(p[1])) for p in raw_ego["route_waypoints"]),
    )

    behavior = None
    if doc["behavior"] is not None:
        _reject_unknown(doc["behavior"], _BEHAVIOR_KEYS, "behavior")
        behavior = BehaviorLabel(main=str(doc["behavior"]["main"]), sub=str(doc["behavior"]["sub"]))

    return Scenario(
        scenario_id=str(doc["scenario_id"]),
        intersection_id=str(doc["intersection_id"]),
        tick_hz=int(doc["tick_hz"]),
        n_ticks=int(doc["n_ticks"]),
        weather=str(doc["weather"]),
        time_of_day=str(doc["time_of_day"]),
        behavior=behavior,
        tracks=tuple(tracks),
        signals=tuple(signals),
        ego=ego,
    )


def scenario_to_dict(s: Scenario) -> dict:
    return {
        "scenario_id": s.scenario_id,
        "intersection_id": s.intersection_id,
        "tick_hz": s.tick_hz,
        "n_ticks": s.n_ticks,
        "weather": s.weather,
        "time_of_day": s.time_of_day,
        "behavior": None if s.behavior is None else {"main": s.behavior.main, "sub": s.behavior.sub},
        "tracks": [
            {
                "track_id": t.track_id,
                "category": t.category.value,
                "length": t.length,
                "width": t.width,
                "samples": [
                    [smp.tick, smp.pose.x, smp.pose.y, smp.pose.heading, smp.speed]
                    for smp in t.samples
                ],
            }
            for t in s.tracks
        ],
        "signals": [
            {
                "group_id": g.group_id,
                "stop_line": [[g.stop_line[0][0], g.stop_line[0][1]],
                              [g.stop_line[1][0], g.stop_line[1][1]]],
                "controlled_lane_ids": list(g.controlled_lane_ids),
                "schedule": [[e.tick, e.state.value] for e in g.schedule],
            }
            for g in s.signals
        ],
        "ego": {
            "agent_id": s.ego.agent_id,
            "source": [s.ego.source.x, s.ego.source.y, s.ego.source.heading],
            "destination": [s.ego.destination.x, s.ego.destination.y, s.ego.destination.heading],
            "route_waypoints": [[x, y] for x, y in s.ego.route_waypoints],
        },
    }


def serialize_scenario(s: Scenario) -> str:
    return json.dumps(scenario_to_dict(s), sort_keys=True, separators=(",", ":"))


def transform_scenario(s: Scenario, angle: float, tx: float, ty: float) -> Scenario:
    """Rigidly transform all scenario geometry (rotate about origin, translate)."""

    def tp(p: Vec2) -> Vec2:
        return transform_point(p, angle, tx, ty)

    def tpose(p: Pose2) -> Pose2:
        x, y = tp((p.x, p.y))
        return Pose2(x, y, p.heading + angle)

    return replace(
        s,
        tracks=tuple(
            replace(
                t,
                samples=tuple(
                    TrackSample(tick=smp.tick, pose=tpose(smp.pose), speed=smp.speed)
                    for smp in t.samples
                ),
            )
            for t in s.tracks
        ),
        signals=tuple(
            replace(g, stop_line=(tp(g.stop_line[0]), tp(g.stop_line[1]))) for g in s.signals
        ),
        ego=EgoAssignment(
            agent_id=s.ego.agent_id,
            source=tpose(s.ego.source),
            destination=tpose(s.ego.destination),
            route_waypoints=tuple(tp(p) for p in s.ego.route_waypoints),
        ),
    )


# ---------------------------------------------------------------------------
# cross-checks against a map

@dataclass(frozen=True)
class Violation:
    code: str
    subject: str
    message: str


MAP_MARGIN_M = 50.0


def validate_scenario(s: Scenario, m: HDMapModel) -> List[Violation]:
    """Cross-checks between a scenario and its map; violations are data."""
    out: List[Violation] = []
    x0, y0, x1, y1 = m.bounds(margin=MAP_MARGIN_M)
    for track in s.tracks:
        for smp in track.samples:
            if not (x0 <= smp.pose.x <= x1 and y0 <= smp.pose.y <= y1):
                out.append(
                    Violation(
                        code="track-out-of-bounds",
                        subject=track.track_id,
                        message=(
                            f"sample at tick {smp.tick} ({smp.pose.x:.1f}, {smp.pose.y:.1f}) "
                            f"outside map bounds + {MAP_MARGIN_M:.0f} m"
                        ),
                    )
                )
                break
    for i, wp in enumerate(s.ego.route_waypoints):
        if not point_in_drivable(m, wp):
            out.append(
                Violation(
                    code="route-off-drivable",
                    subject=s.ego.agent_id,
                    message=f"route waypoint {i} ({wp[0]:.1f}, {wp[1]:.1f}) outside drivable area",
                )
            )
            break
    lane_ids = m.lane_ids()
    for g in s.signals:
        missing = sorted(set(g.controlled_lane_ids) - lane_ids)
        if missing:
            out.append(
                Violation(
                    code="dangling-lane-ref",
                    subject=g.group_id,
                    message=f"controlled lanes not in map: {missing}",
                )
            )
    return out


# ---------------------------------------------------------------------------
# dataset statistics

@dataclass(frozen=True)
class DistributionReport:
    n_scenarios: int
    behavior_counts: Dict[str, int]
    agent_counts: Dict[str, int]
    weather_counts: Dict[str, int]
    time_of_day_counts: Dict[str, int]

    @staticmethod
    def _fractions(counts: Dict[str, int]) -> Dict[str, float]:
        total = sum(counts.values())
        return {k: v / total for k, v in sorted(counts.items())} if total else {}

    @property
    def behavior_fractions(self) -> Dict[str, float]:
        return self._fractions(self.behavior_counts)

    @property
    def agent_fractions(self) -> Dict[str, float]:
        return self._fractions(self.agent_counts)

    @property
    def weather_fractions(self) -> Dict[str, float]:
        return self._fractions(self.weather_counts)

    @property
    def time_of_day_fractions(self) -> Dict[str, float]:
        return self._fractions(self.time_of_day_counts)

    def to_dict(self) -> dict:
        return {
            "n_scenarios": self.n_scenarios,
            "behavior": {"counts": dict(sorted(self.behavior_counts.items())),
                         "fractions": self.behavior_fractions},
            "agents": {"counts": dict(sorted(self.agent_counts.items())),
                       "fractions": self.agent_fractions},
            "weather": {"counts": dict(sorted(self.weather_counts.items())),
                        "fractions": self.weather_fractions},
            "time_of_day": {"counts": dict(sorted(self.time_of_day_counts.items())),
                            "fractions": self.time_of_day_fractions},
        }


def scenario_stats(scenarios: Sequence[Scenario]) -> DistributionReport:
    """Counts and fractions per behavior, agent category, weather and time."""
    if not scenarios:
        raise ValueError("scenario set is empty")
    behavior: Dict[str, int] = {}
    agents: Dict[str, int] = {}
    weather: Dict[str, int] = {}
    tod: Dict[str, int] = {}
    for s in scenarios:
        key = s.behavior.main if s.behavior is not None else "unlabeled"
        behavior[key] = behavior.get(key, 0) + 1
        weather[s.weather] = weather.get(s.weather, 0) + 1
        tod[s.time_of_day] = tod.get(s.time_of_day, 0) + 1
        for t in s.tracks:
            agents[t.category.value] = agents.get(t.category.value, 0) + 1
    return DistributionReport(
        n_scenarios=len(scenarios),
        behavior_counts=behavior,
        agent_counts=agents,
        weather_counts=weather,
        time_of_day_counts=tod,
    )
