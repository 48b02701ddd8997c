"""Deterministic synthetic scenarios on a four-way intersection.

The map is a symmetric crossroad (two lanes per direction of travel,
crosswalks, per-approach stop lines, four signal groups) and every scenario
realizes one of the 14 behavior sub-labels with its ground truth embedded.
Background agents follow lane centerlines and respect their signals.  All
randomness flows from the seed, so equal specs yield byte-identical
documents.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import InvariantError
from .geometry import Vec2, normalize_angle
from .hdmap import HDMapModel, Lane, StopLine
from .scenario import (
    AgentCategory,
    AgentTrack,
    BehaviorLabel,
    EgoAssignment,
    Pose2,
    Scenario,
    ScheduleEntry,
    SignalGroup,
    SignalState,
    TICK_DT,
    TIME_OF_DAY_TAGS,
    TrackSample,
    WEATHER_TAGS,
)

LANE_W = 3.5
INNER = 0.5 * LANE_W          # 1.75, inner lane offset from the road axis
OUTER = 1.5 * LANE_W          # 5.25, outer lane offset
ROAD_HALF = 2 * LANE_W        # 7.0
STOP_X = 12.0                 # stop-line distance from the center
ARM = 120.0                   # arm length; outlasts any coasting policy
CROSSWALK_NEAR, CROSSWALK_FAR = 8.0, 11.0

MAP_ID = "xint-4way"

DIRECTIONS = ("eb", "nb", "wb", "sb")  # counterclockwise order


class GeneratorError(InvariantError):
    def __init__(self, reason: str):
        super().__init__("generator", reason)


# ---------------------------------------------------------------------------
# path primitives


@dataclass(frozen=True)
class _Straight:
    p0: Vec2
    p1: Vec2

    @property
    def length(self) -> float:
        return math.hypot(self.p1[0] - self.p0[0], self.p1[1] - self.p0[1])

    def at(self, s: float) -> Tuple[Vec2, float]:
        u = s / self.length
        heading = math.atan2(self.p1[1] - self.p0[1], self.p1[0] - self.p0[0])
        return (
            (self.p0[0] + u * (self.p1[0] - self.p0[0]),
             self.p0[1] + u * (self.p1[1] - self.p0[1])),
            heading,
        )


@dataclass(frozen=True)
class _Arc:
    center: Vec2
    radius: float
    angle0: float
    sweep: float  # signed; positive turns left

    @property
    def length(self) -> float:
        return self.radius * abs(self.sweep)

    def at(self, s: float) -> Tuple[Vec2, float]:
        a = self.angle0 + math.copysign(s / self.radius, self.sweep)
        pos = (
            self.center[0] + self.radius * math.cos(a),
            self.center[1] + self.radius * math.sin(a),
        )
        heading = a + math.copysign(0.5 * math.pi, self.sweep)
        return pos, normalize_angle(heading)


class Path:
    """Arc-length-parameterized chain of straights and arcs."""

    def __init__(self, pieces: Sequence):
        self._pieces = list(pieces)
        self._cum = []
        acc = 0.0
        for piece in self._pieces:
            acc += piece.length
            self._cum.append(acc)
        self.length = acc

    def at(self, s: float) -> Tuple[Vec2, float]:
        s = min(max(s, 0.0), self.length)
        prev = 0.0
        for piece, cum in zip(self._pieces, self._cum):
            if s <= cum or piece is self._pieces[-1]:
                return piece.at(min(s - prev, piece.length))
            prev = cum
        raise AssertionError("unreachable")

    def polyline(self, step: float = 0.5) -> List[Vec2]:
        n = max(2, int(math.ceil(self.length / step)) + 1)
        return [self.at(self.length * k / (n - 1))[0] for k in range(n)]


def straight_then_arc_then_straight(
    approach: Vec2, turn_start: Vec2, center: Vec2, radius: float,
    angle0: float, sweep: float, exit_end: Vec2,
) -> Path:
    arc = _Arc(center, radius, angle0, sweep)
    exit_start, _ = arc.at(arc.length)
    return Path([_Straight(approach, turn_start), arc, _Straight(exit_start, exit_end)])


# ---------------------------------------------------------------------------
# the crossroad map


def _rect(x0: float, y0: float, x1: float, y1: float) -> Tuple[Vec2, ...]:
    return ((x0, y0), (x1, y0), (x1, y1), (x0, y1))


def make_crossroad_map() -> HDMapModel:
    """Symmetric four-way intersection: identical under 90-degree rotation."""
    lanes = []
    # travel direction -> (unit direction, lateral sign for right-hand side)
    for d, (ux, uy) in zip(DIRECTIONS, ((1, 0), (0, 1), (-1, 0), (0, -1))):
        # right-hand traffic: lanes sit right of the road axis along travel
        rx, ry = uy, -ux  # right normal
        for i, offset in enumerate((INNER, OUTER)):
            p0 = (-ARM * ux + offset * rx, -ARM * uy + offset * ry)
            p1 = (ARM * ux + offset * rx, ARM * uy + offset * ry)
            lanes.append(
                Lane(
                    lane_id=f"{d}{i}",
                    centerline=(p0, p1),
                    width=LANE_W,
                    successor_ids=(),
                    signal_group_id=f"g_{d}",
                )
            )
    stop_lines = (
        StopLine(segment=((-STOP_X, -ROAD_HALF), (-STOP_X, 0.0)), signal_group_id="g_eb"),
        StopLine(segment=((0.0, -STOP_X), (ROAD_HALF, -STOP_X)), signal_group_id="g_nb"),
        StopLine(segment=((STOP_X, 0.0), (STOP_X, ROAD_HALF)), signal_group_id="g_wb"),
        StopLine(segment=((-ROAD_HALF, STOP_X), (0.0, STOP_X)), signal_group_id="g_sb"),
    )
    crosswalks = (
        _rect(-CROSSWALK_FAR, -ROAD_HALF, -CROSSWALK_NEAR, ROAD_HALF),  # west arm
        _rect(CROSSWALK_NEAR, -ROAD_HALF, CROSSWALK_FAR, ROAD_HALF),    # east arm
        _rect(-ROAD_HALF, CROSSWALK_NEAR, ROAD_HALF, CROSSWALK_FAR),    # north arm
        _rect(-ROAD_HALF, -CROSSWALK_FAR, ROAD_HALF, -CROSSWALK_NEAR),  # south arm
    )
    # corner fillets give the concave curb corners a drivable radius
    fillets = tuple(
        ((sx * ROAD_HALF, sy * 4.0), (sx * 4.0, sy * ROAD_HALF), (sx * ROAD_HALF, sy * ROAD_HALF))
        for sx in (-1.0, 1.0)
        for sy in (-1.0, 1.0)
    )
    drivable = (
        _rect(-ARM, -ROAD_HALF, ARM, ROAD_HALF),
        _rect(-ROAD_HALF, -ARM, ROAD_HALF, ARM),
    ) + fillets
    return HDMapModel(
        map_id=MAP_ID,
        lanes=tuple(lanes),
        crosswalks=crosswalks,
        stop_lines=stop_lines,
        drivable_area=drivable,
    )


# ---------------------------------------------------------------------------
# motion synthesis


@dataclass
class _DriveResult:
    samples: List[Tuple[int, float, float, float, float]]
    s_series: List[float]
    release_tick: Optional[int]


def drive_along(
    path: Path,
    cruise: float,
    *,
    start_tick: int = 0,
    start_speed: Optional[float] = None,
    slow_zones: Sequence[Tuple[float, float, float]] = (),
    stop_at: Optional[Tuple[float, Optional[int]]] = None,
    a_acc: float = 1.5,
    a_dec: float = 2.0,
    max_ticks: int = 3000,
    end_tick: Optional[int] = None,
) -> _DriveResult:
    """Kinematically plausible progress along a path at 10 Hz.

    slow_zones: (s_from, s_to, v_limit) speed caps with braking envelopes.
    stop_at: (arc length, wait ticks) -> stop 1 m short, dwell, then go;
    wait ticks None means hold forever (red that never releases).
    end_tick truncates the recording (for agents still holding at clip end).
    """
    dt = TICK_DT
    hold_gap = 1.0
    v = cruise if start_speed is None else start_speed
    s = 0.0
    t = start_tick
    samples = []
    s_series = []
    release_tick: Optional[int] = None
    stop_pending = stop_at is not None
    dwell = 0
    while True:
        (x, y), heading = path.at(s)
        samples.append((t, x, y, heading, v))
        s_series.append(s)
        if s >= path.length - 1e-9:
            break
        if end_tick is not None and t >= end_tick:
            break
        if t - start_tick > max_ticks:
            raise GeneratorError(f"path not completed within {max_ticks} ticks")
        v_allow = cruise
        for s0, s1, vz in slow_zones:
            if s < s0:
                v_allow = min(v_allow, math.sqrt(vz * vz + 2 * a_dec * (s0 - s)))
            elif s <= s1:
                v_allow = min(v_allow, vz)
        waiting = False
        if stop_pending:
            target = stop_at[0] - hold_gap
            if s >= target - 0.15:
                waiting = True
            else:
                v_allow = min(v_allow, math.sqrt(2 * a_dec * (target - s)))
        if waiting:
            v = 0.0
            dwell += 1
            if stop_at[1] is not None and dwell >= stop_at[1]:
                stop_pending = False
                release_tick = t + 1
            t += 1
            continue
        v = min(v + a_acc * dt, max(v_allow, v - a_dec * dt))
        v = max(v, 0.0)
        s = min(path.length, s + v * dt)
        t += 1
    return _DriveResult(samples=samples, s_series=s_series, release_tick=release_tick)


def uniform_motion(
    path: Path, speed: float, conflict_s: float, conflict_tick: int,
    last_tick: int,
) -> List[Tuple[int, float, float, float, float]]:
    """Constant-speed traversal timed to reach conflict_s at conflict_tick."""
    samples = []
    for t in range(0, last_tick + 1):
        s = conflict_s + (t - conflict_tick) * speed * TICK_DT
        if s < 0.0 or s > path.length:
            continue
        (x, y), heading = path.at(s)
        samples.append((t, x, y, heading, speed))
    if not samples:
        raise GeneratorError("uniform motion never enters its path within the clip")
    return samples


def _samples_to_track(track_id, category, length, width, raw) -> AgentTrack:
    return AgentTrack(
        track_id=track_id,
        category=category,
        length=length,
        width=width,
        samples=tuple(
            TrackSample(tick=t, pose=Pose2(x, y, h), speed=v) for (t, x, y, h, v) in raw
        ),
    )


def _rotate_samples(raw, k: int):
    """Rotate sample tuples by k * 90 degrees about the origin."""
    if k % 4 == 0:
        return list(raw)
    c, s = math.cos(k * math.pi / 2), math.sin(k * math.pi / 2)
    out = []
    for (t, x, y, h, v) in raw:
        out.append((t, x * c - y * s, x * s + y * c, normalize_angle(h + k * math.pi / 2), v))
    return out


def _rotate_point(p: Vec2, k: int) -> Vec2:
    if k % 4 == 0:
        return p
    c, s = math.cos(k * math.pi / 2), math.sin(k * math.pi / 2)
    return (p[0] * c - p[1] * s, p[0] * s + p[1] * c)


def rotated_direction(d: str, k: int) -> str:
    return DIRECTIONS[(DIRECTIONS.index(d) + k) % 4]


# ---------------------------------------------------------------------------
# ego maneuvers (canonical frame: ego approaches eastbound from the west)

_APPROACH_X = -55.0
_UT_HOOK_R = 8.0
_UT_BULB_R = 4.5
_UT_HOOK_COS = 0.84  # solves the lane-to-lane lateral displacement
_UT_HOOK_ANGLE = math.acos(_UT_HOOK_COS)


def _ut_path(pivot_x: float) -> Path:
    """U-turn: a slight right-hand hook, then a wide left bulb back west.

    A single semicircle between the lane centerlines would need a 3.5 m
    radius, tighter than the bicycle's full steering lock; the hook buys the
    bulb a drivable 4.5 m radius.
    """
    b = _UT_HOOK_ANGLE
    hook = _Arc(center=(pivot_x, -INNER - _UT_HOOK_R), radius=_UT_HOOK_R,
                angle0=0.5 * math.pi, sweep=-b)
    p1, h1 = hook.at(hook.length)
    c1 = (p1[0] + _UT_BULB_R * math.sin(b), p1[1] + _UT_BULB_R * math.cos(b))
    bulb = _Arc(center=c1, radius=_UT_BULB_R, angle0=-b - 0.5 * math.pi,
                sweep=math.pi + b)
    p2, _ = bulb.at(bulb.length)
    return Path([
        _Straight((_APPROACH_X, -INNER), (pivot_x, -INNER)),
        hook,
        bulb,
        _Straight(p2, (_APPROACH_X, OUTER)),
    ])


def _ego_geometry(base: str) -> Tuple[Path, Tuple[Tuple[float, float, float], ...]]:
    """Path plus slow zones (s_from, s_to, speed cap) for a base maneuver."""
    if base == "STR":
        return Path([_Straight((_APPROACH_X, -INNER), (55.0, -INNER))]), ()
    if base == "LFT":
        path = straight_then_arc_then_straight(
            approach=(_APPROACH_X, -INNER), turn_start=(-8.25, -INNER),
            center=(-8.25, 8.25), radius=10.0, angle0=-0.5 * math.pi,
            sweep=0.5 * math.pi, exit_end=(INNER, 55.0),
        )
        turn_start = path._pieces[0].length
        return path, ((turn_start, turn_start + path._pieces[1].length, 5.0),)
    if base == "RT":
        path = straight_then_arc_then_straight(
            approach=(_APPROACH_X, -OUTER), turn_start=(-10.25, -OUTER),
            center=(-10.25, -10.25), radius=5.0, angle0=0.5 * math.pi,
            sweep=-0.5 * math.pi, exit_end=(-OUTER, -55.0),
        )
        turn_start = path._pieces[0].length
        return path, ((turn_start, turn_start + path._pieces[1].length, 3.5),)
    if base in ("UT-N", "UT-AN"):
        path = _ut_path(-9.0 if base == "UT-N" else -17.0)
        turn_start = path._pieces[0].length
        turn_end = turn_start + path._pieces[1].length + path._pieces[2].length
        return path, ((turn_start, turn_end, 3.3),)
    raise GeneratorError(f"no ego geometry for {base!r}")


_EGO_STOP_S = _APPROACH_X * -1 - STOP_X  # arc length at the stop line, 43 m


def _lane_path(d: str, lane: int) -> Path:
    ux, uy = {"eb": (1, 0), "nb": (0, 1), "wb": (-1, 0), "sb": (0, -1)}[d]
    rx, ry = uy, -ux
    off = (INNER, OUTER)[lane]
    p0 = (-55.0 * ux + off * rx, -55.0 * uy + off * ry)
    p1 = (55.0 * ux + off * rx, 55.0 * uy + off * ry)
    return Path([_Straight(p0, p1)])


def _wb_left_path(exit_lane: int) -> Path:
    """Oncoming (westbound) left turn into the southbound exit."""
    radius = 8.0 if exit_lane == 0 else 7.0
    exit_x = -INNER if exit_lane == 0 else -OUTER
    a = exit_x + radius
    return straight_then_arc_then_straight(
        approach=(55.0, INNER), turn_start=(a, INNER),
        center=(a, INNER - radius), radius=radius, angle0=0.5 * math.pi,
        sweep=0.5 * math.pi, exit_end=(exit_x, -55.0),
    )


_PED_CROSS_WEST = Path([_Straight((-9.5, -9.0), (-9.5, 9.0))])
_PED_CROSS_WEST_REV = Path([_Straight((-9.5, 9.0), (-9.5, -9.0))])

_AGENT_DIMS = {
    AgentCategory.CAR: (4.6, 1.9),
    AgentCategory.VAN: (5.0, 2.0),
    AgentCategory.TRUCK: (8.0, 2.5),
    AgentCategory.BUS: (12.0, 3.0),
    AgentCategory.MOTORCYCLE: (2.2, 0.8),
    AgentCategory.TRICYCLE: (2.6, 1.2),
    AgentCategory.CYCLIST: (1.8, 0.6),
    AgentCategory.PEDESTRIAN: (0.6, 0.6),
}

# conflict partner timing: how many ticks before the ego the partner clears
# the shared point; calibrated so the closest pass sits inside the behavior
# thresholds with margin against controller tracking error
_IPC_LEAD = {"pedestrian": 28, "cyclist": 16}
_COV_LEAD = {"COV-STR": 20, "COV-LFT": 30, "COV-RT": 20}
_COV_SPEED = {"COV-STR": 4.5, "COV-LFT": 7.0, "COV-RT": 4.2}
# the merging partner's recording ends before the faster ego closes on it
_COV_PARTNER_END_AFTER = {"COV-RT": 12}

# background slots guaranteed free of the ego's swept path per sub-label
_BG_SLOTS: Dict[str, Tuple[str, ...]] = {
    "STR": ("wb0_cruise", "eb1_cruise", "nb1_hold", "sb0_hold", "ped_north", "ped_south"),
    "LFT": ("eb1_cruise", "nb1_hold", "sb0_hold", "ped_south", "ped_east"),
    "RT": ("wb0_cruise", "eb0_cruise", "nb1_hold", "ped_north", "ped_east"),
    # the U-turn hook swings the ego body across the outer lane: no eb1 traffic
    "UT-N": ("nb1_hold", "sb0_hold", "ped_north", "ped_south", "ped_east"),
    "UT-AN": ("nb1_hold", "sb0_hold", "ped_north", "ped_south", "ped_east"),
    "STP": ("nb1_hold", "sb0_hold", "wb0_hold", "ped_north", "ped_south"),
    "YLW-STR": ("eb1_cruise", "nb1_hold", "sb0_hold", "ped_north", "ped_south"),
    "YLW-LFT": ("eb1_cruise", "nb1_hold", "sb0_hold", "ped_south", "ped_east"),
    "COV-STR": ("eb1_cruise", "nb1_hold", "sb0_hold", "ped_north", "ped_south"),
    "COV-LFT": ("eb1_cruise", "nb1_hold", "sb0_hold", "ped_south", "ped_east"),
    "COV-RT": ("eb0_cruise", "nb1_hold", "ped_north", "ped_east"),
    "IPC-STR": ("eb1_cruise", "nb1_hold", "sb0_hold", "ped_north", "ped_south"),
    "IPC-LFT": ("eb1_cruise", "nb1_hold", "sb0_hold", "ped_south", "ped_east"),
    "IPC-RT": ("eb0_cruise", "nb1_hold", "ped_north", "ped_east"),
}

_BASE_OF = {
    "STR": "STR", "LFT": "LFT", "RT": "RT", "STP": "STR",
    "UT-N": "UT-N", "UT-AN": "UT-AN",
    "YLW-STR": "STR", "YLW-LFT": "LFT",
    "COV-STR": "STR", "COV-LFT": "LFT", "COV-RT": "RT",
    "IPC-STR": "STR", "IPC-LFT": "LFT", "IPC-RT": "RT",
}


def _path_conflict(ego_poly: Sequence[Vec2], other_poly: Sequence[Vec2],
                   hull: Sequence[Vec2]) -> Tuple[float, float, Vec2]:
    """First crossing of two paths inside the junction polygon.

    Returns arc lengths along each path plus the crossing point.
    """
    from .geometry import point_in_polygon, project_onto_polyline, segment_intersection_point

    s_e = 0.0
    for i in range(len(ego_poly) - 1):
        a, b = ego_poly[i], ego_poly[i + 1]
        for j in range(len(other_poly) - 1):
            p = segment_intersection_point(a, b, other_poly[j], other_poly[j + 1])
            if p is not None and point_in_polygon(hull, p):
                se, _ = project_onto_polyline(ego_poly, p)
                so, _ = project_onto_polyline(other_poly, p)
                return se, so, p
        s_e += math.hypot(b[0] - a[0], b[1] - a[1])
    raise GeneratorError("partner path never crosses the ego path inside the junction")


@dataclass(frozen=True)
class GeneratorSpec:
    """Request for one synthetic scenario; equal specs give equal bytes."""

    behavior: str
    n_background: int = 0
    seed: int = 0
    approach: Optional[int] = None      # quarter-turns of the whole scenario
    cruise: float = 8.0
    light_plan: Optional[Dict[str, List]] = None  # raw schedule override
    scenario_id: Optional[str] = None

    def __post_init__(self) -> None:
        if self.behavior not in _BASE_OF:
            raise GeneratorError(f"unknown behavior sub-label {self.behavior!r}")
        if not (2.0 <= self.cruise <= 12.0):
            raise GeneratorError("cruise speed must be within [2, 12] m/s")


def _background_tracks(sub: str, rng: random.Random, n: int, last_tick: int):
    out = []
    slots = _BG_SLOTS[sub]
    for i in range(n):
        slot = slots[i % len(slots)]
        tid = f"bg-{slot}-{i}"
        if slot.endswith("_cruise"):
            d, lane = slot[:2], int(slot[2])
            path = _lane_path(d, lane)
            start = rng.randrange(0, 31)
            raw = uniform_motion(path, 7.0, 0.0, start, last_tick)
            out.append((tid, AgentCategory.CAR, raw))
        elif slot.endswith("_hold"):
            d, lane = slot[:2], int(slot[2])
            path = _lane_path(d, lane)
            res = drive_along(path, 6.0, stop_at=(_EGO_STOP_S, None), end_tick=last_tick)
            out.append((tid, AgentCategory.CAR, res.samples))
        elif slot.startswith("ped_"):
            arm = slot[4:]
            y = {"north": 10.0, "south": -10.0}.get(arm)
            if y is None:
                path = Path([_Straight((10.0, -8.5), (10.0, 8.5))])
            else:
                path = Path([_Straight((-8.5, y), (8.5, y))])
            start = rng.randrange(0, 41)
            raw = uniform_motion(path, 1.3, 0.0, start, last_tick)
            out.append((tid, AgentCategory.PEDESTRIAN, raw))
    return out


def generate_synthetic(spec: GeneratorSpec) -> Tuple[Scenario, HDMapModel]:
    """Deterministic scenario realizing the requested behavior sub-label."""
    hdmap = make_crossroad_map()
    rng = random.Random(spec.seed)
    sub = spec.behavior
    base = _BASE_OF[sub]
    k = spec.approach if spec.approach is not None else spec.seed % 4

    path, slow_zones = _ego_geometry(base)
    stop_at = None
    wait_ticks = None
    if sub == "STP":
        wait_ticks = 25 + rng.randrange(0, 11)
        stop_at = (_EGO_STOP_S, wait_ticks)
    ego_drive = drive_along(path, spec.cruise, slow_zones=slow_zones, stop_at=stop_at)
    ego_raw = ego_drive.samples
    ego_last = ego_raw[-1][0]
    n_ticks = ego_last + 1

    # signal schedules, canonical direction keys
    plans: Dict[str, List[Tuple[int, str]]] = {
        "eb": [(0, "green")], "wb": [(0, "green")],
        "nb": [(0, "red")], "sb": [(0, "red")],
    }
    if sub == "STP":
        release = ego_drive.release_tick
        plans["eb"] = [(0, "red"), (release, "green")]
        plans["wb"] = [(0, "red"), (release, "green")]
    elif sub.startswith("YLW"):
        t_cross = next(t for t, s in zip((s[0] for s in ego_raw), ego_drive.s_series)
                       if s >= _EGO_STOP_S)
        yellow_from = max(1, t_cross - 8)
        plans["eb"] = [(0, "green"), (yellow_from, "yellow"), (t_cross + 15, "red")]
        plans["wb"] = list(plans["eb"])

    tracks_raw: List[Tuple[str, AgentCategory, list]] = [("ego", AgentCategory.CAR, ego_raw)]

    # conflict partner
    if sub.startswith("IPC"):
        kind = ("pedestrian", "cyclist")[rng.randrange(0, 2)]
        ped_path = _PED_CROSS_WEST if rng.randrange(0, 2) == 0 else _PED_CROSS_WEST_REV
        speed = 1.4 if kind == "pedestrian" else 3.5
        hull = [( -60, -60), (60, -60), (60, 60), (-60, 60)]  # any crossing counts here
        s_e, s_p, _pt = _path_conflict(path.polyline(0.25), ped_path.polyline(0.25), hull)
        t_ego = next(t for t, s in zip((s[0] for s in ego_raw), ego_drive.s_series) if s >= s_e)
        lead = _IPC_LEAD[kind]
        cat = AgentCategory.PEDESTRIAN if kind == "pedestrian" else AgentCategory.CYCLIST
        raw = uniform_motion(ped_path, speed, s_p, t_ego - lead, ego_last)
        tracks_raw.append(("partner", cat, raw))
    elif sub.startswith("COV"):
        from .hdmap import intersection_hull

        partner_path = {
            "COV-STR": _wb_left_path(0),
            "COV-LFT": _lane_path("wb", 0),
            "COV-RT": _wb_left_path(1),
        }[sub]
        hull = intersection_hull(hdmap)
        s_e, s_p, _pt = _path_conflict(path.polyline(0.25), partner_path.polyline(0.25), hull)
        t_ego = next(t for t, s in zip((s[0] for s in ego_raw), ego_drive.s_series) if s >= s_e)
        partner_end = ego_last
        if sub in _COV_PARTNER_END_AFTER:
            partner_end = min(ego_last, t_ego + _COV_PARTNER_END_AFTER[sub])
        raw = uniform_motion(partner_path, _COV_SPEED[sub], s_p, t_ego - _COV_LEAD[sub], partner_end)
        tracks_raw.append(("partner", AgentCategory.CAR, raw))

    tracks_raw += _background_tracks(sub, rng, spec.n_background, ego_last)

    # rotate everything into the requested approach
    tracks = []
    for tid, cat, raw in tracks_raw:
        dims = _AGENT_DIMS[cat]
        tracks.append(_samples_to_track(tid, cat, dims[0], dims[1], _rotate_samples(raw, k)))

    route_pts = []
    n_wp = max(2, int(math.ceil(path.length / 5.0)))
    for i in range(n_wp + 1):
        route_pts.append(_rotate_point(path.at(path.length * i / n_wp)[0], k))
    ego_track = tracks[0]
    ego = EgoAssignment(
        agent_id="ego",
        source=ego_track.samples[0].pose,
        destination=ego_track.samples[-1].pose,
        route_waypoints=tuple(route_pts),
    )

    # schedules attach to the rotated direction's map groups
    schedule_by_group: Dict[str, List[Tuple[int, str]]] = {}
    for d, plan in plans.items():
        schedule_by_group[f"g_{rotated_direction(d, k)}"] = plan
    if spec.light_plan is not None:
        for gid, plan in spec.light_plan.items():
            schedule_by_group[gid] = [(int(t), str(s)) for t, s in plan]
    signals = []
    for sl in hdmap.stop_lines:
        gid = sl.signal_group_id
        plan = schedule_by_group[gid]
        signals.append(
            SignalGroup(
                group_id=gid,
                stop_line=sl.segment,
                controlled_lane_ids=tuple(
                    lane.lane_id for lane in hdmap.lanes if lane.signal_group_id == gid
                ),
                schedule=tuple(ScheduleEntry(t, SignalState(state)) for t, state in plan),
            )
        )

    label = BehaviorLabel.from_sub(sub)
    scenario = Scenario(
        scenario_id=spec.scenario_id or f"{sub.lower()}-s{spec.seed:04d}",
        intersection_id=MAP_ID,
        tick_hz=10,
        n_ticks=n_ticks,
        weather=WEATHER_TAGS[rng.randrange(0, len(WEATHER_TAGS))],
        time_of_day=TIME_OF_DAY_TAGS[rng.randrange(0, len(TIME_OF_DAY_TAGS))],
        behavior=label,
        tracks=tuple(tracks),
        signals=tuple(signals),
        ego=ego,
    )
    return scenario, hdmap


ALL_SUB_LABELS = tuple(_BASE_OF)


def canonical_suite(per_label: int = 3, base_seed: int = 0) -> Tuple[List[Scenario], HDMapModel]:
    """The reference corpus: per_label scenarios for each of the 14 sub-labels."""
    hdmap = make_crossroad_map()
    out = []
    for li, sub in enumerate(sorted(ALL_SUB_LABELS)):
        for i in range(per_label):
            spec = GeneratorSpec(
                behavior=sub,
                n_background=(0, 2, 3)[i % 3],
                seed=base_seed + 100 * li + i,
                approach=i % 4,
                cruise=(8.0, 7.5, 8.5)[i % 3],
                scenario_id=f"{sub.lower()}-{i:02d}",
            )
            scenario, _ = generate_synthetic(spec)
            out.append(scenario)
    return out, hdmap


# ---------------------------------------------------------------------------
# purpose-built fixtures


def make_red_runner_fixture(seed: int = 0) -> Tuple[Scenario, HDMapModel]:
    """Straight crossing whose light stays red: the recording runs the red,
    and so does any route follower."""
    return generate_synthetic(
        GeneratorSpec(
            behavior="STR", seed=seed, approach=0,
            light_plan={"g_eb": [[0, "red"]], "g_wb": [[0, "red"]]},
            scenario_id=f"red-runner-s{seed:04d}",
        )
    )


def make_ped_conflict_fixture(seed: int = 5) -> Tuple[Scenario, HDMapModel]:
    """Straight crossing with a pedestrian timed to meet a default-speed
    route follower on the west crosswalk.

    The recording cruises fast and clears the crosswalk early, so the
    recorded ego stays clear; a policy at the default target speed arrives
    when the pedestrian does.
    """
    from .config import EvalConfig
    from .policies import PidFollowerPolicy
    from .simulation import run_episode

    scenario, hdmap = generate_synthetic(
        GeneratorSpec(behavior="STR", seed=seed, approach=0, cruise=11.0,
                      scenario_id=f"ped-conflict-s{seed:04d}")
    )
    cfg = EvalConfig()
    _res, trace = run_episode(scenario, hdmap, PidFollowerPolicy(), cfg)
    t_follower = next(r.tick for r in trace.records if r.ego.pose.x >= -9.5)
    s_conflict = 9.0 - INNER  # ped arc length where it enters the ego lane
    raw = uniform_motion(_PED_CROSS_WEST, 1.4, s_conflict, t_follower, scenario.n_ticks - 1)
    dims = _AGENT_DIMS[AgentCategory.PEDESTRIAN]
    ped = _samples_to_track("crossing-ped", AgentCategory.PEDESTRIAN, dims[0], dims[1], raw)
    from dataclasses import replace as _replace

    return _replace(scenario, tracks=scenario.tracks + (ped,)), hdmap


OCCLUSION_HIDDEN_CAR = "hidden-car"
OCCLUSION_HIDDEN_PED = "hidden-ped"
OCCLUSION_BUS = "parked-bus"
OCCLUSION_FOLLOWER_SPEED = 2.9


def make_occlusion_fixture() -> Tuple[Scenario, HDMapModel]:
    """Occlusion ablation scene on the crossroad.

    A parked bus east of a side column hides two agents from every recorded
    ego pose: a car that creeps north and ends the clip standing on the ego
    lane, and a stationary pedestrian.  A route follower slow enough to
    arrive after the clip ends collides with the frozen car unless
    vehicle-mode occlusion filtering removes it; the pedestrian must survive
    vehicle-mode filtering and disappear only under mode=all.
    """
    hdmap = make_crossroad_map()
    path, _ = _ego_geometry("STR")
    ego_drive = drive_along(path, 6.0)
    ego_raw = ego_drive.samples
    ego_last = ego_raw[-1][0]

    t_clear = next(t for (t, x, _y, _h, _v) in ego_raw if x >= 12.0)
    t_move = t_clear + 50
    column_x = OUTER  # one lane east of the junction center line
    parked = [(t, column_x, -14.0, 0.5 * math.pi, 0.0) for t in range(t_clear, t_move)]
    creep_path = Path([_Straight((column_x, -14.0), (column_x, -INNER))])
    creep = drive_along(creep_path, 6.0, start_tick=t_move, start_speed=0.0)
    car_raw = parked + creep.samples
    n_ticks = car_raw[-1][0] + 1

    bus_raw = [(t, 8.75, -9.2, 0.5 * math.pi, 0.0) for t in range(0, n_ticks)]
    ped_raw = [(t, column_x, -8.0, 0.0, 0.0) for t in range(t_clear, n_ticks)]

    def track(tid, cat, raw):
        dims = _AGENT_DIMS[cat]
        return _samples_to_track(tid, cat, dims[0], dims[1], raw)

    tracks = (
        track("ego", AgentCategory.CAR, ego_raw),
        track(OCCLUSION_BUS, AgentCategory.BUS, bus_raw),
        track(OCCLUSION_HIDDEN_CAR, AgentCategory.CAR, car_raw),
        track(OCCLUSION_HIDDEN_PED, AgentCategory.PEDESTRIAN, ped_raw),
    )

    n_wp = max(2, int(math.ceil(path.length / 5.0)))
    route = tuple(path.at(path.length * i / n_wp)[0] for i in range(n_wp + 1))
    ego = EgoAssignment(
        agent_id="ego",
        source=tracks[0].samples[0].pose,
        destination=tracks[0].samples[-1].pose,
        route_waypoints=route,
    )
    plans = {"g_eb": "green", "g_wb": "green", "g_nb": "red", "g_sb": "red"}
    signals = tuple(
        SignalGroup(
            group_id=sl.signal_group_id,
            stop_line=sl.segment,
            controlled_lane_ids=tuple(
                lane.lane_id for lane in hdmap.lanes
                if lane.signal_group_id == sl.signal_group_id
            ),
            schedule=(ScheduleEntry(0, SignalState(plans[sl.signal_group_id])),),
        )
        for sl in hdmap.stop_lines
    )
    scenario = Scenario(
        scenario_id="occlusion-flip",
        intersection_id=MAP_ID,
        tick_hz=10,
        n_ticks=n_ticks,
        weather="cloudy",
        time_of_day="noon",
        behavior=BehaviorLabel.from_sub("STR"),
        tracks=tracks,
        signals=signals,
        ego=ego,
    )
    return scenario, hdmap
