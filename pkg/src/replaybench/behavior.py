"""Rule-based behavior classification: 8 main labels, 14 sub-labels.

The base maneuver comes from the net (unwrapped) heading change of the ego
recording; interaction/anomaly predicates upgrade it.  Precedence, most
specific first: IPC > COV > YLW > UT > STP > LFT/RT/STR.  All thresholds
are configurable; every feature is invariant under rigid transforms of the
scenario and map together.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from .geometry import (
    OrientedBox,
    Vec2,
    normalize_angle,
    obb_distance,
    point_in_polygon,
    project_onto_polyline,
    segment_intersection_point,
    segments_intersect,
)
from .hdmap import HDMapModel, intersection_hull
from .scenario import (
    AgentTrack,
    BehaviorLabel,
    Scenario,
    SignalState,
    VEHICLE_CATEGORIES,
    VULNERABLE_CATEGORIES,
    sample_track_at_tick,
    signal_state_at,
)


@dataclass(frozen=True)
class ClassifierThresholds:
    straight_max_deg: float = 30.0     # |net turn| below this is straight
    uturn_min_deg: float = 150.0
    stop_speed: float = 0.5            # m/s
    stop_dwell_s: float = 2.0
    stop_line_dist: float = 10.0       # m upstream of a red line
    ipc_distance: float = 3.0          # m box-to-box
    ipc_min_speed: float = 1.0         # m/s, ego must be moving
    cov_distance: float = 4.0          # m box-to-box
    ut_crossing_min_deg: float = 15.0  # "mid-maneuver" window for abnormal
    ut_crossing_max_deg: float = 165.0


DEFAULT_THRESHOLDS = ClassifierThresholds()


def _unwrapped_headings(track: AgentTrack) -> List[float]:
    out = [track.samples[0].pose.heading]
    for a, b in zip(track.samples, track.samples[1:]):
        out.append(out[-1] + normalize_angle(b.pose.heading - a.pose.heading))
    return out


def _base_maneuver(net_rad: float, th: ClassifierThresholds) -> str:
    deg = math.degrees(net_rad)
    if abs(deg) >= th.uturn_min_deg:
        return "UT"
    if deg >= th.straight_max_deg:
        return "LFT"
    if deg <= -th.straight_max_deg:
        return "RT"
    return "STR"


def _ego_box_at(track: AgentTrack, tick: int) -> OrientedBox:
    pose, _ = sample_track_at_tick(track, tick)
    return OrientedBox(pose.x, pose.y, pose.heading, track.length, track.width)


def _crossing_states(
    s: Scenario, ego: AgentTrack
) -> List[Tuple[int, SignalState, str]]:
    """(tick, state, group) for every stop-line crossing of the recording."""
    out = []
    for a, b in zip(ego.samples, ego.samples[1:]):
        for group in s.signals:
            if segments_intersect(
                a.pose.position, b.pose.position, group.stop_line[0], group.stop_line[1]
            ):
                out.append((b.tick, signal_state_at(group, b.tick), group.group_id))
    return out


def _has_red_stop_dwell(s: Scenario, ego: AgentTrack, th: ClassifierThresholds) -> bool:
    run_start: Optional[int] = None
    prev_tick: Optional[int] = None
    for smp in ego.samples:
        slow = smp.speed < th.stop_speed
        if slow and run_start is None:
            run_start = smp.tick
        if slow and run_start is not None and (smp.tick - run_start) * 0.1 >= th.stop_dwell_s:
            if _near_red_line(s, smp.pose.position, smp.tick, th):
                return True
        if not slow:
            run_start = None
        prev_tick = smp.tick
    return False


def _near_red_line(s: Scenario, pos: Vec2, tick: int, th: ClassifierThresholds) -> bool:
    from .geometry import point_segment_distance

    for group in s.signals:
        if signal_state_at(group, tick) is not SignalState.RED:
            continue
        if point_segment_distance(pos, group.stop_line[0], group.stop_line[1]) <= th.stop_line_dist:
            return True
    return False


def _ipc_fires(s: Scenario, ego: AgentTrack, th: ClassifierThresholds) -> bool:
    for track in s.tracks:
        if track.track_id == ego.track_id or track.category not in VULNERABLE_CATEGORIES:
            continue
        lo = max(ego.first_tick, track.first_tick)
        hi = min(ego.last_tick, track.last_tick)
        for tick in range(lo, hi + 1):
            pose, speed = sample_track_at_tick(ego, tick)
            if speed <= th.ipc_min_speed:
                continue
            other_pose, _ = sample_track_at_tick(track, tick)
            other_box = OrientedBox(
                other_pose.x, other_pose.y, other_pose.heading, track.length, track.width
            )
            ego_box = OrientedBox(pose.x, pose.y, pose.heading, ego.length, ego.width)
            if obb_distance(ego_box, other_box) < th.ipc_distance:
                return True
    return False


def _paths_cross_in_hull(
    ego_path: Sequence[Vec2], other_path: Sequence[Vec2], hull: Sequence[Vec2]
) -> bool:
    for i in range(len(ego_path) - 1):
        a, b = ego_path[i], ego_path[i + 1]
        for j in range(len(other_path) - 1):
            p = segment_intersection_point(a, b, other_path[j], other_path[j + 1])
            if p is not None and point_in_polygon(hull, p):
                return True
    return False


def _cov_fires(
    s: Scenario, ego: AgentTrack, hull: Sequence[Vec2], th: ClassifierThresholds
) -> bool:
    ego_path = ego.positions()
    for track in s.tracks:
        if track.track_id == ego.track_id or track.category not in VEHICLE_CATEGORIES:
            continue
        lo = max(ego.first_tick, track.first_tick)
        hi = min(ego.last_tick, track.last_tick)
        if lo > hi:
            continue
        close = False
        for tick in range(lo, hi + 1):
            pose, _ = sample_track_at_tick(ego, tick)
            other_pose, _ = sample_track_at_tick(track, tick)
            ego_box = OrientedBox(pose.x, pose.y, pose.heading, ego.length, ego.width)
            other_box = OrientedBox(
                other_pose.x, other_pose.y, other_pose.heading, track.length, track.width
            )
            if obb_distance(ego_box, other_box) < th.cov_distance:
                close = True
                break
        if close and _paths_cross_in_hull(ego_path, track.positions(), hull):
            return True
    return False


def _uturn_is_abnormal(
    s: Scenario, m: HDMapModel, ego: AgentTrack, cum: List[float],
    th: ClassifierThresholds,
) -> bool:
    onset = math.radians(th.straight_max_deg)
    start = cum[0]
    init_idx = next(
        (i for i, c in enumerate(cum) if abs(c - start) >= onset), len(cum) - 1
    )
    init_pos = ego.samples[init_idx].pose.position
    best: Optional[Tuple[float, float]] = None  # (|offset|, half width)
    for lane in m.lanes:
        _, d = project_onto_polyline(lane.centerline, init_pos)
        if best is None or abs(d) < best[0]:
            best = (abs(d), 0.5 * lane.width)
    if best is not None and best[0] > best[1]:
        return True
    lo = math.radians(th.ut_crossing_min_deg)
    hi = math.radians(th.ut_crossing_max_deg)
    for i in range(len(ego.samples) - 1):
        progress = abs(cum[i + 1] - start)
        if not (lo < progress < hi):
            continue
        a = ego.samples[i].pose.position
        b = ego.samples[i + 1].pose.position
        for group in s.signals:
            if segments_intersect(a, b, group.stop_line[0], group.stop_line[1]):
                return True
    return False


def classify_behavior(
    s: Scenario, m: HDMapModel, th: ClassifierThresholds = DEFAULT_THRESHOLDS
) -> BehaviorLabel:
    """Label one scenario from its ego recording, map and signal schedules."""
    ego = s.ego_track()
    cum = _unwrapped_headings(ego)
    base = _base_maneuver(cum[-1] - cum[0], th)

    if base in ("LFT", "RT", "STR") and _ipc_fires(s, ego, th):
        return BehaviorLabel.from_sub(f"IPC-{base}")
    if base in ("LFT", "RT", "STR"):
        hull = intersection_hull(m)
        if _cov_fires(s, ego, hull, th):
            return BehaviorLabel.from_sub(f"COV-{base}")
    if base in ("STR", "LFT"):
        if any(state is SignalState.YELLOW for _, state, _ in _crossing_states(s, ego)):
            return BehaviorLabel.from_sub(f"YLW-{base}")
    if base == "UT":
        return BehaviorLabel.from_sub(
            "UT-AN" if _uturn_is_abnormal(s, m, ego, cum, th) else "UT-N"
        )
    if _has_red_stop_dwell(s, ego, th):
        return BehaviorLabel.from_sub("STP")
    return BehaviorLabel.from_sub(base)
