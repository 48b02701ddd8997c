"""Track quality scoring and ego-candidate selection."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Dict, Optional, Sequence

from .config import VehicleParams
from .geometry import polyline_length, segments_intersect
from .hdmap import HDMapModel, point_in_drivable
from .scenario import (
    AgentCategory,
    AgentTrack,
    Scenario,
    SignalGroup,
    SignalState,
    signal_state_at,
)

MAX_GAP_TICKS = 10          # completeness collapses to 0 beyond a 1 s hole
SPEED_TOLERANCE = 1.5       # x max_speed
ACCEL_TOLERANCE = 1.5       # x max_brake


@dataclass(frozen=True)
class QualityScore:
    completeness: float
    compliance: float
    completeness_weight: float = 0.5

    @property
    def total(self) -> float:
        w = self.completeness_weight
        return w * self.completeness + (1.0 - w) * self.compliance


def quality_score(
    track: AgentTrack,
    hdmap: HDMapModel,
    signals: Sequence[SignalGroup] = (),
    params: Optional[VehicleParams] = None,
    completeness_weight: float = 0.5,
) -> QualityScore:
    """Completeness of the sampling plus per-tick rule compliance.

    Completeness is observed/spanned ticks, zeroed by any gap over 1 s.
    Compliance is the fraction of samples that stay on the drivable area,
    below the speed and acceleration tolerances, and never cross a stop
    line while its group shows red.
    """
    vp = params or VehicleParams()
    span = track.last_tick - track.first_tick + 1
    completeness = len(track.samples) / span
    for a, b in zip(track.samples, track.samples[1:]):
        if b.tick - a.tick > MAX_GAP_TICKS:
            completeness = 0.0
            break

    bad = 0
    prev = None
    for smp in track.samples:
        ok = point_in_drivable(hdmap, smp.pose.position)
        if smp.speed > SPEED_TOLERANCE * vp.max_speed:
            ok = False
        if prev is not None:
            dt = (smp.tick - prev.tick) * 0.1
            if abs(smp.speed - prev.speed) / dt > ACCEL_TOLERANCE * vp.max_brake:
                ok = False
            if ok:
                for group in signals:
                    if signal_state_at(group, smp.tick) is not SignalState.RED:
                        continue
                    if segments_intersect(
                        prev.pose.position, smp.pose.position,
                        group.stop_line[0], group.stop_line[1],
                    ):
                        ok = False
                        break
        if not ok:
            bad += 1
        prev = smp
    compliance = 1.0 - bad / len(track.samples)
    return QualityScore(
        completeness=completeness, compliance=compliance,
        completeness_weight=completeness_weight,
    )


QUALITY_ELIGIBILITY = 0.8
MIN_ROUTE_LENGTH_M = 20.0


def eligible_ego_candidates(s: Scenario, hdmap: HDMapModel) -> Dict[str, QualityScore]:
    """Car tracks present for the whole clip with a long, clean recording."""
    out: Dict[str, QualityScore] = {}
    for track in s.tracks:
        if track.category is not AgentCategory.CAR:
            continue
        if track.first_tick != 0 or track.last_tick != s.n_ticks - 1:
            continue
        if polyline_length(track.positions()) < MIN_ROUTE_LENGTH_M:
            continue
        score = quality_score(track, hdmap, s.signals)
        if score.total >= QUALITY_ELIGIBILITY:
            out[track.track_id] = score
    return out


def select_ego(
    s: Scenario,
    hdmap: HDMapModel,
    current_distribution: Dict[str, int],
) -> str:
    """Pick the eligible candidate whose behavior is rarest so far.

    Candidates are classified as if they were the ego; ties break toward the
    lexicographically smallest track id.
    """
    from .behavior import classify_behavior

    candidates = eligible_ego_candidates(s, hdmap)
    if not candidates:
        raise ValueError(f"scenario {s.scenario_id} has no eligible ego candidate")
    best: Optional[str] = None
    best_count = math.inf
    for track_id in sorted(candidates):
        candidate_view = _with_ego(s, track_id)
        label = classify_behavior(candidate_view, hdmap)
        count = current_distribution.get(label.main, 0)
        if count < best_count:
            best, best_count = track_id, count
    return best


def _with_ego(s: Scenario, track_id: str) -> Scenario:
    track = s.track_by_id(track_id)
    positions = track.positions()
    total = polyline_length(positions)
    n = max(2, int(math.ceil(total / 5.0)))
    acc = [0.0]
    for a, b in zip(positions, positions[1:]):
        acc.append(acc[-1] + math.hypot(b[0] - a[0], b[1] - a[1]))
    waypoints = []
    target = 0.0
    step = total / n
    idx = 0
    for k in range(n + 1):
        target = min(total, k * step)
        while idx < len(acc) - 1 and acc[idx + 1] < target:
            idx += 1
        if idx >= len(acc) - 1:
            waypoints.append(positions[-1])
            continue
        seg = acc[idx + 1] - acc[idx]
        u = 0.0 if seg == 0 else (target - acc[idx]) / seg
        waypoints.append(
            (
                positions[idx][0] + u * (positions[idx + 1][0] - positions[idx][0]),
                positions[idx][1] + u * (positions[idx + 1][1] - positions[idx][1]),
            )
        )
    from .scenario import EgoAssignment

    return replace(
        s,
        ego=EgoAssignment(
            agent_id=track_id,
            source=track.samples[0].pose,
            destination=track.samples[-1].pose,
            route_waypoints=tuple(waypoints),
        ),
    )
