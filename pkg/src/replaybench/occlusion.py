"""Occlusion-based agent filtering from the recorded ego's viewpoint.

Emulates vehicle-view data: agents the recorded ego could never (or rarely)
see are removed or trimmed.  A target is visible at a tick when at least one
of its footprint points has an unobstructed ray from the ego center within
sensor range, all other agents acting as occluders.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

from .geometry import OrientedBox, Vec2, ray_first_hit
from .scenario import (
    AgentTrack,
    Scenario,
    VEHICLE_CATEGORIES,
    sample_track_at_tick,
)

MODES = ("none", "vehicles", "all")
REMOVAL_RULES = ("drop-never-visible", "visible-intervals")


@dataclass(frozen=True)
class OcclusionConfig:
    mode: str = "vehicles"
    sensor_range: float = 85.0
    boundary_samples: int = 8
    removal_rule: str = "drop-never-visible"
    visibility_fraction_min: float = 0.10

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.removal_rule not in REMOVAL_RULES:
            raise ValueError(f"removal_rule must be one of {REMOVAL_RULES}")
        if self.boundary_samples < 4:
            raise ValueError("boundary_samples must be at least 4")


def footprint_points(box: OrientedBox, n: int) -> List[Vec2]:
    """Center plus n points spread evenly along the box perimeter."""
    corners = list(box.corners())
    edges = []
    per = 0.0
    for i in range(4):
        a, b = corners[i], corners[(i + 1) % 4]
        length = math.hypot(b[0] - a[0], b[1] - a[1])
        edges.append((a, b, length))
        per += length
    pts = [(box.cx, box.cy)]
    for k in range(n):
        target = per * k / n
        acc = 0.0
        for a, b, length in edges:
            if acc + length >= target or (a, b, length) == edges[-1]:
                u = min(1.0, (target - acc) / length)
                pts.append((a[0] + u * (b[0] - a[0]), a[1] + u * (b[1] - a[1])))
                break
            acc += length
    return pts


def _pose_clamped(track: AgentTrack, tick: int):
    if tick <= track.first_tick:
        return track.samples[0].pose
    if tick >= track.last_tick:
        return track.samples[-1].pose
    pose, _ = sample_track_at_tick(track, tick)
    return pose


def _visible_ticks(
    s: Scenario, target: AgentTrack, ego: AgentTrack, cfg: OcclusionConfig
) -> List[bool]:
    """Visibility at each of the target's sample ticks."""
    others = [
        t for t in s.tracks
        if t.track_id not in (target.track_id, ego.track_id)
    ]
    out = []
    for smp in target.samples:
        tick = smp.tick
        eye = _pose_clamped(ego, tick).position
        box = OrientedBox(smp.pose.x, smp.pose.y, smp.pose.heading,
                          target.length, target.width)
        occluders = []
        for other in others:
            if not other.alive_at(tick):
                continue
            pose, _ = sample_track_at_tick(other, tick)
            occluders.append(
                OrientedBox(pose.x, pose.y, pose.heading, other.length, other.width)
            )
        visible = False
        for p in footprint_points(box, cfg.boundary_samples):
            if math.hypot(p[0] - eye[0], p[1] - eye[1]) > cfg.sensor_range:
                continue
            if p == eye:
                visible = True
                break
            if ray_first_hit(eye, p, occluders) is None:
                visible = True
                break
        out.append(visible)
    return out


def _visible_runs(flags: Sequence[bool]) -> List[Tuple[int, int]]:
    runs = []
    start: Optional[int] = None
    for i, v in enumerate(flags):
        if v and start is None:
            start = i
        elif not v and start is not None:
            runs.append((start, i - 1))
            start = None
    if start is not None:
        runs.append((start, len(flags) - 1))
    return runs


def occlusion_filter(s: Scenario, cfg: OcclusionConfig) -> Scenario:
    """Remove or trim agents invisible from the recorded ego's viewpoint.

    mode=vehicles restricts removal to {car, truck, bus, van}; pedestrians,
    cyclists, motorcycles and tricycles are always retained.  The ego is
    never touched.  Filtering is idempotent: removing occluders only makes
    the survivors more visible.
    """
    if cfg.mode == "none":
        return s
    ego = s.ego_track()
    kept: List[AgentTrack] = []
    for track in s.tracks:
        if track.track_id == ego.track_id:
            kept.append(track)
            continue
        if cfg.mode == "vehicles" and track.category not in VEHICLE_CATEGORIES:
            kept.append(track)
            continue
        flags = _visible_ticks(s, track, ego, cfg)
        if cfg.removal_rule == "drop-never-visible":
            fraction = sum(flags) / len(flags)
            if fraction >= cfg.visibility_fraction_min:
                kept.append(track)
            continue
        runs = _visible_runs(flags)
        if len(runs) == 1 and runs[0] == (0, len(flags) - 1):
            kept.append(track)
            continue
        for k, (lo, hi) in enumerate(runs):
            kept.append(
                replace(
                    track,
                    track_id=f"{track.track_id}#{k}",
                    samples=track.samples[lo:hi + 1],
                )
            )
    return replace(s, tracks=tuple(kept))


def removal_report(before: Scenario, after: Scenario) -> Dict[str, int]:
    """Removed-agent counts per category (split tracks count as kept)."""
    def roots(sc: Scenario):
        return {t.track_id.split("#")[0] for t in sc.tracks}

    gone = roots(before) - roots(after)
    out: Dict[str, int] = {}
    for track in before.tracks:
        if track.track_id in gone:
            key = track.category.value
            out[key] = out.get(key, 0) + 1
    return out
