"""Benchmark metrics: route completion, driving score, success rate, L2.

The driving score over a result set is

    DS = 100/n * sum_i( RC_i * prod_j p_ij )

with RC_i the route-completion fraction of episode i and p_ij the penalty
coefficients of its infractions.  Success is stricter than completion: the
destination must be reached in time with no collision or traffic violation.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .config import EvalConfig
from .geometry import Vec2, polyline_length, project_onto_polyline
from .infractions import Infraction, VIOLATION_KINDS
from .scenario import Scenario


@dataclass(frozen=True)
class EpisodeResult:
    scenario_id: str
    rc: float
    infractions: Tuple[Infraction, ...]
    success: bool
    termination: str
    duration_ticks: int

    def ds_single(self, penalties: Optional[Mapping[str, float]] = None) -> float:
        """This episode's RC times its penalty product, in [0, 1]."""
        ds = self.rc
        for inf in self.infractions:
            coeff = inf.penalty if penalties is None else penalties.get(inf.kind.value, 1.0)
            ds *= coeff
        return ds

    def has_violation(self) -> bool:
        return any(inf.kind in VIOLATION_KINDS for inf in self.infractions)

    def to_dict(self) -> dict:
        return {
            "scenario_id": self.scenario_id,
            "rc": self.rc,
            "infractions": [inf.to_dict() for inf in self.infractions],
            "success": self.success,
            "termination": self.termination,
            "duration_ticks": self.duration_ticks,
        }

    @staticmethod
    def from_dict(doc: dict) -> "EpisodeResult":
        return EpisodeResult(
            scenario_id=str(doc["scenario_id"]),
            rc=float(doc["rc"]),
            infractions=tuple(Infraction.from_dict(d) for d in doc["infractions"]),
            success=bool(doc["success"]),
            termination=str(doc["termination"]),
            duration_ticks=int(doc["duration_ticks"]),
        )


def result_to_jsonl_line(result: EpisodeResult) -> str:
    return json.dumps(result.to_dict(), sort_keys=True, separators=(",", ":"))


def load_results_jsonl(text: str) -> List[EpisodeResult]:
    return [EpisodeResult.from_dict(json.loads(line)) for line in text.splitlines() if line.strip()]


def route_completion(
    positions: Sequence[Vec2], route: Sequence[Vec2], deviation_limit: float = 8.0
) -> float:
    """Fraction of the route's arc length covered by a position trace.

    The projected arc length is monotone-filtered and only advances while the
    trace stays within the lateral deviation limit of the route.
    """
    if not positions:
        raise ValueError("empty trace")
    total = polyline_length(route)
    if total <= 0.0:
        raise ValueError("route has zero length")
    s_mono = 0.0
    for pos in positions:
        s, d = project_onto_polyline(route, pos)
        if abs(d) <= deviation_limit and s > s_mono:
            s_mono = s
    return min(1.0, max(0.0, s_mono / total))


def driving_score(
    results: Sequence[EpisodeResult], penalties: Optional[Mapping[str, float]] = None
) -> float:
    """Mean of per-episode RC x penalty products, as a percentage."""
    if not results:
        raise ValueError("no results")
    return 100.0 * sum(r.ds_single(penalties) for r in results) / len(results)


def success_rate(results: Sequence[EpisodeResult]) -> float:
    """Percentage of successful episodes."""
    if not results:
        raise ValueError("no results")
    return 100.0 * sum(1 for r in results if r.success) / len(results)


# ---------------------------------------------------------------------------
# open-loop L2

DEFAULT_HORIZONS_S = (1.0, 2.0)


@dataclass(frozen=True)
class L2Report:
    horizons_s: Tuple[float, ...]
    per_horizon: Tuple[float, ...]
    n_anchors: int

    @property
    def avg(self) -> float:
        return sum(self.per_horizon) / len(self.per_horizon)

    def to_dict(self) -> dict:
        out = {f"l2_{h:g}s": v for h, v in zip(self.horizons_s, self.per_horizon)}
        out["avg"] = self.avg
        out["n_anchors"] = self.n_anchors
        return out


def open_loop_l2(
    predictor,
    scenario: Scenario,
    horizons_s: Sequence[float] = DEFAULT_HORIZONS_S,
    anchor_stride: int = 1,
) -> L2Report:
    """Mean Euclidean error of predicted ego positions against the recording.

    For every anchor tick the predictor sees the expert history up to that
    tick and emits positions at the requested horizons; errors are averaged
    per horizon over all anchors.
    """
    track = scenario.ego_track()
    horizon_ticks = [int(round(h * 10)) for h in horizons_s]
    max_h = max(horizon_ticks)
    ticks = [smp.tick for smp in track.samples]
    tick_set = set(ticks)
    anchors = [t for t in ticks[:: max(1, anchor_stride)] if t + max_h <= track.last_tick]
    anchors = [t for t in anchors if all(t + h in tick_set for h in horizon_ticks)]
    if not anchors:
        raise ValueError(
            f"ego track of {scenario.scenario_id} too short for a {max(horizons_s):g} s horizon"
        )
    sums = [0.0] * len(horizon_ticks)
    by_tick = {smp.tick: smp for smp in track.samples}
    for anchor in anchors:
        preds = predictor.predict_positions(scenario, anchor, tuple(horizons_s))
        for i, h in enumerate(horizon_ticks):
            truth = by_tick[anchor + h].pose
            px, py = preds[i]
            sums[i] += math.hypot(px - truth.x, py - truth.y)
    per_h = tuple(s / len(anchors) for s in sums)
    return L2Report(horizons_s=tuple(horizons_s), per_horizon=per_h, n_anchors=len(anchors))


# ---------------------------------------------------------------------------
# aggregation

@dataclass(frozen=True)
class GroupStats:
    n: int
    sr: float
    ds: float

    def to_dict(self) -> dict:
        return {"n": self.n, "sr": self.sr, "ds": self.ds}


@dataclass(frozen=True)
class BenchmarkSummary:
    n_total: int
    ds: float
    sr: float
    per_behavior: Dict[str, GroupStats]
    per_weather: Dict[str, GroupStats]
    per_time: Dict[str, GroupStats]
    l2: Optional[dict] = None

    def to_dict(self) -> dict:
        return {
            "n_total": self.n_total,
            "ds": self.ds,
            "sr": self.sr,
            "per_behavior": {k: v.to_dict() for k, v in sorted(self.per_behavior.items())},
            "per_weather": {k: v.to_dict() for k, v in sorted(self.per_weather.items())},
            "per_time": {k: v.to_dict() for k, v in sorted(self.per_time.items())},
            "l2": self.l2,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))


def _group(
    pairs: List[Tuple[str, EpisodeResult]], penalties: Optional[Mapping[str, float]]
) -> Dict[str, GroupStats]:
    buckets: Dict[str, List[EpisodeResult]] = {}
    for key, result in pairs:
        buckets.setdefault(key, []).append(result)
    return {
        key: GroupStats(n=len(rs), sr=success_rate(rs), ds=driving_score(rs, penalties))
        for key, rs in sorted(buckets.items())
    }


def summarize(
    results: Sequence[EpisodeResult],
    scenarios: Iterable[Scenario],
    penalties: Optional[Mapping[str, float]] = None,
    l2: Optional[dict] = None,
) -> BenchmarkSummary:
    """Overall DS/SR plus per-behavior, per-weather and per-time groupings."""
    if not results:
        raise ValueError("no results")
    by_id = {s.scenario_id: s for s in scenarios}
    ordered = sorted(results, key=lambda r: r.scenario_id)
    for r in ordered:
        if r.scenario_id not in by_id:
            raise KeyError(f"result references unknown scenario {r.scenario_id!r}")
    behavior_pairs = []
    weather_pairs = []
    time_pairs = []
    for r in ordered:
        s = by_id[r.scenario_id]
        behavior_pairs.append((s.behavior.main if s.behavior else "unlabeled", r))
        weather_pairs.append((s.weather, r))
        time_pairs.append((s.time_of_day, r))
    return BenchmarkSummary(
        n_total=len(ordered),
        ds=driving_score(ordered, penalties),
        sr=success_rate(ordered),
        per_behavior=_group(behavior_pairs, penalties),
        per_weather=_group(weather_pairs, penalties),
        per_time=_group(time_pairs, penalties),
        l2=l2,
    )


def compute_success(
    rc: float, termination: str, infractions: Sequence[Infraction], cfg: EvalConfig
) -> bool:
    """Success requires arrival in time, enough completion and a clean record."""
    if termination != "destination_reached":
        return False
    if rc < cfg.rc_success_threshold:
        return False
    return not any(inf.kind in VIOLATION_KINDS for inf in infractions)
