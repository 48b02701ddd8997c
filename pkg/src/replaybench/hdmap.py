"""Vectorized intersection map: lanes, crosswalks, stop lines, drivable area.

Coordinates live in a local planar frame per intersection, meters.  The
drivable area is a union of simple polygons and is the authority for
off-road checks; lanes only carry signal association and route semantics.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

from .errors import InvariantError, ParseError
from .geometry import (
    Segment,
    Vec2,
    convex_hull,
    point_in_polygon,
    polygon_is_simple,
    transform_point,
)


def _check_polyline(name: str, pts: Sequence[Vec2]) -> Tuple[Vec2, ...]:
    if len(pts) < 2:
        raise InvariantError(name, "polyline needs at least 2 points")
    out = tuple((float(x), float(y)) for x, y in pts)
    for i in range(len(out) - 1):
        if out[i] == out[i + 1]:
            raise InvariantError(name, f"zero-length segment at index {i}")
        for v in out[i]:
            if not math.isfinite(v):
                raise InvariantError(name, "non-finite coordinate")
    return out


def _check_polygon(name: str, pts: Sequence[Vec2]) -> Tuple[Vec2, ...]:
    out = tuple((float(x), float(y)) for x, y in pts)
    if len(out) < 3:
        raise InvariantError(name, "polygon needs at least 3 vertices")
    if not polygon_is_simple(out):
        raise InvariantError(name, "polygon is self-intersecting or degenerate")
    return out


@dataclass(frozen=True)
class Lane:
    lane_id: str
    centerline: Tuple[Vec2, ...]
    width: float
    successor_ids: Tuple[str, ...] = ()
    signal_group_id: Optional[str] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "centerline", _check_polyline(f"lane {self.lane_id}", self.centerline))
        if not self.width > 0:
            raise InvariantError(f"lane {self.lane_id}", "width must be positive")


@dataclass(frozen=True)
class StopLine:
    segment: Segment
    signal_group_id: str

    def __post_init__(self) -> None:
        (a, b) = self.segment
        seg = ((float(a[0]), float(a[1])), (float(b[0]), float(b[1])))
        if seg[0] == seg[1]:
            raise InvariantError("stop_line", "degenerate segment")
        object.__setattr__(self, "segment", seg)


@dataclass(frozen=True)
class HDMapModel:
    map_id: str
    lanes: Tuple[Lane, ...]
    crosswalks: Tuple[Tuple[Vec2, ...], ...]
    stop_lines: Tuple[StopLine, ...]
    drivable_area: Tuple[Tuple[Vec2, ...], ...]

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "crosswalks",
            tuple(_check_polygon(f"crosswalk {i}", p) for i, p in enumerate(self.crosswalks)),
        )
        object.__setattr__(
            self, "drivable_area",
            tuple(_check_polygon(f"drivable_area {i}", p) for i, p in enumerate(self.drivable_area)),
        )
        seen = set()
        for lane in self.lanes:
            if lane.lane_id in seen:
                raise InvariantError("lanes", f"duplicate lane_id {lane.lane_id!r}")
            seen.add(lane.lane_id)

    def lane_ids(self) -> frozenset:
        return frozenset(lane.lane_id for lane in self.lanes)

    def bounds(self, margin: float = 0.0) -> Tuple[float, float, float, float]:
        xs, ys = [], []
        for lane in self.lanes:
            for x, y in lane.centerline:
                xs.append(x)
                ys.append(y)
        for poly in self.crosswalks + self.drivable_area:
            for x, y in poly:
                xs.append(x)
                ys.append(y)
        for sl in self.stop_lines:
            for x, y in sl.segment:
                xs.append(x)
                ys.append(y)
        if not xs:
            raise InvariantError("map", "no geometry")
        return (min(xs) - margin, min(ys) - margin, max(xs) + margin, max(ys) + margin)


def point_in_drivable(m: HDMapModel, p: Vec2) -> bool:
    """True iff p lies in the union of drivable polygons (boundary inclusive)."""
    return any(point_in_polygon(poly, p) for poly in m.drivable_area)


def intersection_hull(m: HDMapModel) -> Tuple[Vec2, ...]:
    """Conflict-zone polygon: convex hull of stop-line endpoints and
    crosswalk vertices (the region the junction box occupies).

    Falls back to the map bounding box when fewer than 3 points exist.
    """
    pts = [pt for sl in m.stop_lines for pt in sl.segment]
    pts += [pt for poly in m.crosswalks for pt in poly]
    hull = convex_hull(pts) if len(pts) >= 3 else ()
    if len(hull) >= 3:
        return hull
    x0, y0, x1, y1 = m.bounds()
    return ((x0, y0), (x1, y0), (x1, y1), (x0, y1))


_MAP_KEYS = {"map_id", "lanes", "crosswalks", "stop_lines", "drivable_area"}
_LANE_KEYS = {"lane_id", "centerline", "width", "successor_ids", "signal_group_id"}
_STOP_KEYS = {"segment", "signal_group_id"}


def _reject_unknown(obj: dict, allowed: set, where: str) -> None:
    extra = set(obj) - allowed
    if extra:
        raise ParseError(f"{where}: unknown keys {sorted(extra)}")


def load_map(data) -> HDMapModel:
    """Parse a map document (bytes or str of UTF-8 JSON)."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ParseError(f"map document: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError("map document: top level must be an object")
    missing = _MAP_KEYS - set(doc)
    if missing:
        raise ParseError(f"map document: missing keys {sorted(missing)}")
    _reject_unknown(doc, _MAP_KEYS, "map document")
    lanes = []
    for i, raw in enumerate(doc["lanes"]):
        _reject_unknown(raw, _LANE_KEYS, f"lanes[{i}]")
        lanes.append(
            Lane(
                lane_id=str(raw["lane_id"]),
                centerline=tuple((p[0], p[1]) for p in raw["centerline"]),
                width=float(raw["width"]),
                successor_ids=tuple(str(x) for x in raw.get("successor_ids", ())),
                signal_group_id=(
                    None if raw.get("signal_group_id") is None else str(raw["signal_group_id"])
                ),
            )
        )
    stop_lines = []
    for i, raw in enumerate(doc["stop_lines"]):
        _reject_unknown(raw, _STOP_KEYS, f"stop_lines[{i}]")
        seg = raw["segment"]
        stop_lines.append(
            StopLine(segment=((seg[0][0], seg[0][1]), (seg[1][0], seg[1][1])),
                     signal_group_id=str(raw["signal_group_id"]))
        )
    return HDMapModel(
        map_id=str(doc["map_id"]),
        lanes=tuple(lanes),
        crosswalks=tuple(tuple((p[0], p[1]) for p in poly) for poly in doc["crosswalks"]),
        stop_lines=tuple(stop_lines),
        drivable_area=tuple(tuple((p[0], p[1]) for p in poly) for poly in doc["drivable_area"]),
    )


def map_to_dict(m: HDMapModel) -> dict:
    return {
        "map_id": m.map_id,
        "lanes": [
            {
                "lane_id": lane.lane_id,
                "centerline": [[x, y] for x, y in lane.centerline],
                "width": lane.width,
                "successor_ids": list(lane.successor_ids),
                "signal_group_id": lane.signal_group_id,
            }
            for lane in m.lanes
        ],
        "crosswalks": [[[x, y] for x, y in poly] for poly in m.crosswalks],
        "stop_lines": [
            {"segment": [[sl.segment[0][0], sl.segment[0][1]], [sl.segment[1][0], sl.segment[1][1]]],
             "signal_group_id": sl.signal_group_id}
            for sl in m.stop_lines
        ],
        "drivable_area": [[[x, y] for x, y in poly] for poly in m.drivable_area],
    }


def serialize_map(m: HDMapModel) -> str:
    return json.dumps(map_to_dict(m), sort_keys=True, separators=(",", ":"))


def transform_map(m: HDMapModel, angle: float, tx: float, ty: float) -> HDMapModel:
    """Rigidly transform every map element (rotate about origin, translate)."""

    def tp(p: Vec2) -> Vec2:
        return transform_point(p, angle, tx, ty)

    return HDMapModel(
        map_id=m.map_id,
        lanes=tuple(
            Lane(
                lane_id=lane.lane_id,
                centerline=tuple(tp(p) for p in lane.centerline),
                width=lane.width,
                successor_ids=lane.successor_ids,
                signal_group_id=lane.signal_group_id,
            )
            for lane in m.lanes
        ),
        crosswalks=tuple(tuple(tp(p) for p in poly) for poly in m.crosswalks),
        stop_lines=tuple(
            StopLine(segment=(tp(sl.segment[0]), tp(sl.segment[1])),
                     signal_group_id=sl.signal_group_id)
            for sl in m.stop_lines
        ),
        drivable_area=tuple(tuple(tp(p) for p in poly) for poly in m.drivable_area),
    )
