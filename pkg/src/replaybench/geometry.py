"""Planar geometry primitives: oriented boxes, polylines, polygons, rays.

Everything works on plain ``(x, y)`` tuples in meters, double precision.
Boundaries are closed throughout: touching boxes intersect, points on a
polygon edge are inside.  Degeneracy tests use a global 1e-9 epsilon.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

Vec2 = Tuple[float, float]
Segment = Tuple[Vec2, Vec2]

EPS = 1e-9


def normalize_angle(a: float) -> float:
    """Map an angle to (-pi, pi]."""
    a = math.remainder(a, math.tau)
    if a <= -math.pi:
        a += math.tau
    return a


def interp_angle(a: float, b: float, u: float) -> float:
    """Shortest-arc interpolation between two angles, u in [0, 1]."""
    return normalize_angle(a + u * normalize_angle(b - a))


def clamp(x: float, lo: float, hi: float) -> float:
    return lo if x < lo else hi if x > hi else x


def _cross(ax: float, ay: float, bx: float, by: float) -> float:
    return ax * by - ay * bx


@dataclass(frozen=True)
class OrientedBox:
    """Axis-free rectangle: center, heading, length along heading, width."""

    cx: float
    cy: float
    heading: float
    length: float
    width: float

    def __post_init__(self) -> None:
        if not (self.length > 0 and self.width > 0):
            raise ValueError(f"box extents must be positive, got {self.length}x{self.width}")

    def corners(self) -> Tuple[Vec2, Vec2, Vec2, Vec2]:
        c, s = math.cos(self.heading), math.sin(self.heading)
        hl, hw = 0.5 * self.length, 0.5 * self.width
        return tuple(
            (self.cx + dx * c - dy * s, self.cy + dx * s + dy * c)
            for dx, dy in ((hl, hw), (-hl, hw), (-hl, -hw), (hl, -hw))
        )

    def contains_point(self, p: Vec2) -> bool:
        c, s = math.cos(self.heading), math.sin(self.heading)
        dx, dy = p[0] - self.cx, p[1] - self.cy
        u = dx * c + dy * s
        v = -dx * s + dy * c
        return abs(u) <= 0.5 * self.length and abs(v) <= 0.5 * self.width


def obb_sat_margin(a: OrientedBox, b: OrientedBox) -> float:
    """Signed overlap of the SAT projections.

    Positive: boxes intersect, value is the exact penetration depth.
    Negative: boxes are disjoint, -value is a lower bound on their distance.
    """
    ca = a.corners()
    cb = b.corners()
    margin = math.inf
    for heading in (a.heading, b.heading):
        c, s = math.cos(heading), math.sin(heading)
        for ax, ay in ((c, s), (-s, c)):
            amin = amax = ca[0][0] * ax + ca[0][1] * ay
            for px, py in ca[1:]:
                d = px * ax + py * ay
                amin = min(amin, d)
                amax = max(amax, d)
            bmin = bmax = cb[0][0] * ax + cb[0][1] * ay
            for px, py in cb[1:]:
                d = px * ax + py * ay
                bmin = min(bmin, d)
                bmax = max(bmax, d)
            margin = min(margin, min(amax, bmax) - max(amin, bmin))
    return margin


def obb_intersects(a: OrientedBox, b: OrientedBox) -> bool:
    """Closed-rectangle overlap via the separating-axis test (touch counts)."""
    # cheap circle rejection; strict inequality keeps boundary semantics exact
    r = 0.5 * (math.hypot(a.length, a.width) + math.hypot(b.length, b.width))
    if math.hypot(b.cx - a.cx, b.cy - a.cy) > r:
        return False
    return obb_sat_margin(a, b) >= 0.0


def point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> float:
    abx, aby = b[0] - a[0], b[1] - a[1]
    apx, apy = p[0] - a[0], p[1] - a[1]
    denom = abx * abx + aby * aby
    if denom <= 0.0:
        return math.hypot(apx, apy)
    t = clamp((apx * abx + apy * aby) / denom, 0.0, 1.0)
    return math.hypot(apx - t * abx, apy - t * aby)


def obb_distance(a: OrientedBox, b: OrientedBox) -> float:
    """Minimum distance between two boxes; 0 when they intersect."""
    if obb_intersects(a, b):
        return 0.0
    ca, cb = a.corners(), b.corners()
    best = math.inf
    for pts, quad in ((ca, cb), (cb, ca)):
        for p in pts:
            for i in range(4):
                best = min(best, point_segment_distance(p, quad[i], quad[(i + 1) % 4]))
    return best


def signed_side(seg: Segment, p: Vec2) -> int:
    """Which side of the directed segment p lies on: +1 left, -1 right, 0 collinear."""
    (ax, ay), (bx, by) = seg
    if ax == bx and ay == by:
        raise ValueError("degenerate segment")
    c = _cross(bx - ax, by - ay, p[0] - ax, p[1] - ay)
    return 0 if c == 0.0 else (1 if c > 0.0 else -1)


def _on_segment_collinear(a: Vec2, b: Vec2, p: Vec2) -> bool:
    return (
        min(a[0], b[0]) <= p[0] <= max(a[0], b[0])
        and min(a[1], b[1]) <= p[1] <= max(a[1], b[1])
    )


def segments_intersect(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> bool:
    """Closed segment-segment intersection, collinear touches included."""
    d1 = _cross(q2[0] - q1[0], q2[1] - q1[1], p1[0] - q1[0], p1[1] - q1[1])
    d2 = _cross(q2[0] - q1[0], q2[1] - q1[1], p2[0] - q1[0], p2[1] - q1[1])
    d3 = _cross(p2[0] - p1[0], p2[1] - p1[1], q1[0] - p1[0], q1[1] - p1[1])
    d4 = _cross(p2[0] - p1[0], p2[1] - p1[1], q2[0] - p1[0], q2[1] - p1[1])
    if ((d1 > 0) != (d2 > 0) and d1 != 0 and d2 != 0) and (
        (d3 > 0) != (d4 > 0) and d3 != 0 and d4 != 0
    ):
        return True
    if d1 == 0 and _on_segment_collinear(q1, q2, p1):
        return True
    if d2 == 0 and _on_segment_collinear(q1, q2, p2):
        return True
    if d3 == 0 and _on_segment_collinear(p1, p2, q1):
        return True
    if d4 == 0 and _on_segment_collinear(p1, p2, q2):
        return True
    return False


def segment_intersection_point(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> Optional[Vec2]:
    """Intersection point of two segments, or None.

    Collinear overlaps report the overlap point closest to p1.
    """
    rx, ry = p2[0] - p1[0], p2[1] - p1[1]
    sx, sy = q2[0] - q1[0], q2[1] - q1[1]
    denom = _cross(rx, ry, sx, sy)
    qpx, qpy = q1[0] - p1[0], q1[1] - p1[1]
    if denom == 0.0:
        if _cross(qpx, qpy, rx, ry) != 0.0:
            return None
        # collinear: project both q endpoints onto p's parameter
        rr = rx * rx + ry * ry
        if rr == 0.0:
            return p1 if _on_segment_collinear(q1, q2, p1) else None
        t0 = (qpx * rx + qpy * ry) / rr
        t1 = t0 + (sx * rx + sy * ry) / rr
        lo, hi = min(t0, t1), max(t0, t1)
        if hi < 0.0 or lo > 1.0:
            return None
        t = clamp(lo, 0.0, 1.0)
        return (p1[0] + t * rx, p1[1] + t * ry)
    t = _cross(qpx, qpy, sx, sy) / denom
    u = _cross(qpx, qpy, rx, ry) / denom
    if 0.0 <= t <= 1.0 and 0.0 <= u <= 1.0:
        return (p1[0] + t * rx, p1[1] + t * ry)
    return None


def polyline_length(line: Sequence[Vec2]) -> float:
    return sum(
        math.hypot(line[i + 1][0] - line[i][0], line[i + 1][1] - line[i][1])
        for i in range(len(line) - 1)
    )


def point_at_arclength(line: Sequence[Vec2], s: float) -> Vec2:
    """Point on the polyline at arc length s (clamped to [0, length])."""
    if s <= 0.0:
        return tuple(line[0])
    acc = 0.0
    for i in range(len(line) - 1):
        ax, ay = line[i]
        bx, by = line[i + 1]
        seg = math.hypot(bx - ax, by - ay)
        if acc + seg >= s and seg > 0.0:
            u = (s - acc) / seg
            return (ax + u * (bx - ax), ay + u * (by - ay))
        acc += seg
    return tuple(line[-1])


def project_onto_polyline(line: Sequence[Vec2], p: Vec2) -> Tuple[float, float]:
    """Closest point on a polyline as (arc length s, signed lateral offset d).

    d is positive when p lies left of the local segment direction; |d| is the
    distance to the polyline.  Exact ties are broken toward the smallest s.
    """
    if len(line) < 2:
        raise ValueError("polyline needs at least 2 points")
    best_d2 = math.inf
    best_s = 0.0
    best_sign = 0
    acc = 0.0
    for i in range(len(line) - 1):
        ax, ay = line[i]
        bx, by = line[i + 1]
        abx, aby = bx - ax, by - ay
        seg2 = abx * abx + aby * aby
        seg = math.sqrt(seg2)
        if seg2 == 0.0:
            continue
        apx, apy = p[0] - ax, p[1] - ay
        t = clamp((apx * abx + apy * aby) / seg2, 0.0, 1.0)
        fx, fy = apx - t * abx, apy - t * aby
        d2 = fx * fx + fy * fy
        if d2 < best_d2:
            best_d2 = d2
            best_s = acc + t * seg
            c = _cross(abx, aby, apx, apy)
            best_sign = 0 if c == 0.0 else (1 if c > 0.0 else -1)
        acc += seg
    return best_s, best_sign * math.sqrt(best_d2)


def ray_first_hit(
    origin: Vec2, target: Vec2, obstacles: Sequence[OrientedBox]
) -> Optional[Tuple[int, float]]:
    """Nearest obstacle struck by the open segment origin->target.

    Returns (obstacle index, hit distance) or None.  A box containing the
    origin is ignored; boxes entirely beyond the target do not count.
    """
    dx, dy = target[0] - origin[0], target[1] - origin[1]
    seg_len = math.hypot(dx, dy)
    if seg_len == 0.0:
        raise ValueError("ray origin equals target")
    best: Optional[Tuple[int, float]] = None
    for idx, box in enumerate(obstacles):
        c, s = math.cos(box.heading), math.sin(box.heading)
        ox, oy = origin[0] - box.cx, origin[1] - box.cy
        # into box frame
        lo_x, lo_y = ox * c + oy * s, -ox * s + oy * c
        ld_x, ld_y = dx * c + dy * s, -dx * s + dy * c
        t_enter, t_exit = 0.0 - math.inf, math.inf
        ok = True
        for o, d, half in ((lo_x, ld_x, 0.5 * box.length), (lo_y, ld_y, 0.5 * box.width)):
            if abs(d) < EPS:
                if abs(o) > half:
                    ok = False
                    break
                continue
            t0 = (-half - o) / d
            t1 = (half - o) / d
            if t0 > t1:
                t0, t1 = t1, t0
            t_enter = max(t_enter, t0)
            t_exit = min(t_exit, t1)
        if not ok or t_enter > t_exit:
            continue
        if t_enter <= 0.0:
            # box contains (or touches) the origin, or lies fully behind it
            continue
        if t_enter > 1.0:
            continue
        dist = t_enter * seg_len
        if best is None or dist < best[1]:
            best = (idx, dist)
    return best


def point_on_polygon_boundary(poly: Sequence[Vec2], p: Vec2, tol: float = EPS) -> bool:
    n = len(poly)
    for i in range(n):
        if point_segment_distance(p, poly[i], poly[(i + 1) % n]) <= tol:
            return True
    return False


def point_in_polygon(poly: Sequence[Vec2], p: Vec2) -> bool:
    """Point containment in a simple polygon, boundary inclusive (winding test)."""
    if point_on_polygon_boundary(poly, p):
        return True
    wn = 0
    px, py = p
    n = len(poly)
    for i in range(n):
        ax, ay = poly[i]
        bx, by = poly[(i + 1) % n]
        if ay <= py:
            if by > py and _cross(bx - ax, by - ay, px - ax, py - ay) > 0:
                wn += 1
        elif by <= py and _cross(bx - ax, by - ay, px - ax, py - ay) < 0:
            wn -= 1
    return wn != 0


def polygon_is_simple(poly: Sequence[Vec2]) -> bool:
    """True when no two non-adjacent edges intersect (O(n^2), fine for maps)."""
    n = len(poly)
    if n < 3:
        return False
    edges = [(poly[i], poly[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        a1, a2 = edges[i]
        if a1 == a2:
            return False
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            b1, b2 = edges[j]
            if segments_intersect(a1, a2, b1, b2):
                return False
    return True


def convex_hull(points: Sequence[Vec2]) -> Tuple[Vec2, ...]:
    """Andrew's monotone chain; returns CCW hull without repeated endpoint."""
    pts = sorted(set((float(x), float(y)) for x, y in points))
    if len(pts) <= 2:
        return tuple(pts)

    def half(iterable):
        out = []
        for p in iterable:
            while len(out) >= 2 and _cross(
                out[-1][0] - out[-2][0], out[-1][1] - out[-2][1],
                p[0] - out[-2][0], p[1] - out[-2][1],
            ) <= 0:
                out.pop()
            out.append(p)
        return out

    lower = half(pts)
    upper = half(reversed(pts))
    return tuple(lower[:-1] + upper[:-1])


def transform_point(p: Vec2, angle: float, tx: float, ty: float) -> Vec2:
    """Rotate by angle about the origin, then translate."""
    c, s = math.cos(angle), math.sin(angle)
    return (p[0] * c - p[1] * s + tx, p[0] * s + p[1] * c + ty)
