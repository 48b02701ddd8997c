"""Map model: loading, containment, hull, transforms."""
import json
import math

import pytest

from replaybench.errors import InvariantError, ParseError
from replaybench.hdmap import (
    intersection_hull,
    load_map,
    map_to_dict,
    point_in_drivable,
    serialize_map,
    transform_map,
)
from replaybench.geometry import point_in_polygon

from conftest import straight_road_map


def test_map_roundtrip():
    m = straight_road_map()
    again = load_map(serialize_map(m))
    assert again == m


def test_map_rejects_unknown_keys():
    doc = map_to_dict(straight_road_map())
    doc["bonus"] = 1
    with pytest.raises(ParseError, match="unknown keys"):
        load_map(json.dumps(doc))


def test_map_rejects_self_intersecting_polygon():
    doc = map_to_dict(straight_road_map())
    doc["drivable_area"] = [[[0, 0], [4, 4], [4, 0], [0, 4]]]
    with pytest.raises(InvariantError, match="self-intersecting"):
        load_map(json.dumps(doc))


def test_map_rejects_zero_length_lane_segment():
    doc = map_to_dict(straight_road_map())
    doc["lanes"][0]["centerline"] = [[0, 0], [0, 0], [5, 0]]
    with pytest.raises(InvariantError, match="zero-length"):
        load_map(json.dumps(doc))


def test_point_in_drivable_union():
    m = straight_road_map()
    assert point_in_drivable(m, (0.0, 0.0))
    assert point_in_drivable(m, (50.0, 6.0))  # boundary counts as inside
    assert not point_in_drivable(m, (0.0, 20.0))


def test_bounds_with_margin():
    m = straight_road_map()
    x0, y0, x1, y1 = m.bounds(margin=50.0)
    assert x0 == -100.0 and x1 == 100.0
    assert y0 == -56.0 and y1 == 56.0


def test_intersection_hull_spans_stop_line_and_crosswalk():
    m = straight_road_map()
    hull = intersection_hull(m)
    assert len(hull) >= 3
    # hull covers the stop line (x=16) through the crosswalk (x in [18, 21])
    assert point_in_polygon(hull, (18.0, 0.0))
    assert not point_in_polygon(hull, (0.0, 0.0))


def test_intersection_hull_falls_back_to_bbox():
    doc = map_to_dict(straight_road_map())
    doc["stop_lines"] = []
    doc["crosswalks"] = []
    m = load_map(json.dumps(doc))
    hull = intersection_hull(m)
    assert point_in_polygon(hull, (0.0, 0.0))  # whole-map bbox


def test_transform_map_moves_geometry():
    m = straight_road_map()
    moved = transform_map(m, math.pi / 2, 10.0, 0.0)
    # lane along +x becomes a lane along +y
    (x0, y0), (x1, y1) = moved.lanes[0].centerline
    assert x0 == pytest.approx(10.0)
    assert y0 == pytest.approx(-50.0)
    assert x1 == pytest.approx(10.0, abs=1e-9)
    assert y1 == pytest.approx(50.0)
    assert point_in_drivable(moved, (10.0, 0.0))
