"""Occlusion filtering: visibility, removal rules, the collision flip."""
import json
import math

import pytest

from replaybench.config import EvalConfig
from replaybench.geometry import OrientedBox
from replaybench.metrics import driving_score
from replaybench.occlusion import (
    OcclusionConfig,
    footprint_points,
    occlusion_filter,
    removal_report,
)
from replaybench.policies import PidFollowerPolicy
from replaybench.scenario import load_scenario, serialize_scenario, validate_scenario
from replaybench.simulation import run_episode
from replaybench.synth import (
    GeneratorSpec,
    OCCLUSION_FOLLOWER_SPEED,
    OCCLUSION_HIDDEN_CAR,
    OCCLUSION_HIDDEN_PED,
    generate_synthetic,
    make_occlusion_fixture,
)

from conftest import straight_road_map


def collinear_fixture(scenario_doc):
    """Crawling ego; a bus hides a parked car and a pedestrian behind it."""
    doc = json.loads(json.dumps(scenario_doc))
    n = 41
    doc["n_ticks"] = n
    doc["tracks"][0]["samples"] = [[t, 0.05 * t, 0.0, 0.0, 0.5] for t in range(n)]
    doc["ego"]["destination"] = [0.05 * (n - 1), 0.0, 0.0]
    doc["ego"]["route_waypoints"] = [[0.0, 0.0], [2.0, 0.0]]

    def parked(tid, cat, x, y, l, w):
        return {
            "track_id": tid, "category": cat, "length": l, "width": w,
            "samples": [[t, x, y, 0.0, 0.0] for t in range(n)],
        }

    doc["tracks"] += [
        parked("bus", "bus", 20.0, 0.0, 12.0, 3.0),
        parked("shadow-car", "car", 40.0, 0.0, 4.0, 1.9),
        parked("shadow-ped", "pedestrian", 40.0, -0.5, 0.6, 0.6),
    ]
    return load_scenario(json.dumps(doc))


def test_mode_none_is_identity(scenario_doc):
    s = collinear_fixture(scenario_doc)
    assert occlusion_filter(s, OcclusionConfig(mode="none")) == s


def test_car_behind_bus_removed_in_both_modes(scenario_doc):
    s = collinear_fixture(scenario_doc)
    for mode in ("vehicles", "all"):
        filtered = occlusion_filter(s, OcclusionConfig(mode=mode))
        ids = {t.track_id for t in filtered.tracks}
        assert "shadow-car" not in ids
        assert "bus" in ids  # the occluder itself is in plain sight


def test_hidden_pedestrian_retained_only_in_vehicle_mode(scenario_doc):
    s = collinear_fixture(scenario_doc)
    vehicles = occlusion_filter(s, OcclusionConfig(mode="vehicles"))
    assert "shadow-ped" in {t.track_id for t in vehicles.tracks}
    everything = occlusion_filter(s, OcclusionConfig(mode="all"))
    assert "shadow-ped" not in {t.track_id for t in everything.tracks}


def test_out_of_range_agent_removed(scenario_doc):
    doc = json.loads(json.dumps(scenario_doc))
    doc["tracks"].append(
        {
            "track_id": "far", "category": "car", "length": 4.0, "width": 1.9,
            "samples": [[t, 0.0, 40.0, 0.0, 0.0] for t in range(10)],
        }
    )
    s = load_scenario(json.dumps(doc))
    filtered = occlusion_filter(s, OcclusionConfig(mode="all", sensor_range=30.0))
    assert "far" not in {t.track_id for t in filtered.tracks}


def test_unoccluded_scenario_unchanged():
    s, m = generate_synthetic(GeneratorSpec(behavior="STR", seed=1, n_background=3))
    filtered = occlusion_filter(s, OcclusionConfig(mode="all"))
    assert filtered.tracks == s.tracks


def test_filter_output_is_valid_and_subset(scenario_doc):
    s = collinear_fixture(scenario_doc)
    filtered = occlusion_filter(s, OcclusionConfig(mode="all"))
    assert {t.track_id for t in filtered.tracks} <= {t.track_id for t in s.tracks}
    assert validate_scenario(filtered, straight_road_map()) == []
    load_scenario(serialize_scenario(filtered))  # still a well-formed document


def test_filter_is_idempotent(scenario_doc):
    s = collinear_fixture(scenario_doc)
    for rule in ("drop-never-visible", "visible-intervals"):
        cfg = OcclusionConfig(mode="all", removal_rule=rule)
        once = occlusion_filter(s, cfg)
        twice = occlusion_filter(once, cfg)
        assert serialize_scenario(twice) == serialize_scenario(once)


def test_visible_intervals_splits_tracks(scenario_doc):
    doc = json.loads(json.dumps(scenario_doc))
    n = 41
    doc["n_ticks"] = n
    doc["tracks"][0]["samples"] = [[t, 0.05 * t, 0.0, 0.0, 0.5] for t in range(n)]
    doc["ego"]["destination"] = [0.05 * (n - 1), 0.0, 0.0]
    doc["ego"]["route_waypoints"] = [[0.0, 0.0], [2.0, 0.0]]
    # a car crossing behind the parked bus: hidden only mid-passage
    doc["tracks"] += [
        {
            "track_id": "bus", "category": "bus", "length": 12.0, "width": 3.0,
            "samples": [[t, 20.0, 0.0, 0.0, 0.0] for t in range(n)],
        },
        {
            "track_id": "passer", "category": "car", "length": 4.0, "width": 1.9,
            "samples": [
                [t, 40.0, -30.0 + 1.5 * t, math.pi / 2, 15.0] for t in range(n)
            ],
        },
    ]
    s = load_scenario(json.dumps(doc))
    filtered = occlusion_filter(
        s, OcclusionConfig(mode="all", removal_rule="visible-intervals")
    )
    parts = sorted(t.track_id for t in filtered.tracks if t.track_id.startswith("passer"))
    assert parts == ["passer#0", "passer#1"]
    whole = s.track_by_id("passer")
    pieces = [filtered.track_by_id(p) for p in parts]
    assert sum(len(p.samples) for p in pieces) < len(whole.samples)
    assert pieces[0].last_tick < pieces[1].first_tick


def test_footprint_points_shape():
    box = OrientedBox(3.0, -1.0, 0.4, 4.0, 2.0)
    pts = footprint_points(box, 8)
    assert len(pts) == 9
    assert pts[0] == (3.0, -1.0)
    hairline = OrientedBox(box.cx, box.cy, box.heading,
                           box.length + 1e-9, box.width + 1e-9)
    for p in pts[1:]:
        assert hairline.contains_point(p)  # on the perimeter up to rounding
    # and they really sit on the boundary, not inside
    shrunk = OrientedBox(box.cx, box.cy, box.heading,
                         box.length - 1e-6, box.width - 1e-6)
    assert sum(1 for p in pts[1:] if shrunk.contains_point(p)) <= 4


# ---------------------------------------------------------------------------
# the ablation flip fixture


@pytest.fixture(scope="module")
def flip():
    return make_occlusion_fixture()


def test_flip_fixture_removals(flip):
    s, m = flip
    vehicles = occlusion_filter(s, OcclusionConfig(mode="vehicles"))
    ids = {t.track_id for t in vehicles.tracks}
    assert OCCLUSION_HIDDEN_CAR not in ids
    assert OCCLUSION_HIDDEN_PED in ids  # vulnerable agents are never removed
    assert len(vehicles.tracks) < len(s.tracks)
    everything = occlusion_filter(s, OcclusionConfig(mode="all"))
    gone = removal_report(s, everything)
    assert gone == {"car": 1, "pedestrian": 1}


def test_flip_fixture_turns_collision_into_success(flip):
    s, m = flip
    cfg = EvalConfig()
    policy = PidFollowerPolicy(OCCLUSION_FOLLOWER_SPEED)
    before, _ = run_episode(s, m, policy, cfg)
    assert before.termination == "collision_vehicle"
    assert before.infractions[0].subject == OCCLUSION_HIDDEN_CAR
    filtered = occlusion_filter(s, OcclusionConfig(mode="vehicles"))
    after, _ = run_episode(filtered, m, policy, cfg)
    assert after.success
    assert driving_score([after]) > driving_score([before])
