"""Shared hand-written fixtures: a straight road map and a one-agent clip."""
import copy
import json

import pytest

from replaybench.hdmap import HDMapModel, Lane, StopLine


def straight_road_map() -> HDMapModel:
    """Straight east-west road, one lane, one stop line, 100 m of drivable area."""
    return HDMapModel(
        map_id="straight",
        lanes=(
            Lane(
                lane_id="e0",
                centerline=((-50.0, 0.0), (50.0, 0.0)),
                width=3.5,
                successor_ids=(),
                signal_group_id="g1",
            ),
        ),
        crosswalks=(((18.0, -6.0), (21.0, -6.0), (21.0, 6.0), (18.0, 6.0)),),
        stop_lines=(StopLine(segment=((16.0, -6.0), (16.0, 6.0)), signal_group_id="g1"),),
        drivable_area=(((-50.0, -6.0), (50.0, -6.0), (50.0, 6.0), (-50.0, 6.0)),),
    )


def minimal_scenario_doc() -> dict:
    """One compliant ego car cruising east at 8 m/s for 10 ticks."""
    samples = [[t, 0.8 * t, 0.0, 0.0, 8.0] for t in range(10)]
    return {
        "scenario_id": "mini-001",
        "intersection_id": "straight",
        "tick_hz": 10,
        "n_ticks": 10,
        "weather": "sunny",
        "time_of_day": "noon",
        "behavior": None,
        "tracks": [
            {
                "track_id": "a1",
                "category": "car",
                "length": 4.6,
                "width": 1.9,
                "samples": samples,
            }
        ],
        "signals": [
            {
                "group_id": "g1",
                "stop_line": [[16.0, -6.0], [16.0, 6.0]],
                "controlled_lane_ids": ["e0"],
                "schedule": [[0, "green"]],
            }
        ],
        "ego": {
            "agent_id": "a1",
            "source": [0.0, 0.0, 0.0],
            "destination": [7.2, 0.0, 0.0],
            "route_waypoints": [[0.0, 0.0], [3.6, 0.0], [7.2, 0.0]],
        },
    }


@pytest.fixture
def road_map() -> HDMapModel:
    return straight_road_map()


@pytest.fixture
def scenario_doc() -> dict:
    return copy.deepcopy(minimal_scenario_doc())


@pytest.fixture
def scenario_json(scenario_doc) -> str:
    return json.dumps(scenario_doc)
