"""EvalConfig document round trip and validation."""
import json
import math

import pytest

from replaybench.config import DEFAULT_PENALTIES, EvalConfig, VehicleParams
from replaybench.errors import ParseError


def test_defaults_match_documented_values():
    cfg = EvalConfig()
    assert cfg.vehicle.wheelbase == 2.9
    assert cfg.vehicle.max_steer == pytest.approx(math.radians(35))
    assert cfg.vehicle.max_speed == 15.0
    assert cfg.sensing_range == 85.0
    assert cfg.timeout_factor == 2.0
    assert cfg.policy_tick_timeout_s == 10.0
    assert cfg.penalties["collision_pedestrian"] == 0.50
    assert cfg.penalties["collision_vehicle"] == 0.60
    assert cfg.penalties["collision_static"] == 0.65
    assert cfg.penalties["red_light"] == 0.70
    for kind in ("timeout", "route_deviation", "policy_failure"):
        assert cfg.penalties[kind] == 1.0


def test_json_round_trip():
    cfg = EvalConfig(target_speed=6.5, vehicle=VehicleParams(max_speed=12.0))
    again = EvalConfig.from_json(cfg.to_json())
    assert again == cfg


def test_partial_document_overlays_defaults():
    doc = {"sensing_range": 40.0, "penalties": {"red_light": 0.5},
           "vehicle": {"wheelbase": 2.5}}
    cfg = EvalConfig.from_dict(doc)
    assert cfg.sensing_range == 40.0
    assert cfg.penalties["red_light"] == 0.5
    assert cfg.penalties["collision_vehicle"] == DEFAULT_PENALTIES["collision_vehicle"]
    assert cfg.vehicle.wheelbase == 2.5
    assert cfg.vehicle.max_speed == 15.0  # untouched default


def test_unknown_keys_rejected():
    with pytest.raises(ParseError, match="unknown keys"):
        EvalConfig.from_dict({"warp_drive": True})
    with pytest.raises(ParseError, match="vehicle"):
        EvalConfig.from_dict({"vehicle": {"rockets": 2}})


def test_penalty_range_enforced():
    with pytest.raises(ParseError):
        EvalConfig.from_dict({"penalties": {"red_light": 0.0}})
    with pytest.raises(ParseError):
        EvalConfig.from_dict({"penalties": {"red_light": 1.5}})


def test_malformed_document():
    with pytest.raises(ParseError):
        EvalConfig.from_json(b"{oops")


def test_timeout_ticks_rule():
    cfg = EvalConfig()
    assert cfg.timeout_ticks(300) == 600      # 2x the clip
    assert cfg.timeout_ticks(50) == 200       # 20 s floor


def test_cli_accepts_config_file(tmp_path):
    from replaybench.cli import main

    corpus = tmp_path / "c"
    assert main(["forge", "--out", str(corpus), "--behavior", "STR"]) == 0
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"target_speed": 5.0}))
    out = tmp_path / "run"
    assert main(["evaluate", "--scenarios", str(corpus / "scenarios"),
                 "--maps", str(corpus / "maps"), "--out", str(out),
                 "--policy", "builtin:pid", "--config", str(cfg_path)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["target_speed"] == 5.0
