"""Batch orchestration: evaluate, openloop, classify, filter, forge, validate, report.

All commands write only under --out.  A run's artifacts are byte-stable:
equal corpus digest, policy, config and seed reproduce episodes.jsonl and
summary.json exactly.
"""
from __future__ import annotations

import argparse
import concurrent.futures
import datetime
import hashlib
import json
import sys
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from . import __version__
from .config import EvalConfig
from .errors import ParseError, ReplayBenchError
from .hdmap import HDMapModel, load_map, serialize_map
from .metrics import (
    EpisodeResult,
    open_loop_l2,
    result_to_jsonl_line,
    summarize,
)
from .behavior import classify_behavior
from .occlusion import OcclusionConfig, occlusion_filter, removal_report
from .policies import make_policy
from .scenario import Scenario, load_scenario, serialize_scenario, validate_scenario
from .simulation import run_episode
from .synth import (
    GeneratorSpec,
    canonical_suite,
    generate_synthetic,
    make_occlusion_fixture,
    make_ped_conflict_fixture,
    make_red_runner_fixture,
)


def _load_scenarios(directory: str) -> List[Tuple[Path, Scenario]]:
    paths = sorted(Path(directory).glob("*.json"))
    if not paths:
        raise ParseError(f"no scenario documents (*.json) under {directory}")
    out = []
    for path in paths:
        out.append((path, load_scenario(path.read_bytes())))
    out.sort(key=lambda item: item[1].scenario_id)
    return out


def _load_maps(directory: str) -> Dict[str, HDMapModel]:
    out = {}
    for path in sorted(Path(directory).glob("*.json")):
        m = load_map(path.read_bytes())
        out[m.map_id] = m
    if not out:
        raise ParseError(f"no map documents (*.json) under {directory}")
    return out


def _map_for(scenario: Scenario, maps: Dict[str, HDMapModel]) -> HDMapModel:
    if scenario.intersection_id not in maps:
        raise ParseError(
            f"scenario {scenario.scenario_id} needs map {scenario.intersection_id!r}; "
            f"available: {sorted(maps)}"
        )
    return maps[scenario.intersection_id]


def _load_config(path: Optional[str]) -> EvalConfig:
    if path is None:
        return EvalConfig()
    return EvalConfig.from_json(Path(path).read_bytes())


def _corpus_digest(scenarios: List[Tuple[Path, Scenario]]) -> str:
    h = hashlib.sha256()
    for _, s in sorted(scenarios, key=lambda item: item[1].scenario_id):
        h.update(serialize_scenario(s).encode("utf-8"))
        h.update(b"\n")
    return h.hexdigest()


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _utcnow() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")


def _episode_worker(args) -> dict:
    scenario_text, map_text, cfg_dict, policy_spec, seed = args
    scenario = load_scenario(scenario_text)
    hdmap = load_map(map_text)
    cfg = EvalConfig.from_dict(cfg_dict)
    policy = make_policy(policy_spec)
    result, _trace = run_episode(scenario, hdmap, policy, cfg, seed)
    return result.to_dict()


def cmd_evaluate(args) -> int:
    cfg = _load_config(args.config)
    scenarios = _load_scenarios(args.scenarios)
    maps = _load_maps(args.maps)
    out = Path(args.out)
    started = _utcnow()

    results: List[EpisodeResult] = []
    if args.jobs > 1 and not args.policy.startswith("bridge:"):
        tasks = [
            (serialize_scenario(s), serialize_map(_map_for(s, maps)),
             cfg.to_dict(), args.policy, args.seed)
            for _, s in scenarios
        ]
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
            for doc in pool.map(_episode_worker, tasks):
                results.append(EpisodeResult.from_dict(doc))
    else:
        if args.policy.startswith("bridge:") and args.jobs > 1:
            print("bridge policies run one episode per connection; forcing --jobs 1",
                  file=sys.stderr)
        policy = make_policy(args.policy)
        for _, s in scenarios:
            result, _trace = run_episode(s, _map_for(s, maps), policy, cfg, args.seed)
            results.append(result)
        close = getattr(policy, "close", None)
        if close is not None:
            close()

    results.sort(key=lambda r: r.scenario_id)
    _write(out / "episodes.jsonl", "".join(result_to_jsonl_line(r) + "\n" for r in results))
    summary = summarize(results, [s for _, s in scenarios], penalties=cfg.penalties)
    _write(out / "summary.json", summary.to_json() + "\n")
    manifest = {
        "tool_version": __version__,
        "policy": args.policy,
        "seed": args.seed,
        "jobs": args.jobs,
        "config": cfg.to_dict(),
        "scenario_digest": _corpus_digest(scenarios),
        "n_scenarios": len(scenarios),
        "started_utc": started,
        "finished_utc": _utcnow(),
    }
    _write(out / "manifest.json", json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    print(f"evaluated {len(results)} scenarios: SR={summary.sr:.2f}% DS={summary.ds:.2f}")
    return 0


def cmd_openloop(args) -> int:
    cfg = _load_config(args.config)
    scenarios = _load_scenarios(args.scenarios)
    _ = _load_maps(args.maps)  # presence check; open-loop scoring is map-free
    predictor = make_policy(args.predictor)
    if not hasattr(predictor, "predict_positions"):
        raise ParseError(f"policy {args.predictor!r} cannot act as an open-loop predictor")
    out = Path(args.out)
    lines = []
    sums = None
    horizons = (1.0, 2.0)
    for _, s in scenarios:
        report = open_loop_l2(predictor, s, horizons_s=horizons,
                              anchor_stride=cfg.l2_anchor_stride)
        doc = {"scenario_id": s.scenario_id}
        doc.update(report.to_dict())
        lines.append(json.dumps(doc, sort_keys=True, separators=(",", ":")))
        if sums is None:
            sums = [0.0] * len(report.per_horizon)
        for i, v in enumerate(report.per_horizon):
            sums[i] += v
    per_h = [v / len(scenarios) for v in sums]
    aggregate = {f"l2_{h:g}s": v for h, v in zip(horizons, per_h)}
    aggregate["avg"] = sum(per_h) / len(per_h)
    aggregate["n_scenarios"] = len(scenarios)
    aggregate["predictor"] = args.predictor
    _write(out / "openloop.jsonl", "\n".join(lines) + "\n")
    _write(out / "openloop.json",
           json.dumps(aggregate, sort_keys=True, separators=(",", ":")) + "\n")
    print(f"open-loop L2 over {len(scenarios)} scenarios: "
          + " ".join(f"{h:g}s={v:.3f}m" for h, v in zip(horizons, per_h))
          + f" avg={aggregate['avg']:.3f}m")
    return 0


def cmd_classify(args) -> int:
    scenarios = _load_scenarios(args.scenarios)
    maps = _load_maps(args.maps)
    out_dir = Path(args.out) if args.out else None
    changed = 0
    for path, s in scenarios:
        label = classify_behavior(s, _map_for(s, maps))
        import dataclasses

        labeled = dataclasses.replace(s, behavior=label)
        text = serialize_scenario(labeled)
        target = (out_dir / path.name) if out_dir else path
        if not target.exists() or target.read_text(encoding="utf-8") != text:
            _write(target, text)
            changed += 1
        print(f"{s.scenario_id}: {label.main}/{label.sub}")
    print(f"classified {len(scenarios)} scenarios ({changed} files written)")
    return 0


def cmd_filter(args) -> int:
    scenarios = _load_scenarios(args.scenarios)
    _ = _load_maps(args.maps)
    cfg = OcclusionConfig(
        mode=args.mode,
        sensor_range=args.sensor_range,
        removal_rule=args.removal_rule,
        visibility_fraction_min=args.min_visible_fraction,
    )
    out = Path(args.out)
    report = {}
    for path, s in scenarios:
        filtered = occlusion_filter(s, cfg)
        _write(out / "scenarios" / path.name, serialize_scenario(filtered))
        removed = removal_report(s, filtered)
        report[s.scenario_id] = {
            "removed": removed,
            "n_before": len(s.tracks),
            "n_after": len(filtered.tracks),
        }
    _write(out / "filter_report.json",
           json.dumps(report, sort_keys=True, indent=2) + "\n")
    total = sum(sum(r["removed"].values()) for r in report.values())
    print(f"filtered {len(scenarios)} scenarios (mode={args.mode}); removed {total} agents")
    return 0


def cmd_forge(args) -> int:
    out = Path(args.out)
    written = []
    if args.suite == "canonical":
        scenarios, hdmap = canonical_suite(per_label=args.per_label, base_seed=args.seed)
        for s in scenarios:
            _write(out / "scenarios" / f"{s.scenario_id}.json", serialize_scenario(s))
            written.append(s.scenario_id)
        _write(out / "maps" / f"{hdmap.map_id}.json", serialize_map(hdmap))
    elif args.suite == "fixtures":
        for scenario, hdmap in (
            make_occlusion_fixture(),
            make_red_runner_fixture(args.seed),
            make_ped_conflict_fixture(),
        ):
            _write(out / "scenarios" / f"{scenario.scenario_id}.json",
                   serialize_scenario(scenario))
            written.append(scenario.scenario_id)
            _write(out / "maps" / f"{hdmap.map_id}.json", serialize_map(hdmap))
    else:
        if not args.behavior:
            raise ParseError("forge needs --suite canonical|fixtures or --behavior SUB")
        scenario, hdmap = generate_synthetic(
            GeneratorSpec(behavior=args.behavior, n_background=args.n_background,
                          seed=args.seed)
        )
        _write(out / "scenarios" / f"{scenario.scenario_id}.json",
               serialize_scenario(scenario))
        _write(out / "maps" / f"{hdmap.map_id}.json", serialize_map(hdmap))
        written.append(scenario.scenario_id)
    print(f"forged {len(written)} scenarios under {out}")
    return 0


def cmd_validate(args) -> int:
    scenarios = _load_scenarios(args.scenarios)
    maps = _load_maps(args.maps)
    n_violations = 0
    for _, s in scenarios:
        violations = validate_scenario(s, _map_for(s, maps))
        for v in violations:
            print(f"{s.scenario_id}: [{v.code}] {v.subject}: {v.message}")
        n_violations += len(violations)
    if n_violations == 0:
        print(f"validated {len(scenarios)} scenarios: clean")
        return 0
    print(f"validated {len(scenarios)} scenarios: {n_violations} violations")
    return 1


def _format_group_table(title: str, groups: dict) -> List[str]:
    lines = [title, f"  {'group':<12} {'n':>4} {'SR (%)':>8} {'DS':>8}"]
    for key, stats in sorted(groups.items()):
        lines.append(f"  {key:<12} {stats['n']:>4} {stats['sr']:>8.2f} {stats['ds']:>8.2f}")
    return lines


def cmd_report(args) -> int:
    doc = json.loads(Path(args.summary).read_text(encoding="utf-8"))
    lines = [
        f"episodes: {doc['n_total']}   SR: {doc['sr']:.2f}%   DS: {doc['ds']:.2f}",
        "",
    ]
    lines += _format_group_table("by behavior", doc["per_behavior"])
    lines.append("")
    lines += _format_group_table("by weather", doc["per_weather"])
    lines.append("")
    lines += _format_group_table("by time of day", doc["per_time"])
    if doc.get("l2"):
        lines.append("")
        lines.append(f"open-loop L2: {doc['l2']}")
    text = "\n".join(lines) + "\n"
    print(text, end="")
    if args.out:
        _write(Path(args.out) / "report.txt", text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="replaybench",
        description="Closed-loop log-replay benchmark for driving policies",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common_io(p, maps=True, out=True):
        p.add_argument("--scenarios", required=True, help="directory of scenario *.json")
        if maps:
            p.add_argument("--maps", required=True, help="directory of map *.json")
        if out:
            p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("evaluate", help="run closed-loop episodes over a corpus")
    common_io(p)
    p.add_argument("--policy", default="builtin:expert",
                   help="builtin:<name>[?k=v...] or bridge:<host>:<port>")
    p.add_argument("--config", default=None, help="EvalConfig JSON document")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("openloop", help="open-loop L2 scoring of a predictor")
    common_io(p)
    p.add_argument("--predictor", default="builtin:const")
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_openloop)

    p = sub.add_parser("classify", help="write behavior labels into scenario documents")
    common_io(p, out=False)
    p.add_argument("--out", default=None, help="write labeled copies here instead of in place")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("filter", help="occlusion-filter a corpus from the ego viewpoint")
    common_io(p)
    p.add_argument("--mode", choices=("vehicles", "all"), required=True)
    p.add_argument("--sensor-range", type=float, default=85.0)
    p.add_argument("--removal-rule", choices=("drop-never-visible", "visible-intervals"),
                   default="drop-never-visible")
    p.add_argument("--min-visible-fraction", type=float, default=0.10)
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("forge", help="emit synthetic scenarios and their map")
    p.add_argument("--out", required=True)
    p.add_argument("--suite", choices=("canonical", "fixtures"), default=None)
    p.add_argument("--per-label", type=int, default=3)
    p.add_argument("--behavior", default=None, help="one sub-label, e.g. COV-LFT")
    p.add_argument("--n-background", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_forge)

    p = sub.add_parser("validate", help="cross-check scenarios against their maps")
    common_io(p, out=False)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("report", help="render a summary.json as a text table")
    p.add_argument("--summary", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ReplayBenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
