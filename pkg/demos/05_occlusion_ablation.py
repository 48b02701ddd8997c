"""Occlusion ablation: what vehicle-view filtering does to the score.

A parked bus hides a crossing car and a pedestrian from the recorded ego.
Vehicle-mode filtering deletes the car (never the pedestrian); a blind
route follower that would have hit the hidden car then finishes cleanly,
so the driving score rises.
"""
from replaybench import EvalConfig, driving_score, run_episode
from replaybench.occlusion import OcclusionConfig, occlusion_filter, removal_report
from replaybench.policies import PidFollowerPolicy
from replaybench.synth import OCCLUSION_FOLLOWER_SPEED, make_occlusion_fixture

scenario, hdmap = make_occlusion_fixture()
cfg = EvalConfig()
policy = PidFollowerPolicy(OCCLUSION_FOLLOWER_SPEED)

print(f"fixture agents: {[t.track_id for t in scenario.tracks]}\n")

rows = [("complete", scenario)]
for mode in ("vehicles", "all"):
    filtered = occlusion_filter(scenario, OcclusionConfig(mode=mode))
    removed = removal_report(scenario, filtered)
    print(f"mode={mode}: removed {removed}, "
          f"{len(scenario.tracks)} -> {len(filtered.tracks)} agents")
    rows.append((f"filtered ({mode})", filtered))
print()

print(f"{'benchmark':<20} {'termination':<22} {'DS':>7}")
for name, version in rows:
    result, _ = run_episode(version, hdmap, policy, cfg)
    print(f"{name:<20} {result.termination:<22} {driving_score([result]):>7.2f}")
