"""Benchmark three built-in policies over the canonical corpus.

Computes success rate and driving score per policy and prints the
per-behavior breakdown for the route follower.
"""
from replaybench import EvalConfig, run_episode, summarize
from replaybench.policies import (
    ConstantVelocityPolicy,
    ExpertReplayPolicy,
    PidFollowerPolicy,
)
from replaybench.synth import canonical_suite

scenarios, hdmap = canonical_suite(per_label=1)
cfg = EvalConfig()

print(f"corpus: {len(scenarios)} scenarios, one per behavior sub-label\n")
print(f"{'policy':<20} {'SR (%)':>8} {'DS':>8}")
follower_summary = None
for name, policy in (
    ("expert replay", ExpertReplayPolicy()),
    ("route follower", PidFollowerPolicy()),
    ("constant velocity", ConstantVelocityPolicy()),
):
    results = [run_episode(s, hdmap, policy, cfg)[0] for s in scenarios]
    summary = summarize(results, scenarios, penalties=cfg.penalties)
    print(f"{name:<20} {summary.sr:>8.2f} {summary.ds:>8.2f}")
    if name == "route follower":
        follower_summary = summary

print("\nroute follower by behavior:")
print(f"  {'label':<6} {'n':>3} {'SR (%)':>8} {'DS':>8}")
for label, stats in sorted(follower_summary.per_behavior.items()):
    print(f"  {label:<6} {stats.n:>3} {stats.sr:>8.2f} {stats.ds:>8.2f}")
