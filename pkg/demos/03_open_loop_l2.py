"""Open-loop L2 error, and why it separates predictors on turns.

The constant-velocity extrapolator is exact while the recording goes
straight and diverges with horizon once it turns; the expert predictor is
the identity and scores zero everywhere.
"""
from replaybench import open_loop_l2
from replaybench.policies import ConstantVelocityPolicy, ExpertReplayPolicy
from replaybench.synth import canonical_suite

scenarios, _ = canonical_suite(per_label=1)
const = ConstantVelocityPolicy()
frozen = ConstantVelocityPolicy(speed_override=0.0)
expert = ExpertReplayPolicy()

print(f"{'scenario':<14} {'const 1s':>9} {'const 2s':>9} {'frozen avg':>11} {'expert avg':>11}")
for s in scenarios:
    c = open_loop_l2(const, s)
    f = open_loop_l2(frozen, s)
    e = open_loop_l2(expert, s)
    print(f"{s.scenario_id:<14} {c.per_horizon[0]:>9.3f} {c.per_horizon[1]:>9.3f} "
          f"{f.avg:>11.3f} {e.avg:>11.3f}")

turns = [s for s in scenarios
         if "LFT" in s.behavior.sub or "RT" in s.behavior.sub
         or s.behavior.sub.startswith("UT")]
straights = [s for s in scenarios if s not in turns]
avg = lambda group: sum(open_loop_l2(const, s).avg for s in group) / len(group)  # noqa: E731
print(f"\nconst-velocity avg L2: turns {avg(turns):.3f} m, "
      f"straights {avg(straights):.3f} m")
