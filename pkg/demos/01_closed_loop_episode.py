"""One closed-loop episode, step by step.

Forges a left-turn scenario, replays it with the recorded-expert policy and
with the blind route follower, and prints what the harness measured.
"""
from replaybench import EvalConfig, run_episode
from replaybench.policies import ExpertReplayPolicy, PidFollowerPolicy
from replaybench.synth import GeneratorSpec, generate_synthetic

scenario, hdmap = generate_synthetic(
    GeneratorSpec(behavior="COV-LFT", seed=3, n_background=2, approach=0)
)
cfg = EvalConfig()

print(f"scenario {scenario.scenario_id}: {scenario.n_ticks} ticks at 10 Hz, "
      f"{len(scenario.tracks)} agents, behavior {scenario.behavior.sub}")
print(f"route: {len(scenario.ego.route_waypoints)} waypoints, "
      f"weather={scenario.weather}, time={scenario.time_of_day}")
print()

for name, policy in (
    ("expert replay", ExpertReplayPolicy()),
    ("route follower", PidFollowerPolicy()),
):
    result, trace = run_episode(scenario, hdmap, policy, cfg)
    print(f"{name}:")
    print(f"  termination   {result.termination} after {result.duration_ticks} ticks")
    print(f"  completion    {result.rc:.3f}")
    print(f"  success       {result.success}")
    for inf in result.infractions:
        print(f"  infraction    {inf.kind.value} at tick {inf.tick} "
              f"(penalty {inf.penalty}, subject {inf.subject})")
    final = trace.records[-1].ego
    print(f"  final state   ({final.pose.x:.1f}, {final.pose.y:.1f}) "
          f"at {final.speed:.1f} m/s")
    print()
