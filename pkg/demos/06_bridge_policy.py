"""Driving an episode over the network bridge.

The evaluator listens; a policy client connects, reads the hello, answers
every observation with one newline-delimited JSON reply, and receives the
episode result in the done message.  The client below echoes the remaining
route as waypoints, which reproduces the built-in route follower exactly.
"""
import json
import socket
import threading

from replaybench import EvalConfig, run_episode
from replaybench.bridge import BridgePolicyServer
from replaybench.policies import PidFollowerPolicy
from replaybench.synth import GeneratorSpec, generate_synthetic

scenario, hdmap = generate_synthetic(GeneratorSpec(behavior="YLW-STR", seed=8))
cfg = EvalConfig()


def waypoint_client(port: int) -> None:
    with socket.create_connection(("127.0.0.1", port)) as conn:
        reader = conn.makefile("r", encoding="utf-8")
        hello = json.loads(reader.readline())
        print(f"client: hello for {hello['scenario_id']} at {hello['tick_hz']} Hz, "
              f"route of {len(hello['route'])} waypoints")
        while True:
            msg = json.loads(reader.readline())
            if msg["type"] == "done":
                print(f"client: done, success={msg['result']['success']}")
                return
            reply = {"type": "waypoints", "points": msg["route_remaining"][:20]}
            conn.sendall((json.dumps(reply) + "\n").encode())


with BridgePolicyServer("127.0.0.1", 0) as server:
    print(f"server: listening on {server.host}:{server.port}")
    thread = threading.Thread(target=waypoint_client, args=(server.port,), daemon=True)
    thread.start()
    bridged, _ = run_episode(scenario, hdmap, server, cfg)
    thread.join()

builtin, _ = run_episode(scenario, hdmap, PidFollowerPolicy(), cfg)
print(f"\nbridged result:  rc={bridged.rc:.3f} termination={bridged.termination}")
print(f"builtin result:  rc={builtin.rc:.3f} termination={builtin.termination}")
print(f"identical: {bridged == builtin}")
