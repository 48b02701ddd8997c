"""Lockstep network bridge for external policies.

Wire format: UTF-8, one JSON object per newline-terminated line over a byte
stream.  The evaluator listens; a policy client connects once per episode.
Server emits hello/obs/done, the client answers every obs with exactly one
control or waypoints message before the simulation advances.
"""
from __future__ import annotations

import json
import math
import select
import socket
from typing import Optional, Tuple, Union

from .config import EvalConfig
from .errors import PolicyFault, ProtocolError
from .metrics import EpisodeResult
from .scenario import Scenario
from .simulation import ControlCommand, Observation, WaypointPlan

MAX_WAYPOINTS = 20
MAX_LINE_BYTES = 1 << 20

_CONTROL_KEYS = {"type", "steer", "throttle", "brake"}
_WAYPOINT_KEYS = {"type", "points"}


def _require_finite_number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ProtocolError(f"{where}: expected a number, got {type(value).__name__}")
    out = float(value)
    if not math.isfinite(out):
        raise ProtocolError(f"{where}: must be finite")
    return out


def parse_client_message(line: str) -> Union[ControlCommand, WaypointPlan]:
    """Validate one client reply line; raises ProtocolError with the reason."""
    line = line.strip()
    if not line:
        raise ProtocolError("empty message line")
    try:
        doc = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"malformed JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ProtocolError("message must be a JSON object")
    mtype = doc.get("type")
    if mtype == "control":
        extra = set(doc) - _CONTROL_KEYS
        if extra:
            raise ProtocolError(f"control message: unknown keys {sorted(extra)}")
        missing = _CONTROL_KEYS - set(doc)
        if missing:
            raise ProtocolError(f"control message: missing keys {sorted(missing)}")
        return ControlCommand(
            steer=_require_finite_number(doc["steer"], "control.steer"),
            throttle=_require_finite_number(doc["throttle"], "control.throttle"),
            brake=_require_finite_number(doc["brake"], "control.brake"),
        )
    if mtype == "waypoints":
        extra = set(doc) - _WAYPOINT_KEYS
        if extra:
            raise ProtocolError(f"waypoints message: unknown keys {sorted(extra)}")
        points = doc.get("points")
        if not isinstance(points, list) or not (1 <= len(points) <= MAX_WAYPOINTS):
            raise ProtocolError(
                f"waypoints message: points must hold 1..{MAX_WAYPOINTS} [x, y] pairs"
            )
        parsed = []
        for i, p in enumerate(points):
            if not (isinstance(p, list) and len(p) == 2):
                raise ProtocolError(f"waypoints message: points[{i}] must be [x, y]")
            parsed.append(
                (
                    _require_finite_number(p[0], f"points[{i}].x"),
                    _require_finite_number(p[1], f"points[{i}].y"),
                )
            )
        return WaypointPlan(points=tuple(parsed), target_speed=None)
    raise ProtocolError(f"unknown message type {mtype!r} (client may send control/waypoints)")


def hello_message(scenario: Scenario, cfg: EvalConfig) -> dict:
    ego_track = scenario.ego_track()
    vp = cfg.vehicle
    return {
        "type": "hello",
        "scenario_id": scenario.scenario_id,
        "tick_hz": scenario.tick_hz,
        "route": [[x, y] for x, y in scenario.ego.route_waypoints],
        "vehicle": {
            "wheelbase": vp.wheelbase,
            "max_steer": vp.max_steer,
            "max_steer_rate": vp.max_steer_rate,
            "max_accel": vp.max_accel,
            "max_brake": vp.max_brake,
            "max_speed": vp.max_speed,
            "drag_coeff": vp.drag_coeff,
            "body_length": ego_track.length,
            "body_width": ego_track.width,
        },
    }


def obs_message(obs: Observation) -> dict:
    return {
        "type": "obs",
        "tick": obs.tick,
        "ego": {
            "x": obs.ego.pose.x,
            "y": obs.ego.pose.y,
            "heading": obs.ego.pose.heading,
            "speed": obs.ego.speed,
        },
        "agents": [
            {
                "id": a.track_id,
                "cat": a.category.value,
                "x": a.box.cx,
                "y": a.box.cy,
                "heading": a.box.heading,
                "l": a.box.length,
                "w": a.box.width,
                "speed": a.speed,
            }
            for a in obs.agents
        ],
        "signals": [{"id": sv.group_id, "state": sv.state.value} for sv in obs.signals],
        "route_remaining": [[x, y] for x, y in obs.route_remaining],
    }


def done_message(result: EpisodeResult) -> dict:
    return {"type": "done", "result": result.to_dict()}


def encode_message(doc: dict) -> bytes:
    return (json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n").encode("utf-8")


class _LineChannel:
    """Blocking line-oriented channel over a connected socket."""

    def __init__(self, conn: socket.socket, timeout_s: float):
        self._conn = conn
        self._buf = b""
        conn.settimeout(timeout_s)

    def send(self, doc: dict) -> None:
        try:
            self._conn.sendall(encode_message(doc))
        except OSError as exc:
            raise PolicyFault(f"client connection lost while sending: {exc}") from exc

    def recv_line(self) -> str:
        while b"\n" not in self._buf:
            if len(self._buf) > MAX_LINE_BYTES:
                raise ProtocolError("message line exceeds size limit")
            try:
                chunk = self._conn.recv(65536)
            except socket.timeout as exc:
                raise PolicyFault("per-tick policy wall-time limit exceeded") from exc
            except OSError as exc:
                raise PolicyFault(f"client connection lost: {exc}") from exc
            if not chunk:
                raise PolicyFault("client disconnected mid-episode")
            self._buf += chunk
        line, self._buf = self._buf.split(b"\n", 1)
        try:
            return line.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ProtocolError(f"message line is not UTF-8: {exc}") from exc

    def has_pending_data(self) -> bool:
        if self._buf:
            return True
        readable, _, _ = select.select([self._conn], [], [], 0)
        return bool(readable)

    def close(self) -> None:
        try:
            self._conn.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self._conn.close()


class BridgePolicyServer:
    """Policy handle backed by one client connection per episode.

    Lockstep: after hello, each obs is answered by exactly one reply; a
    pending extra line before the next obs is a protocol violation.
    """

    kind = "bridge"
    mode = "waypoint-output"

    def __init__(self, host: str = "127.0.0.1", port: int = 0,
                 accept_timeout_s: float = 30.0):
        self._listener = socket.create_server((host, port))
        self._listener.settimeout(accept_timeout_s)
        self.host, self.port = self._listener.getsockname()[:2]
        self.name = f"bridge:{self.host}:{self.port}"
        self._channel: Optional[_LineChannel] = None

    @property
    def endpoint(self) -> Tuple[str, int]:
        return (self.host, self.port)

    def reset(self, scenario: Scenario, cfg: EvalConfig, seed: int) -> None:
        if self._channel is not None:
            self._channel.close()
            self._channel = None
        try:
            conn, _addr = self._listener.accept()
        except socket.timeout as exc:
            raise PolicyFault("no policy client connected before the accept timeout") from exc
        conn.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        self._channel = _LineChannel(conn, cfg.policy_tick_timeout_s)
        self._channel.send(hello_message(scenario, cfg))

    def act(self, obs: Observation) -> Union[ControlCommand, WaypointPlan]:
        chan = self._channel
        if chan is None:
            raise PolicyFault("bridge has no connected client")
        if obs.tick > 0 and chan.has_pending_data():
            raise ProtocolError("client sent more than one reply to an observation")
        chan.send(obs_message(obs))
        return parse_client_message(chan.recv_line())

    def finish(self, result: EpisodeResult) -> None:
        chan = self._channel
        if chan is None:
            return
        try:
            chan.send(done_message(result))
        except PolicyFault:
            pass
        chan.close()
        self._channel = None

    def close(self) -> None:
        if self._channel is not None:
            self._channel.close()
            self._channel = None
        self._listener.close()

    def __enter__(self) -> "BridgePolicyServer":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def serve_bridge_policy(host: str = "127.0.0.1", port: int = 0) -> BridgePolicyServer:
    """Bind a lockstep policy server; the handle plugs into run_episode."""
    return BridgePolicyServer(host, port)
