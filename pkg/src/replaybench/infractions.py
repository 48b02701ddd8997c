"""Per-tick infraction detection for a running episode.

The monitor is stateful over one episode: it tracks off-road dwell, stop-line
crossings and which kinds already fired, and hands back newly raised
infractions each tick.  Collisions and off-road excursions are terminal;
with non-reactive replayed agents the world stops making sense after either.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Sequence

from .config import EvalConfig
from .geometry import OrientedBox, Vec2, obb_intersects, segments_intersect
from .hdmap import HDMapModel, point_in_drivable
from .scenario import AgentCategory, Scenario, SignalState


class InfractionKind(str, Enum):
    COLLISION_PEDESTRIAN = "collision_pedestrian"
    COLLISION_CYCLIST = "collision_cyclist"
    COLLISION_VEHICLE = "collision_vehicle"
    COLLISION_STATIC = "collision_static"
    RED_LIGHT = "red_light"
    OFF_ROAD = "off_road"
    ROUTE_DEVIATION = "route_deviation"
    TIMEOUT = "timeout"
    POLICY_FAILURE = "policy_failure"


# kinds whose presence fails an episode's success flag
VIOLATION_KINDS = frozenset(
    {
        InfractionKind.COLLISION_PEDESTRIAN,
        InfractionKind.COLLISION_CYCLIST,
        InfractionKind.COLLISION_VEHICLE,
        InfractionKind.COLLISION_STATIC,
        InfractionKind.RED_LIGHT,
        InfractionKind.OFF_ROAD,
        InfractionKind.ROUTE_DEVIATION,
    }
)

TERMINAL_KINDS = frozenset(
    {
        InfractionKind.COLLISION_PEDESTRIAN,
        InfractionKind.COLLISION_CYCLIST,
        InfractionKind.COLLISION_VEHICLE,
        InfractionKind.COLLISION_STATIC,
        InfractionKind.OFF_ROAD,
    }
)


def collision_kind_for(category: AgentCategory) -> InfractionKind:
    """Struck-agent category -> infraction kind.

    Cyclists, motorcycles and tricycles share the vehicle coefficient to keep
    the kind set minimal; collision_cyclist stays in the table but unused.
    """
    if category is AgentCategory.PEDESTRIAN:
        return InfractionKind.COLLISION_PEDESTRIAN
    return InfractionKind.COLLISION_VEHICLE


@dataclass(frozen=True)
class Infraction:
    kind: InfractionKind
    tick: int
    penalty: float
    terminal: bool
    subject: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "tick": self.tick,
            "penalty": self.penalty,
            "terminal": self.terminal,
            "subject": self.subject,
        }

    @staticmethod
    def from_dict(doc: dict) -> "Infraction":
        return Infraction(
            kind=InfractionKind(doc["kind"]),
            tick=int(doc["tick"]),
            penalty=float(doc["penalty"]),
            terminal=bool(doc["terminal"]),
            subject=doc.get("subject"),
        )


@dataclass(frozen=True)
class AgentSnapshot:
    track_id: str
    category: AgentCategory
    box: OrientedBox
    speed: float


class InfractionMonitor:
    """Detects infractions tick by tick for one episode."""

    def __init__(self, scenario: Scenario, hdmap: HDMapModel, cfg: EvalConfig):
        self._scenario = scenario
        self._map = hdmap
        self._cfg = cfg
        self._raised_kinds: set = set()
        self._raised_subjects: set = set()
        self._offroad_run = 0
        self._deviating = False
        self._prev_pos: Optional[Vec2] = None
        self._colliding_agents: set = set()

    def _should_raise(self, kind: InfractionKind, subject: Optional[str]) -> bool:
        if self._cfg.dedupe_infractions:
            return kind not in self._raised_kinds
        return (kind, subject) not in self._raised_subjects

    def _emit(
        self, out: List[Infraction], kind: InfractionKind, tick: int, subject: Optional[str]
    ) -> None:
        if not self._should_raise(kind, subject):
            return
        self._raised_kinds.add(kind)
        self._raised_subjects.add((kind, subject))
        out.append(
            Infraction(
                kind=kind,
                tick=tick,
                penalty=self._cfg.penalty(kind.value),
                terminal=kind in TERMINAL_KINDS,
                subject=subject,
            )
        )

    def update(
        self,
        tick: int,
        ego_box: OrientedBox,
        agents: Sequence[AgentSnapshot],
        signal_states: Dict[str, SignalState],
        lateral_offset: float,
    ) -> List[Infraction]:
        """Check one post-step world state; returns newly raised infractions."""
        out: List[Infraction] = []
        ego_pos = (ego_box.cx, ego_box.cy)

        # collisions, ordered by track id for determinism
        touching = set()
        for agent in sorted(agents, key=lambda a: a.track_id):
            if obb_intersects(ego_box, agent.box):
                touching.add(agent.track_id)
                if agent.track_id not in self._colliding_agents:
                    self._emit(out, collision_kind_for(agent.category), tick, agent.track_id)
        self._colliding_agents = touching

        # off-road dwell
        if point_in_drivable(self._map, ego_pos):
            self._offroad_run = 0
        else:
            self._offroad_run += 1
            if self._offroad_run * 0.1 > self._cfg.offroad_grace_s:
                self._emit(out, InfractionKind.OFF_ROAD, tick, None)

        # red-light: movement segment crosses a stop line while its group is red
        if self._prev_pos is not None and self._prev_pos != ego_pos:
            for group in self._scenario.signals:
                state = signal_states.get(group.group_id)
                if state is not SignalState.RED:
                    continue
                if segments_intersect(self._prev_pos, ego_pos, group.stop_line[0], group.stop_line[1]):
                    self._emit(out, InfractionKind.RED_LIGHT, tick, group.group_id)
        self._prev_pos = ego_pos

        # route deviation (rising edge)
        if abs(lateral_offset) > self._cfg.route_deviation_limit:
            if not self._deviating:
                self._emit(out, InfractionKind.ROUTE_DEVIATION, tick, None)
            self._deviating = True
        else:
            self._deviating = False

        return out
