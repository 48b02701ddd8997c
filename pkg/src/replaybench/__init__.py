"""Closed-loop log-replay benchmark for driving policies at intersections.

Replays recorded traffic around a policy-controlled ego vehicle, detects
infractions, and reports success rate, driving score and open-loop L2.
"""

from .bridge import BridgePolicyServer, serve_bridge_policy
from .config import DEFAULT_PENALTIES, EvalConfig, VehicleParams
from .errors import (
    InvariantError,
    ParseError,
    PolicyFault,
    ProtocolError,
    ReplayBenchError,
)
from .geometry import (
    OrientedBox,
    normalize_angle,
    obb_distance,
    obb_intersects,
    point_in_polygon,
    project_onto_polyline,
    ray_first_hit,
    signed_side,
)
from .hdmap import HDMapModel, Lane, StopLine, intersection_hull, load_map, point_in_drivable, serialize_map
from .infractions import Infraction, InfractionKind, InfractionMonitor
from .metrics import (
    BenchmarkSummary,
    EpisodeResult,
    L2Report,
    driving_score,
    open_loop_l2,
    route_completion,
    success_rate,
    summarize,
)
from .policies import (
    ConstantVelocityPolicy,
    ExpertReplayPolicy,
    PidFollowerPolicy,
    builtin_constant_velocity,
    builtin_expert_replay,
    builtin_pid_follower,
    make_policy,
)
from .scenario import (
    AgentCategory,
    AgentTrack,
    BehaviorLabel,
    EgoAssignment,
    Pose2,
    Scenario,
    SignalGroup,
    SignalState,
    TrackSample,
    load_scenario,
    sample_track_pose,
    scenario_stats,
    serialize_scenario,
    signal_state_at,
    validate_scenario,
)
from .simulation import (
    ControlCommand,
    EgoState,
    EpisodeTrace,
    Observation,
    WaypointController,
    WaypointPlan,
    integrate_ego,
    run_episode,
    waypoints_to_control,
)

__version__ = "0.1.0"
