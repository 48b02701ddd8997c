/**
 * Reference policy callback: follow the remaining route.
 *
 * Echoing the observation's route_remaining (capped at the protocol's
 * waypoint limit) reproduces the evaluator's built-in route follower
 * exactly, because waypoint translation happens server-side either way.
 */
import { Observation, MAX_WAYPOINTS, WaypointsReply } from "./protocol";

export function routeFollower(obs: Observation): WaypointsReply {
  const points = obs.route_remaining.slice(0, MAX_WAYPOINTS);
  return { type: "waypoints", points };
}
