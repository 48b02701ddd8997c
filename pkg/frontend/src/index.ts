export { ClientSession, ConnectOptions, PolicyCallback, connect } from "./client";
export { routeFollower } from "./follower";
export {
  AgentView,
  ControlReply,
  DoneMessage,
  HelloMessage,
  MAX_WAYPOINTS,
  Observation,
  PolicyReply,
  ProtocolError,
  ServerMessage,
  WaypointsReply,
  encodeReply,
  parseServerMessage,
  validateClientLine,
  validateReply,
} from "./protocol";
