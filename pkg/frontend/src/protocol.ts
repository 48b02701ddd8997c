/**
 * Wire protocol: UTF-8, one JSON object per newline-terminated line.
 *
 * The client may send exactly `control` or `waypoints` messages; the server
 * sends `hello`, `obs` and `done`.  Validation here mirrors the evaluator's
 * grammar so malformed replies fail locally, before any bytes leave the
 * process.
 */

export const MAX_WAYPOINTS = 20;

export interface ControlReply {
  type: "control";
  steer: number;
  throttle: number;
  brake: number;
}

export interface WaypointsReply {
  type: "waypoints";
  points: [number, number][];
}

export type PolicyReply = ControlReply | WaypointsReply;

export interface HelloMessage {
  type: "hello";
  scenario_id: string;
  tick_hz: number;
  route: [number, number][];
  vehicle: Record<string, number>;
}

export interface AgentView {
  id: string;
  cat: string;
  x: number;
  y: number;
  heading: number;
  l: number;
  w: number;
  speed: number;
}

export interface Observation {
  type: "obs";
  tick: number;
  ego: { x: number; y: number; heading: number; speed: number };
  agents: AgentView[];
  signals: { id: string; state: string }[];
  route_remaining: [number, number][];
}

export interface DoneMessage {
  type: "done";
  result: Record<string, unknown>;
}

export type ServerMessage = HelloMessage | Observation | DoneMessage;

export class ProtocolError extends Error {}

function isFiniteNumber(v: unknown): v is number {
  return typeof v === "number" && Number.isFinite(v);
}

function requireKeys(doc: Record<string, unknown>, keys: string[], where: string): void {
  for (const key of keys) {
    if (!(key in doc)) {
      throw new ProtocolError(`${where}: missing key '${key}'`);
    }
  }
  for (const key of Object.keys(doc)) {
    if (!keys.includes(key)) {
      throw new ProtocolError(`${where}: unknown key '${key}'`);
    }
  }
}

function parseObject(line: string): Record<string, unknown> {
  if (!line.trim()) {
    throw new ProtocolError("empty message line");
  }
  let doc: unknown;
  try {
    doc = JSON.parse(line);
  } catch (err) {
    throw new ProtocolError(`malformed JSON: ${(err as Error).message}`);
  }
  if (typeof doc !== "object" || doc === null || Array.isArray(doc)) {
    throw new ProtocolError("message must be a JSON object");
  }
  return doc as Record<string, unknown>;
}

/** Validate an outgoing reply; throws ProtocolError before anything is sent. */
export function validateReply(reply: PolicyReply): void {
  const doc = reply as unknown as Record<string, unknown>;
  if (reply.type === "control") {
    requireKeys(doc, ["type", "steer", "throttle", "brake"], "control message");
    for (const field of ["steer", "throttle", "brake"] as const) {
      if (!isFiniteNumber(reply[field])) {
        throw new ProtocolError(`control.${field}: must be a finite number`);
      }
    }
    return;
  }
  if (reply.type === "waypoints") {
    requireKeys(doc, ["type", "points"], "waypoints message");
    const points = reply.points;
    if (!Array.isArray(points) || points.length < 1 || points.length > MAX_WAYPOINTS) {
      throw new ProtocolError(
        `waypoints message: points must hold 1..${MAX_WAYPOINTS} [x, y] pairs`,
      );
    }
    points.forEach((p, i) => {
      if (!Array.isArray(p) || p.length !== 2 || !isFiniteNumber(p[0]) || !isFiniteNumber(p[1])) {
        throw new ProtocolError(`waypoints message: points[${i}] must be [x, y]`);
      }
    });
    return;
  }
  throw new ProtocolError(
    `unknown message type '${(reply as { type?: unknown }).type}' (client may send control/waypoints)`,
  );
}

/** Validate one raw client line (used against the shared fixture corpus). */
export function validateClientLine(line: string): PolicyReply {
  const doc = parseObject(line);
  const reply = doc as unknown as PolicyReply;
  validateReply(reply);
  return reply;
}

/** Parse and validate one line coming from the server. */
export function parseServerMessage(line: string): ServerMessage {
  const doc = parseObject(line);
  const type = doc.type;
  if (type === "hello") {
    requireKeys(doc, ["type", "scenario_id", "tick_hz", "route", "vehicle"], "hello message");
    if (typeof doc.scenario_id !== "string") {
      throw new ProtocolError("hello.scenario_id: must be a string");
    }
    if (!isFiniteNumber(doc.tick_hz)) {
      throw new ProtocolError("hello.tick_hz: must be a number");
    }
    if (!Array.isArray(doc.route)) {
      throw new ProtocolError("hello.route: must be an array of [x, y]");
    }
    if (typeof doc.vehicle !== "object" || doc.vehicle === null) {
      throw new ProtocolError("hello.vehicle: must be an object");
    }
    return doc as unknown as HelloMessage;
  }
  if (type === "obs") {
    requireKeys(
      doc,
      ["type", "tick", "ego", "agents", "signals", "route_remaining"],
      "obs message",
    );
    if (!isFiniteNumber(doc.tick)) {
      throw new ProtocolError("obs.tick: must be a number");
    }
    const ego = doc.ego as Record<string, unknown> | null;
    if (typeof ego !== "object" || ego === null) {
      throw new ProtocolError("obs.ego: must be an object");
    }
    for (const field of ["x", "y", "heading", "speed"]) {
      if (!isFiniteNumber(ego[field])) {
        throw new ProtocolError(`obs.ego.${field}: must be a finite number`);
      }
    }
    if (!Array.isArray(doc.route_remaining)) {
      throw new ProtocolError("obs.route_remaining: must be an array");
    }
    return doc as unknown as Observation;
  }
  if (type === "done") {
    requireKeys(doc, ["type", "result"], "done message");
    if (typeof doc.result !== "object" || doc.result === null) {
      throw new ProtocolError("done.result: must be an object");
    }
    return doc as unknown as DoneMessage;
  }
  throw new ProtocolError(`unknown server message type '${String(type)}'`);
}

export function encodeReply(reply: PolicyReply): string {
  validateReply(reply);
  return JSON.stringify(reply) + "\n";
}
