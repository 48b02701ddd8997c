import { readFileSync } from "fs";
import { join } from "path";
import { describe, expect, it } from "vitest";

import {
  ProtocolError,
  encodeReply,
  parseServerMessage,
  validateClientLine,
  validateReply,
} from "../src/protocol";

interface FixtureLine {
  line: string;
  valid: boolean;
  note?: string;
}

const corpus = JSON.parse(
  readFileSync(join(__dirname, "..", "fixtures", "protocol-messages.json"), "utf-8"),
) as { client_to_server: FixtureLine[]; server_to_client: FixtureLine[] };

describe("shared fixture corpus", () => {
  it("judges every client line like the evaluator does", () => {
    for (const { line, valid, note } of corpus.client_to_server) {
      const label = note ?? line;
      if (valid) {
        expect(() => validateClientLine(line), label).not.toThrow();
      } else {
        expect(() => validateClientLine(line), label).toThrow(ProtocolError);
      }
    }
  });

  it("parses every server line per the wire grammar", () => {
    for (const { line, valid, note } of corpus.server_to_client) {
      const label = note ?? line;
      if (valid) {
        expect(() => parseServerMessage(line), label).not.toThrow();
      } else {
        expect(() => parseServerMessage(line), label).toThrow(ProtocolError);
      }
    }
  });
});

describe("reply validation", () => {
  it("rejects malformed replies before any bytes are sent", () => {
    expect(() =>
      validateReply({ type: "waypoints", points: [] } as never),
    ).toThrow(ProtocolError);
    expect(() =>
      validateReply({ type: "control", steer: Number.NaN, throttle: 0, brake: 0 }),
    ).toThrow(ProtocolError);
  });

  it("encodes valid replies as one newline-terminated line", () => {
    const wire = encodeReply({ type: "control", steer: 0.25, throttle: 0.5, brake: 0 });
    expect(wire.endsWith("\n")).toBe(true);
    expect(JSON.parse(wire)).toEqual({ type: "control", steer: 0.25, throttle: 0.5, brake: 0 });
  });

  it("round-trips float precision exactly", () => {
    const x = 0.1 + 0.2; // 0.30000000000000004
    const wire = encodeReply({ type: "waypoints", points: [[x, -x]] });
    const back = JSON.parse(wire) as { points: [number, number][] };
    expect(back.points[0][0]).toBe(x);
    expect(back.points[0][1]).toBe(-x);
  });
});
