/**
 * Lockstep bridge client: connect, read hello, answer every observation
 * with exactly one reply, return the final result from the done message.
 */
import * as net from "net";

import {
  DoneMessage,
  HelloMessage,
  Observation,
  PolicyReply,
  ProtocolError,
  encodeReply,
  parseServerMessage,
} from "./protocol";

export type PolicyCallback = (obs: Observation) => PolicyReply;

class LineReader {
  private buffer = "";
  private lines: string[] = [];
  private resolvers: ((line: string | null) => void)[] = [];
  private ended = false;

  constructor(socket: net.Socket) {
    socket.setEncoding("utf-8");
    socket.on("data", (chunk: string) => {
      this.buffer += chunk;
      let idx;
      while ((idx = this.buffer.indexOf("\n")) >= 0) {
        this.push(this.buffer.slice(0, idx));
        this.buffer = this.buffer.slice(idx + 1);
      }
    });
    const finish = () => {
      this.ended = true;
      while (this.resolvers.length) {
        this.resolvers.shift()!(null);
      }
    };
    socket.on("end", finish);
    socket.on("close", finish);
    socket.on("error", finish);
  }

  private push(line: string): void {
    const resolver = this.resolvers.shift();
    if (resolver) {
      resolver(line);
    } else {
      this.lines.push(line);
    }
  }

  next(): Promise<string | null> {
    if (this.lines.length) {
      return Promise.resolve(this.lines.shift()!);
    }
    if (this.ended) {
      return Promise.resolve(null);
    }
    return new Promise((resolve) => this.resolvers.push(resolve));
  }
}

export class ClientSession {
  readonly hello: HelloMessage;
  /** ticks observed so far; the lockstep mirror of the server's counter */
  tick = 0;
  private inFlight = false;

  constructor(
    private readonly socket: net.Socket,
    private readonly reader: LineReader,
    hello: HelloMessage,
  ) {
    this.hello = hello;
  }

  get scenarioId(): string {
    return this.hello.scenario_id;
  }

  get tickHz(): number {
    return this.hello.tick_hz;
  }

  /** Loop observations through the callback until the done message. */
  async runPolicy(callback: PolicyCallback): Promise<DoneMessage["result"]> {
    try {
      for (;;) {
        const line = await this.reader.next();
        if (line === null) {
          throw new ProtocolError("server disconnected before done");
        }
        const msg = parseServerMessage(line);
        if (msg.type === "done") {
          return msg.result;
        }
        if (msg.type !== "obs") {
          throw new ProtocolError(`unexpected mid-episode message '${msg.type}'`);
        }
        if (this.inFlight) {
          throw new ProtocolError("previous observation still unanswered");
        }
        this.inFlight = true;
        this.tick = msg.tick;
        const reply = callback(msg);
        // validation happens locally, before any bytes are written
        this.socket.write(encodeReply(reply));
        this.inFlight = false;
      }
    } finally {
      this.close();
    }
  }

  close(): void {
    this.socket.destroy();
  }
}

export interface ConnectOptions {
  host: string;
  port: number;
  timeoutMs?: number;
}

/** Connect to a serving evaluator and consume the hello message. */
export function connect(options: ConnectOptions): Promise<ClientSession> {
  const timeoutMs = options.timeoutMs ?? 10_000;
  return new Promise((resolve, reject) => {
    const socket = net.createConnection({ host: options.host, port: options.port });
    const timer = setTimeout(() => {
      socket.destroy();
      reject(new ProtocolError("timed out waiting for hello"));
    }, timeoutMs);
    socket.once("error", (err) => {
      clearTimeout(timer);
      reject(err);
    });
    socket.once("connect", () => {
      const reader = new LineReader(socket);
      reader.next().then((line) => {
        clearTimeout(timer);
        if (line === null) {
          socket.destroy();
          reject(new ProtocolError("connection closed before hello"));
          return;
        }
        try {
          const hello = parseServerMessage(line);
          if (hello.type !== "hello") {
            throw new ProtocolError(`expected hello, got '${hello.type}'`);
          }
          resolve(new ClientSession(socket, reader, hello));
        } catch (err) {
          socket.destroy();
          reject(err);
        }
      });
    });
  });
}
