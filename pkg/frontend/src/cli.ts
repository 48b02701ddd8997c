/**
 * Runnable follower client: reconnects for every episode the evaluator
 * serves and drives each one with the reference route follower.
 *
 *   node dist/cli.js --host 127.0.0.1 --port 8808 [--episodes 42]
 *
 * Exits once the expected number of episodes finished, or after the
 * connection has been refused repeatedly (the evaluator is done).
 */
import { connect } from "./client";
import { routeFollower } from "./follower";

interface Args {
  host: string;
  port: number;
  episodes: number;
  maxRefusals: number;
}

function parseArgs(argv: string[]): Args {
  const args: Args = { host: "127.0.0.1", port: 0, episodes: Infinity, maxRefusals: 100 };
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    const value = argv[i + 1];
    if (key === "--host") args.host = value;
    else if (key === "--port") args.port = Number(value);
    else if (key === "--episodes") args.episodes = Number(value);
    else if (key === "--max-refusals") args.maxRefusals = Number(value);
    else throw new Error(`unknown argument ${key}`);
  }
  if (!args.port) throw new Error("--port is required");
  return args;
}

const sleep = (ms: number) => new Promise((resolve) => setTimeout(resolve, ms));

async function main(): Promise<void> {
  const args = parseArgs(process.argv.slice(2));
  let finished = 0;
  let refusals = 0;
  while (finished < args.episodes && refusals < args.maxRefusals) {
    try {
      const session = await connect({ host: args.host, port: args.port });
      const result = await session.runPolicy(routeFollower);
      finished += 1;
      refusals = 0;
      console.log(
        `episode ${finished}: ${session.scenarioId} -> ` +
          `${String(result.termination)} rc=${Number(result.rc).toFixed(3)}`,
      );
    } catch (err) {
      const code = (err as NodeJS.ErrnoException).code;
      if (code === "ECONNREFUSED" || code === "ECONNRESET") {
        refusals += 1;
        await sleep(50);
        continue;
      }
      throw err;
    }
  }
  console.log(`done: ${finished} episodes`);
}

main().catch((err) => {
  console.error(err);
  process.exit(1);
});
