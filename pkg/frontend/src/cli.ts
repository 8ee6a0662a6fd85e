/**
 * CLI entry: `serve` starts the protocol server, `extract-fid` encodes an
 * image directory into a feature-matrix file.
 */

import { loadBackend, readConfig } from "./backend.js";
import { extractFidFeatures } from "./fid.js";
import { createServer, listen } from "./server.js";

function parseFlags(argv: string[]): Map<string, string> {
  const flags = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    if (!key.startsWith("--") || i + 1 >= argv.length) {
      throw new Error(`bad arguments near '${key}'`);
    }
    flags.set(key.slice(2), argv[i + 1]);
  }
  return flags;
}

async function main(): Promise<void> {
  const [command, ...rest] = process.argv.slice(2);
  const flags = parseFlags(rest);
  const config = readConfig(flags.get("config"));

  if (command === "serve") {
    const host = flags.get("host") ?? "127.0.0.1";
    const port = Number(flags.get("port") ?? "8090");
    const server = createServer(loadBackend(config));
    const bound = await listen(server, port, host);
    console.log(JSON.stringify({ serving: `http://${host}:${bound}` }));
    return;
  }
  if (command === "extract-fid") {
    const dir = flags.get("dir");
    const out = flags.get("out");
    if (!dir || !out) {
      throw new Error("extract-fid requires --dir and --out");
    }
    const backend = await loadBackend(config);
    const result = await extractFidFeatures(dir, out, backend);
    console.log(JSON.stringify({ out, ...result }));
    return;
  }
  throw new Error(`unknown command '${command ?? ""}'; use serve or extract-fid`);
}

main().catch((err) => {
  console.error(JSON.stringify({ error: err.code ?? "Error", message: err.message }));
  process.exit(1);
});
