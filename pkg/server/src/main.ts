import { parseArgs } from "node:util";

import { buildApp } from "./app.js";
import { loadModelGenerator } from "./model.js";
import type { ServerConfig, ServerMode } from "./types.js";

function usage(): never {
  console.error(
    "usage: dialog-backend --mode echo|gold|model [--gold samples.jsonl]... " +
      "[--model <model-id>] [--port 8490]",
  );
  process.exit(2);
}

async function main(): Promise<void> {
  const { values } = parseArgs({
    options: {
      mode: { type: "string", default: "echo" },
      gold: { type: "string", multiple: true },
      model: { type: "string" },
      port: { type: "string", default: "8490" },
    },
  });

  const mode = values.mode as string;
  if (!["echo", "gold", "model"].includes(mode)) {
    usage();
  }
  const cfg: ServerConfig = {
    mode: mode as ServerMode,
    goldPaths: (values.gold as string[] | undefined) ?? [],
    modelId: values.model as string | undefined,
    port: Number.parseInt(values.port as string, 10),
  };
  if (Number.isNaN(cfg.port)) {
    usage();
  }

  const generator = cfg.mode === "model" ? await loadModelGenerator(cfg.modelId!) : undefined;
  const app = buildApp(cfg, generator);
  const server = app.listen(cfg.port, () => {
    const address = server.address();
    const port = typeof address === "object" && address ? address.port : cfg.port;
    console.log(`dialog-backend (${cfg.mode}) listening on :${port}`);
  });
}

main().catch((err) => {
  console.error(String(err));
  process.exit(1);
});
