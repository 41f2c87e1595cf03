import express, { type Express, type NextFunction, type Request, type Response } from "express";

import { GoldIndex } from "./goldIndex.js";
import type { GeneratorFn } from "./model.js";
import { parseGenerateRequest, type ServerConfig, validateConfig } from "./types.js";

/**
 * Build the express app implementing the wire protocol:
 *   POST /v1/generate {"task","inputs","max_new_tokens"} -> {"outputs"}
 *   GET  /v1/health -> {"status":"ok","model":...}
 * Echo returns inputs verbatim; gold replay answers from the sample index
 * with "" on miss; model mode delegates to a lazily loaded generator.
 */
export function buildApp(cfg: ServerConfig, generator?: GeneratorFn): Express {
  const invalid = validateConfig(cfg);
  if (invalid) {
    throw new Error(invalid);
  }
  const gold = cfg.mode === "gold" ? GoldIndex.fromFiles(cfg.goldPaths) : undefined;
  const modelName =
    cfg.mode === "echo" ? "echo" : cfg.mode === "gold" ? "gold-replay" : cfg.modelId!;

  const app = express();
  app.use(express.json({ limit: "16mb" }));

  // malformed JSON bodies are a client error, not a crash
  app.use((err: unknown, _req: Request, res: Response, next: NextFunction) => {
    if (err instanceof SyntaxError) {
      res.status(400).json({ error: `malformed JSON body: ${err.message}` });
      return;
    }
    next(err);
  });

  app.get("/v1/health", (_req, res) => {
    res.json({ status: "ok", model: modelName });
  });

  app.post("/v1/generate", async (req, res) => {
    const parsed = parseGenerateRequest(req.body);
    if (typeof parsed === "string") {
      res.status(400).json({ error: parsed });
      return;
    }
    try {
      let outputs: string[];
      if (cfg.mode === "echo") {
        outputs = [...parsed.inputs];
      } else if (cfg.mode === "gold") {
        outputs = parsed.inputs.map((input) => gold!.lookup(parsed.task, input));
      } else {
        outputs = await generator!(parsed.inputs, parsed.max_new_tokens);
      }
      res.json({ outputs });
    } catch (err) {
      res.status(500).json({ error: String(err) });
    }
  });

  return app;
}
