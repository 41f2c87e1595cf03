export type ServerMode = "echo" | "gold" | "model";

export interface ServerConfig {
  mode: ServerMode;
  /** TaskSample JSONL file(s); required in gold mode. */
  goldPaths: string[];
  /** Hugging Face-style model id; required in model mode. */
  modelId?: string;
  port: number;
}

export const WIRE_TASKS = ["nlu", "dpl", "nlg"] as const;
export type WireTask = (typeof WIRE_TASKS)[number];

export interface GenerateRequest {
  task: WireTask;
  inputs: string[];
  max_new_tokens: number;
}

/** Narrow an unknown request body to the wire contract, or explain why not. */
export function parseGenerateRequest(body: unknown): GenerateRequest | string {
  if (typeof body !== "object" || body === null || Array.isArray(body)) {
    return "request body must be a JSON object";
  }
  const record = body as Record<string, unknown>;
  const task = record["task"];
  if (typeof task !== "string" || !(WIRE_TASKS as readonly string[]).includes(task)) {
    return `"task" must be one of ${WIRE_TASKS.join("|")}`;
  }
  const inputs = record["inputs"];
  if (!Array.isArray(inputs) || inputs.some((x) => typeof x !== "string")) {
    return '"inputs" must be an array of strings';
  }
  const maxNewTokens = record["max_new_tokens"];
  if (typeof maxNewTokens !== "number" || !Number.isInteger(maxNewTokens) || maxNewTokens < 1) {
    return '"max_new_tokens" must be a positive integer';
  }
  return { task: task as WireTask, inputs: inputs as string[], max_new_tokens: maxNewTokens };
}

export function validateConfig(cfg: ServerConfig): string | null {
  if (cfg.mode === "gold" && cfg.goldPaths.length === 0) {
    return "gold mode requires --gold <samples.jsonl>";
  }
  if (cfg.mode === "model" && !cfg.modelId) {
    return "model mode requires --model <model-id>";
  }
  return null;
}
