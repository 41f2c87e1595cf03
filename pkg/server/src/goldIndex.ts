import { readFileSync } from "node:fs";

/** Separator that cannot occur inside a serialized task or input. */
const KEY_SEP = "";

export class GoldIndex {
  private index = new Map<string, string>();

  static fromFiles(paths: string[]): GoldIndex {
    const gold = new GoldIndex();
    for (const path of paths) {
      const text = readFileSync(path, "utf-8");
      let lineNo = 0;
      for (const line of text.split("\n")) {
        lineNo += 1;
        if (!line.trim()) continue;
        let record: unknown;
        try {
          record = JSON.parse(line);
        } catch (err) {
          throw new Error(`${path}:${lineNo}: invalid JSON (${(err as Error).message})`);
        }
        const { task, input, target } = record as {
          task?: unknown;
          input?: unknown;
          target?: unknown;
        };
        if (typeof task !== "string" || typeof input !== "string" || typeof target !== "string") {
          throw new Error(`${path}:${lineNo}: expected task/input/target strings`);
        }
        gold.index.set(task.toLowerCase() + KEY_SEP + input, target);
      }
    }
    return gold;
  }

  /** Gold target for (task, input); empty string on miss per the contract. */
  lookup(task: string, input: string): string {
    return this.index.get(task.toLowerCase() + KEY_SEP + input) ?? "";
  }

  get size(): number {
    return this.index.size;
  }
}
