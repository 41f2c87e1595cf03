/**
 * Best-effort adapter around a local text-generation pipeline.
 *
 * Loaded lazily so the server has no hard dependency on the (large)
 * transformers runtime; echo and gold modes never touch this file. Greedy
 * decoding by default, matching evaluation needs.
 */

export interface GeneratorFn {
  (inputs: string[], maxNewTokens: number): Promise<string[]>;
}

export async function loadModelGenerator(modelId: string): Promise<GeneratorFn> {
  let transformers: any;
  try {
    transformers = await import("@huggingface/transformers" as string);
  } catch {
    try {
      transformers = await import("@xenova/transformers" as string);
    } catch {
      throw new Error(
        "model mode needs the '@huggingface/transformers' (or '@xenova/transformers') " +
          "package; install it or use --mode echo|gold",
      );
    }
  }
  const pipe = await transformers.pipeline("text-generation", modelId);
  return async (inputs: string[], maxNewTokens: number): Promise<string[]> => {
    const outputs: string[] = [];
    for (const input of inputs) {
      const result = await pipe(input, {
        max_new_tokens: maxNewTokens,
        do_sample: false,
        return_full_text: false,
      });
      outputs.push(String(result[0]?.generated_text ?? ""));
    }
    return outputs;
  };
}
