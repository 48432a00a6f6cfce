import { describe, expect, it } from "vitest";
import {
  DEFAULT_ENCODER_ID,
  EncoderUnavailableError,
  availableEncoders,
  loadEncoder,
} from "../src/encoder.js";

describe("encoder registry", () => {
  it("loads the default encoder", () => {
    const encoder = loadEncoder(DEFAULT_ENCODER_ID);
    expect(encoder.id).toBe("hash-ctx-64");
    expect(encoder.dim).toBe(64);
  });

  it("lists available encoders", () => {
    expect(availableEncoders()).toContain("hash-ctx-64");
  });

  it("raises an environment error for unknown encoders", () => {
    expect(() => loadEncoder("bert-base-nowhere")).toThrow(EncoderUnavailableError);
  });
});

describe("tokenizer", () => {
  const encoder = loadEncoder("hash-ctx-16");

  it("lowercases and splits on whitespace", () => {
    expect(encoder.tokenize("Back  PAIN resolved\n")).toEqual(["back", "pain", "resolved"]);
  });

  it("returns no tokens for blank text", () => {
    expect(encoder.tokenize("   \n\t ")).toEqual([]);
  });
});

describe("embeddings", () => {
  const encoder = loadEncoder("hash-ctx-16");

  it("produces one vector of the right dimension per token", () => {
    const vectors = encoder.embed(["back", "pain"]);
    expect(vectors).toHaveLength(2);
    for (const vector of vectors) {
      expect(vector).toHaveLength(16);
    }
  });

  it("is deterministic across calls", () => {
    const once = encoder.embed(["back", "pain", "resolved"]);
    const twice = encoder.embed(["back", "pain", "resolved"]);
    expect(twice).toEqual(once);
  });

  it("never emits zero or non-finite vectors", () => {
    const vectors = encoder.embed(["a", "b", "c", "a", "zzz"]);
    for (const vector of vectors) {
      const norm = Math.sqrt(vector.reduce((acc, v) => acc + v * v, 0));
      expect(norm).toBeGreaterThan(0.5);
      for (const v of vector) {
        expect(Number.isFinite(v)).toBe(true);
      }
    }
  });

  it("is contextual: the same token embeds differently near different neighbors", () => {
    const [inPainContext] = encoder.embed(["back", "pain"]);
    const [inRubContext] = encoder.embed(["back", "rub"]);
    expect(inPainContext).not.toEqual(inRubContext);
  });

  it("embeds a lone token as its unit base vector", () => {
    const [vector] = encoder.embed(["back"]);
    const norm = Math.sqrt(vector.reduce((acc, v) => acc + v * v, 0));
    expect(Math.abs(norm - 1)).toBeLessThan(1e-9);
  });
});
