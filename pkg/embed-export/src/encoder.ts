/**
 * Deterministic local encoders.
 *
 * No pretrained model is downloaded: each token gets a seeded
 * hash-projection base vector, and a small neighbor window mixes context in
 * so identical tokens in different surroundings embed differently. The
 * encoder id fixes salt, dimension and mixing weights, so re-running on the
 * same input yields byte-identical vectors.
 */

export interface Encoder {
  id: string;
  dim: number;
  tokenize(text: string): string[];
  embed(tokens: string[]): number[][];
}

export const PAD_TOKEN = "<pad>";

function fnv1a(input: string): number {
  let hash = 0x811c9dc5;
  for (const byte of Buffer.from(input, "utf8")) {
    hash ^= byte;
    hash = Math.imul(hash, 0x01000193) >>> 0;
  }
  return hash >>> 0;
}

/** mulberry32: tiny seeded PRNG, uniform on [0, 1). */
function rng(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function normalize(vector: number[]): number[] {
  const norm = Math.sqrt(vector.reduce((acc, v) => acc + v * v, 0));
  if (norm < 1e-9) {
    const unit = new Array<number>(vector.length).fill(0);
    unit[0] = 1;
    return unit;
  }
  return vector.map((v) => v / norm);
}

function baseVector(salt: string, token: string, dim: number): number[] {
  // retry with a bumped seed on the (theoretical) near-zero draw
  for (let attempt = 0; ; attempt++) {
    const next = rng(fnv1a(`${salt}:${attempt}:${token}`));
    const vector = Array.from({ length: dim }, () => next() * 2 - 1);
    const norm = Math.sqrt(vector.reduce((acc, v) => acc + v * v, 0));
    if (norm > 1e-6) {
      return vector.map((v) => v / norm);
    }
  }
}

function whitespaceLower(text: string): string[] {
  return text.toLowerCase().split(/\s+/u).filter((t) => t.length > 0);
}

class HashContextEncoder implements Encoder {
  constructor(
    public readonly id: string,
    public readonly dim: number,
    private readonly weights: { prev: number; self: number; next: number },
  ) {}

  tokenize(text: string): string[] {
    return whitespaceLower(text);
  }

  embed(tokens: string[]): number[][] {
    const bases = tokens.map((t) => baseVector(this.id, t, this.dim));
    const { prev, self, next } = this.weights;
    return bases.map((base, i) => {
      const mixed = base.map((v, d) => {
        let acc = self * v;
        if (i > 0) acc += prev * bases[i - 1][d];
        if (i + 1 < bases.length) acc += next * bases[i + 1][d];
        return acc;
      });
      return normalize(mixed);
    });
  }
}

const REGISTRY: ReadonlyMap<string, () => Encoder> = new Map([
  ["hash-ctx-64", () => new HashContextEncoder("hash-ctx-64", 64, { prev: 0.25, self: 0.6, next: 0.15 })],
  ["hash-ctx-16", () => new HashContextEncoder("hash-ctx-16", 16, { prev: 0.25, self: 0.6, next: 0.15 })],
]);

export const DEFAULT_ENCODER_ID = "hash-ctx-64";

export class EncoderUnavailableError extends Error {}

export function availableEncoders(): string[] {
  return [...REGISTRY.keys()];
}

export function loadEncoder(encoderId: string): Encoder {
  const factory = REGISTRY.get(encoderId);
  if (!factory) {
    throw new EncoderUnavailableError(
      `encoder ${JSON.stringify(encoderId)} is not available locally; known encoders: ${availableEncoders().join(", ")}`,
    );
  }
  return factory();
}
