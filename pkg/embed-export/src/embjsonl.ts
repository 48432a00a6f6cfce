/**
 * EMB-JSONL writing and score-input reading.
 *
 * EMB-JSONL: line 1 is {"encoder": string, "dim": int}; every further line is
 * {"id", "side": "candidate"|"reference", "tokens": [string], "vectors":
 * [[number]]}, one JSON object per line, UTF-8. Empty-text records carry one
 * pad token and "empty": true.
 */

import * as fs from "node:fs";
import { Encoder, PAD_TOKEN } from "./encoder.js";

export type Side = "candidate" | "reference";

export interface ScoreInput {
  id: string;
  text: string;
}

export interface EmbRecord {
  id: string;
  side: Side;
  tokens: string[];
  vectors: number[][];
  empty?: boolean;
}

export class InputFormatError extends Error {}

export function readScoreInputs(path: string): ScoreInput[] {
  const inputs: ScoreInput[] = [];
  const seen = new Set<string>();
  const lines = fs.readFileSync(path, "utf8").split("\n");
  lines.forEach((line, index) => {
    if (line.trim().length === 0) return;
    let parsed: unknown;
    try {
      parsed = JSON.parse(line);
    } catch (err) {
      throw new InputFormatError(`${path}: line ${index + 1}: malformed JSON (${(err as Error).message})`);
    }
    if (typeof parsed !== "object" || parsed === null) {
      throw new InputFormatError(`${path}: line ${index + 1}: expected a JSON object`);
    }
    const { id, text } = parsed as Record<string, unknown>;
    if (typeof id !== "string" || id.length === 0) {
      throw new InputFormatError(`${path}: line ${index + 1}: missing or empty "id"`);
    }
    if (typeof text !== "string") {
      throw new InputFormatError(`${path}: line ${index + 1}: missing "text"`);
    }
    if (seen.has(id)) {
      throw new InputFormatError(`${path}: line ${index + 1}: duplicate id ${JSON.stringify(id)}`);
    }
    seen.add(id);
    inputs.push({ id, text });
  });
  return inputs;
}

export function encodeRecord(encoder: Encoder, id: string, side: Side, text: string): EmbRecord {
  const tokens = encoder.tokenize(text);
  if (tokens.length === 0) {
    return {
      id,
      side,
      tokens: [PAD_TOKEN],
      vectors: encoder.embed([PAD_TOKEN]),
      empty: true,
    };
  }
  return { id, side, tokens, vectors: encoder.embed(tokens) };
}

function recordLine(record: EmbRecord): string {
  const payload: Record<string, unknown> = {
    id: record.id,
    side: record.side,
    tokens: record.tokens,
    vectors: record.vectors,
  };
  if (record.empty) payload.empty = true;
  return JSON.stringify(payload);
}

export function writeEmbJsonl(path: string, encoder: Encoder, records: EmbRecord[]): number {
  const lines = [JSON.stringify({ encoder: encoder.id, dim: encoder.dim })];
  for (const record of records) {
    lines.push(recordLine(record));
  }
  // temp-then-rename so a failed run leaves no partial file
  const tmp = `${path}.tmp-${process.pid}`;
  fs.writeFileSync(tmp, lines.join("\n") + "\n", "utf8");
  fs.renameSync(tmp, path);
  return records.length;
}

export function exportEmbeddings(
  candidatesPath: string,
  referencesPath: string,
  encoder: Encoder,
  outPath: string,
): number {
  const candidates = readScoreInputs(candidatesPath);
  const references = readScoreInputs(referencesPath);
  const records: EmbRecord[] = [
    ...candidates.map((c) => encodeRecord(encoder, c.id, "candidate", c.text)),
    ...references.map((r) => encodeRecord(encoder, r.id, "reference", r.text)),
  ];
  return writeEmbJsonl(outPath, encoder, records);
}
