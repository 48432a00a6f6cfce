#!/usr/bin/env node
/** Export per-token embeddings for candidate/reference notes as EMB-JSONL. */

import { pathToFileURL } from "node:url";
import yargs from "yargs";
import { hideBin } from "yargs/helpers";
import { DEFAULT_ENCODER_ID, EncoderUnavailableError, availableEncoders, loadEncoder } from "./encoder.js";
import { InputFormatError, exportEmbeddings } from "./embjsonl.js";

export async function main(argv: string[]): Promise<number> {
  const args = await yargs(argv)
    .scriptName("embed-export")
    .option("candidates", {
      type: "string",
      demandOption: true,
      describe: 'candidate notes, JSONL of {"id", "text"}',
    })
    .option("references", {
      type: "string",
      demandOption: true,
      describe: 'reference notes, JSONL of {"id", "text"}',
    })
    .option("encoder", {
      type: "string",
      default: DEFAULT_ENCODER_ID,
      describe: `encoder id (${availableEncoders().join(", ")})`,
    })
    .option("out", { type: "string", demandOption: true, describe: "EMB-JSONL output path" })
    .strict()
    .help()
    .parseAsync();

  try {
    const encoder = loadEncoder(args.encoder);
    const count = exportEmbeddings(args.candidates, args.references, encoder, args.out);
    process.stderr.write(`wrote ${count} record(s) with encoder ${encoder.id} to ${args.out}\n`);
    return 0;
  } catch (err) {
    if (err instanceof EncoderUnavailableError) {
      process.stderr.write(`embed-export: environment error: ${err.message}\n`);
      return 3;
    }
    if (err instanceof InputFormatError || (err as NodeJS.ErrnoException).code !== undefined) {
      process.stderr.write(`embed-export: error: ${(err as Error).message}\n`);
      return 1;
    }
    throw err;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined && import.meta.url === pathToFileURL(process.argv[1]).href;

if (invokedDirectly) {
  main(hideBin(process.argv)).then((code) => {
    process.exitCode = code;
  });
}
