#!/usr/bin/env node
/**
 * Adapter CLI: extract / embed / reason.
 *
 * Writes .rtn tensors the chartattrib engine consumes. Exit codes
 * mirror the engine: 1 I/O, 2 contract/geometry, 3 environment (model
 * not available here).
 */

import yargs, { type Argv } from "yargs";
import { hideBin } from "yargs/helpers";

import { DEFAULT_CONFIG, type ExtractionConfig, type TextPooling } from "./config.js";
import { ContractError, EnvironmentError } from "./errors.js";
import { embedText, extractGrid, generateReasoning } from "./extract.js";

function modelFlags<T>(y: Argv<T>) {
  return y
    .option("model", { type: "string", default: DEFAULT_CONFIG.model })
    .option("layer", { type: "number", default: DEFAULT_CONFIG.layer })
    .option("grid-side", { type: "number", default: DEFAULT_CONFIG.gridSide })
    .option("dim", { type: "number", default: DEFAULT_CONFIG.dim })
    .option("pooling", {
      choices: ["mean", "last-token"] as const,
      default: DEFAULT_CONFIG.textPooling as TextPooling,
    });
}

function overrides(argv: {
  model: string;
  layer: number;
  "grid-side": number;
  dim: number;
  pooling: TextPooling;
}): Partial<ExtractionConfig> {
  return {
    model: argv.model,
    layer: argv.layer,
    gridSide: argv["grid-side"],
    dim: argv.dim,
    textPooling: argv.pooling,
  };
}

async function run(): Promise<number> {
  const parser = yargs(hideBin(process.argv))
    .scriptName("chartattrib-adapter")
    .strict()
    .demandCommand(1)
    .command(
      "extract",
      "write a chart's patch-grid tensor",
      (y) =>
        modelFlags(y)
          .option("chart", { type: "string", demandOption: true })
          .option("out", { type: "string", demandOption: true }),
      async (argv) => {
        const res = await extractGrid(argv.chart, argv.out, overrides(argv));
        console.log(JSON.stringify({ out: argv.out, dims: res.dims, bytes: res.bytes }));
      }
    )
    .command(
      "embed",
      "write a text span's query tensor",
      (y) =>
        modelFlags(y)
          .option("text", { type: "string", demandOption: true })
          .option("out", { type: "string", demandOption: true }),
      async (argv) => {
        const res = await embedText(argv.text, argv.out, overrides(argv));
        console.log(JSON.stringify({ out: argv.out, dims: res.dims, bytes: res.bytes }));
      }
    )
    .command(
      "reason",
      "generate step-by-step reasoning for a chart QA pair",
      (y) =>
        modelFlags(y)
          .option("chart", { type: "string", demandOption: true })
          .option("question", { type: "string", demandOption: true })
          .option("answer", { type: "string", demandOption: true }),
      async (argv) => {
        const steps = await generateReasoning(
          argv.chart,
          argv.question,
          argv.answer,
          overrides(argv)
        );
        console.log(JSON.stringify({ steps }));
      }
    );
  await parser.parseAsync();
  return 0;
}

run()
  .then((code) => process.exit(code))
  .catch((err) => {
    console.error(`chartattrib-adapter: ${err.message ?? err}`);
    if (err instanceof EnvironmentError) process.exit(3);
    if (err instanceof ContractError) process.exit(2);
    if (err && (err.code === "ENOENT" || err.code === "EACCES")) process.exit(1);
    process.exit(2);
  });
