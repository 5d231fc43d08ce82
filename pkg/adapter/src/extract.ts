/**
 * The three adapter operations: chart grid extraction, text span
 * embedding, and reasoning generation. Outputs are .rtn tensors (or
 * plain step strings) so the engine side stays model-agnostic.
 */

import { promises as fs } from "node:fs";
import { PNG } from "pngjs";

import { loadBackend } from "./backend.js";
import { resolveConfig, type ExtractionConfig } from "./config.js";
import { ContractError } from "./errors.js";
import type { DecodedImage } from "./reference.js";
import { writeTensorFile } from "./rtn.js";

export async function decodePng(filePath: string): Promise<DecodedImage> {
  const raw = await fs.readFile(filePath);
  const png = PNG.sync.read(raw);
  return { width: png.width, height: png.height, data: new Uint8Array(png.data) };
}

/** Patch-grid hidden states for one chart, written as a rank-3 tensor. */
export async function extractGrid(
  chartPath: string,
  outPath: string,
  overrides: Partial<ExtractionConfig> = {}
): Promise<{ dims: number[]; bytes: number }> {
  const cfg = resolveConfig(overrides);
  const backend = loadBackend(cfg);
  const image = await decodePng(chartPath);
  const values = backend.patchGrid(image, cfg);
  const dims = [cfg.gridSide, cfg.gridSide, cfg.dim];
  const bytes = await writeTensorFile(outPath, dims, values);
  return { dims, bytes };
}

/** Pooled span embedding, written as a rank-1 tensor. */
export async function embedText(
  text: string,
  outPath: string,
  overrides: Partial<ExtractionConfig> = {}
): Promise<{ dims: number[]; bytes: number }> {
  if (text.trim().length === 0) {
    throw new ContractError("text span must be nonempty");
  }
  const cfg = resolveConfig(overrides);
  const backend = loadBackend(cfg);
  const values = backend.textEmbedding(text, cfg);
  const bytes = await writeTensorFile(outPath, [cfg.dim], values);
  return { dims: [cfg.dim], bytes };
}

/** Step-by-step reasoning for a chart QA pair, one sentence per step,
 * ready for per-step embedText + attribution. */
export async function generateReasoning(
  chartPath: string,
  question: string,
  answer: string,
  overrides: Partial<ExtractionConfig> = {}
): Promise<string[]> {
  if (question.trim().length === 0 || answer.trim().length === 0) {
    throw new ContractError("question and answer must be nonempty");
  }
  const cfg = resolveConfig(overrides);
  const backend = loadBackend(cfg);
  await fs.access(chartPath); // the chart must at least exist
  const steps = backend.reasoning(question, answer);
  if (steps.length < 1) {
    throw new ContractError("backend produced no reasoning steps");
  }
  return steps;
}
