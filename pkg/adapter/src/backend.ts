/**
 * Extractor backends. The built-in "reference" featurizer always works;
 * anything else needs real model weights, which this adapter reports as
 * an environment error naming the cache location to provision.
 */

import { DEFAULT_CONFIG, MODEL_CACHE_ENV, type ExtractionConfig } from "./config.js";
import { ContractError, EnvironmentError, GeometryError } from "./errors.js";
import {
  blockFeatures,
  project,
  spanFeatures,
  type DecodedImage,
} from "./reference.js";

export interface ExtractorBackend {
  readonly name: string;
  /** Visual tokens the vision stack produces for one image. */
  readonly visualTokens: number;
  /** Hidden-state layers available for tapping. */
  readonly depth: number;
  patchGrid(image: DecodedImage, cfg: ExtractionConfig): Float32Array;
  textEmbedding(text: string, cfg: ExtractionConfig): Float32Array;
  reasoning(question: string, answer: string): string[];
}

/** Mirrors the target model geometry: 35x35 visual tokens, 33 layers. */
class ReferenceBackend implements ExtractorBackend {
  readonly name = "reference";
  readonly nativeSide = 35;
  readonly visualTokens = 35 * 35;
  readonly depth = 33;

  patchGrid(image: DecodedImage, cfg: ExtractionConfig): Float32Array {
    const side = cfg.gridSide;
    const out = new Float32Array(side * side * cfg.dim);
    for (let i = 0; i < side; i++) {
      const y0 = Math.floor((i * image.height) / side);
      const y1 = Math.floor(((i + 1) * image.height) / side);
      for (let j = 0; j < side; j++) {
        const x0 = Math.floor((j * image.width) / side);
        const x1 = Math.floor(((j + 1) * image.width) / side);
        const emb = project(blockFeatures(image, x0, y0, x1, y1), cfg);
        out.set(emb, (i * side + j) * cfg.dim);
      }
    }
    return out;
  }

  textEmbedding(text: string, cfg: ExtractionConfig): Float32Array {
    return project(spanFeatures(text, cfg.textPooling), cfg);
  }

  reasoning(question: string, answer: string): string[] {
    return [
      `Identify the chart elements the question refers to: ${question.trim()}`,
      "Locate the matching data marks and read their values from the axes.",
      `Relate the values to the stated answer: ${answer.trim()}.`,
    ];
  }
}

export function loadBackend(cfg: ExtractionConfig): ExtractorBackend {
  let backend: ExtractorBackend;
  if (cfg.model === "reference" || cfg.model === DEFAULT_CONFIG.model) {
    backend = new ReferenceBackend();
  } else {
    // Real model weights are not provisioned in this environment; fail
    // the way a missing model should, pointing at the cache knob.
    throw new EnvironmentError(
      `model '${cfg.model}' is not available: no weight cache found ` +
        `(set ${MODEL_CACHE_ENV} to a directory holding the model, or use ` +
        `--model reference)`
    );
  }
  if (cfg.layer >= backend.depth) {
    throw new ContractError(
      `layer ${cfg.layer} outside model depth ${backend.depth}`
    );
  }
  if (cfg.gridSide * cfg.gridSide !== backend.visualTokens) {
    throw new GeometryError(
      `grid side ${cfg.gridSide} gives ${cfg.gridSide * cfg.gridSide} cells ` +
        `but the model emits ${backend.visualTokens} visual tokens`
    );
  }
  return backend;
}
