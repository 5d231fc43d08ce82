/** Extraction configuration and its invariants. */

import { ContractError } from "./errors.js";

export type TextPooling = "mean" | "last-token";

export interface ExtractionConfig {
  /** Backend/model identifier; "reference" is the built-in featurizer. */
  model: string;
  /** Hidden-state layer to tap (the engine's target model uses 16). */
  layer: number;
  /** Patch grid side; side^2 must equal the model's visual token count. */
  gridSide: number;
  /** Embedding dimensionality of the shared space. */
  dim: number;
  /** How span token states collapse into one query vector. */
  textPooling: TextPooling;
}

export const DEFAULT_CONFIG: ExtractionConfig = {
  model: "reference",
  layer: 16,
  gridSide: 35,
  dim: 4096,
  textPooling: "mean",
};

/** Env var pointing at a local model weight cache for real backends. */
export const MODEL_CACHE_ENV = "CHARTATTRIB_MODEL_CACHE";

export function resolveConfig(overrides: Partial<ExtractionConfig>): ExtractionConfig {
  const cfg = { ...DEFAULT_CONFIG, ...overrides };
  if (!Number.isInteger(cfg.layer) || cfg.layer < 0) {
    throw new ContractError(`layer must be a non-negative integer, got ${cfg.layer}`);
  }
  if (!Number.isInteger(cfg.gridSide) || cfg.gridSide < 1) {
    throw new ContractError(`grid side must be >= 1, got ${cfg.gridSide}`);
  }
  if (!Number.isInteger(cfg.dim) || cfg.dim < 1) {
    throw new ContractError(`dim must be >= 1, got ${cfg.dim}`);
  }
  if (cfg.textPooling !== "mean" && cfg.textPooling !== "last-token") {
    throw new ContractError(`text pooling must be mean|last-token, got ${cfg.textPooling}`);
  }
  return cfg;
}
