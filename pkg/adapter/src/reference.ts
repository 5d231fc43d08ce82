/**
 * Deterministic reference featurizer.
 *
 * Stands in for a vision-language model when no weights are reachable:
 * charts and text spans are embedded into one shared space so the
 * attribution engine behaves meaningfully end to end. Per patch it
 * measures ink statistics (mean ink color, hue histogram, coverage,
 * darkness); color words map to the features of a solid swatch of that
 * color, so a query like "orange line" lands on orange ink. Everything
 * is a pure function of the inputs and the (model, layer, dim) seed, so
 * repeated runs are byte-identical.
 */

import { ContractError } from "./errors.js";
import type { ExtractionConfig } from "./config.js";

/** Feature layout: 12 visual dims, then 4 text-only hash dims that no
 * patch ever occupies (unknown words stay orthogonal to every patch). */
export const FEATURE_DIM = 16;
const VISUAL_DIMS = 12;

// Pixels at least this far from white count as ink; light gridlines stay
// background.
const INK_THRESHOLD = 180;

export interface DecodedImage {
  width: number;
  height: number;
  /** RGBA interleaved, 8-bit. */
  data: Uint8Array;
}

// ------------------------------------------------------------ deterministic rng

function fnv1a(text: string): number {
  let h = 0x811c9dc5;
  for (let i = 0; i < text.length; i++) {
    h ^= text.charCodeAt(i);
    h = Math.imul(h, 0x01000193);
  }
  return h >>> 0;
}

function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function gaussians(rand: () => number, n: number): Float64Array {
  const out = new Float64Array(n);
  for (let i = 0; i < n; i += 2) {
    const u = Math.max(rand(), 1e-12);
    const v = rand();
    const r = Math.sqrt(-2 * Math.log(u));
    out[i] = r * Math.cos(2 * Math.PI * v);
    if (i + 1 < n) out[i + 1] = r * Math.sin(2 * Math.PI * v);
  }
  return out;
}

// ------------------------------------------------------------------- projection

const projectionCache = new Map<string, Float64Array>();

/** Fixed pseudo-random projection from feature space into the embedding
 * space; seeded by (model, layer, dim) so one config is one space. */
export function projectionMatrix(cfg: ExtractionConfig): Float64Array {
  const key = `${cfg.model}#${cfg.layer}#${cfg.dim}`;
  let m = projectionCache.get(key);
  if (!m) {
    m = gaussians(mulberry32(fnv1a(key)), FEATURE_DIM * cfg.dim);
    projectionCache.set(key, m);
  }
  return m;
}

export function project(features: Float64Array, cfg: ExtractionConfig): Float32Array {
  const m = projectionMatrix(cfg);
  const out = new Float32Array(cfg.dim);
  for (let f = 0; f < FEATURE_DIM; f++) {
    const x = features[f];
    if (x === 0) continue;
    const row = f * cfg.dim;
    for (let d = 0; d < cfg.dim; d++) out[d] += x * m[row + d];
  }
  return out;
}

// --------------------------------------------------------------- patch features

/** Hue sector index (red, yellow, green, cyan, blue, magenta) for an
 * rgb pixel, or -1 when it is too gray to call. */
function hueSector(r: number, g: number, b: number): number {
  const max = Math.max(r, g, b);
  const min = Math.min(r, g, b);
  if (max - min < 20) return -1;
  let h: number;
  if (max === r) h = ((g - b) / (max - min)) % 6;
  else if (max === g) h = (b - r) / (max - min) + 2;
  else h = (r - g) / (max - min) + 4;
  h = ((h + 6) % 6) * 60; // degrees
  return Math.floor(((h + 30) % 360) / 60);
}

/** Ink statistics of one pixel block; all-background blocks are zero. */
export function blockFeatures(
  img: DecodedImage,
  x0: number,
  y0: number,
  x1: number,
  y1: number
): Float64Array {
  const f = new Float64Array(FEATURE_DIM);
  const total = Math.max((x1 - x0) * (y1 - y0), 1);
  let ink = 0;
  let sumR = 0;
  let sumG = 0;
  let sumB = 0;
  let sumSat = 0;
  let sumDark = 0;
  const sectors = new Float64Array(6);
  for (let y = y0; y < y1; y++) {
    for (let x = x0; x < x1; x++) {
      const o = 4 * (y * img.width + x);
      const r = img.data[o];
      const g = img.data[o + 1];
      const b = img.data[o + 2];
      if (Math.min(r, g, b) >= INK_THRESHOLD) continue;
      ink++;
      sumR += r;
      sumG += g;
      sumB += b;
      const sat = (Math.max(r, g, b) - Math.min(r, g, b)) / 255;
      sumSat += sat;
      sumDark += 1 - (r + g + b) / (3 * 255);
      const s = hueSector(r, g, b);
      if (s >= 0) sectors[s] += sat;
    }
  }
  if (ink === 0) return f;
  f[0] = sumR / ink / 255;
  f[1] = sumG / ink / 255;
  f[2] = sumB / ink / 255;
  f[3] = ink / total;
  f[4] = sumSat / ink;
  let norm = 0;
  for (let s = 0; s < 6; s++) norm += sectors[s];
  // hue channels carry double weight so color identity beats brightness
  for (let s = 0; s < 6; s++) f[5 + s] = norm > 0 ? (2 * sectors[s]) / norm : 0;
  f[11] = sumDark / ink;
  return f;
}

// ---------------------------------------------------------------- text features

const COLOR_WORDS: Record<string, [number, number, number]> = {
  red: [220, 40, 40],
  orange: [230, 130, 30],
  yellow: [230, 210, 40],
  green: [50, 160, 80],
  cyan: [40, 190, 200],
  teal: [40, 160, 160],
  blue: [40, 90, 200],
  purple: [140, 60, 180],
  violet: [140, 60, 180],
  magenta: [220, 70, 160],
  pink: [230, 130, 170],
  brown: [140, 90, 40],
  black: [20, 20, 20],
  gray: [110, 110, 110],
  grey: [110, 110, 110],
};

function swatchFeatures(rgb: [number, number, number]): Float64Array {
  const img: DecodedImage = {
    width: 2,
    height: 2,
    data: new Uint8Array([...rgb, 255, ...rgb, 255, ...rgb, 255, ...rgb, 255]),
  };
  return blockFeatures(img, 0, 0, 2, 2);
}

export function tokenize(text: string): string[] {
  return text.toLowerCase().split(/[^a-z0-9]+/).filter((t) => t.length > 0);
}

/** Color words become swatch features; anything else hashes into the
 * text-only dims so it cannot correlate with image patches. */
export function tokenFeatures(token: string): Float64Array {
  const rgb = COLOR_WORDS[token];
  if (rgb) return swatchFeatures(rgb);
  const f = new Float64Array(FEATURE_DIM);
  const rand = mulberry32(fnv1a(`tok:${token}`));
  const g = gaussians(rand, FEATURE_DIM - VISUAL_DIMS);
  let norm = 0;
  for (const v of g) norm += v * v;
  norm = Math.sqrt(norm) || 1;
  for (let i = VISUAL_DIMS; i < FEATURE_DIM; i++) f[i] = g[i - VISUAL_DIMS] / norm;
  return f;
}

export function spanFeatures(text: string, pooling: "mean" | "last-token"): Float64Array {
  const tokens = tokenize(text);
  if (tokens.length === 0) {
    throw new ContractError("text span is empty after tokenization");
  }
  if (pooling === "last-token") {
    return tokenFeatures(tokens[tokens.length - 1]);
  }
  const out = new Float64Array(FEATURE_DIM);
  for (const tok of tokens) {
    const f = tokenFeatures(tok);
    for (let i = 0; i < FEATURE_DIM; i++) out[i] += f[i];
  }
  for (let i = 0; i < FEATURE_DIM; i++) out[i] /= tokens.length;
  return out;
}
