import { blockFeatures, tokenFeatures, type DecodedImage } from "../src/reference.js";

function swatch(rgb: [number, number, number]): DecodedImage {
  const data = new Uint8Array(16);
  for (let p = 0; p < 4; p++) data.set([...rgb, 255], 4 * p);
  return { width: 2, height: 2, data };
}

/** Cosine between a word's feature vector and a solid color block's. */
export function cosineOfFeatures(word: string, rgb: [number, number, number]): number {
  const a = tokenFeatures(word);
  const b = blockFeatures(swatch(rgb), 0, 0, 2, 2);
  let dot = 0;
  let na = 0;
  let nb = 0;
  for (let i = 0; i < a.length; i++) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const den = Math.sqrt(na) * Math.sqrt(nb);
  return den > 0 ? dot / den : 0;
}
