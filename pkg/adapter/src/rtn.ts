/**
 * RTN1 tensor files, the interchange format the attribution engine reads.
 *
 * Layout (little-endian): magic "RTN1", one rank byte (1..3), rank uint32
 * dims, then float32 values row-major. Non-finite values are rejected so
 * the engine side never sees NaN/Inf.
 */

import { promises as fs } from "node:fs";
import os from "node:os";
import path from "node:path";

import { ContractError } from "./errors.js";

const MAGIC = Buffer.from("RTN1", "ascii");

export function encodeTensor(dims: number[], values: Float32Array): Buffer {
  if (dims.length < 1 || dims.length > 3) {
    throw new ContractError(`tensor rank must be 1..3, got ${dims.length}`);
  }
  const count = dims.reduce((a, b) => a * b, 1);
  if (dims.some((d) => !Number.isInteger(d) || d < 1)) {
    throw new ContractError(`dims must be positive integers, got ${dims}`);
  }
  if (count !== values.length) {
    throw new ContractError(`dims ${dims} expect ${count} values, got ${values.length}`);
  }
  for (let i = 0; i < values.length; i++) {
    if (!Number.isFinite(values[i])) {
      throw new ContractError(`non-finite value at flat index ${i}`);
    }
  }
  const header = Buffer.alloc(4 + 1 + 4 * dims.length);
  MAGIC.copy(header, 0);
  header.writeUInt8(dims.length, 4);
  dims.forEach((d, i) => header.writeUInt32LE(d, 5 + 4 * i));

  let payload: Buffer;
  if (os.endianness() === "LE") {
    payload = Buffer.from(values.buffer, values.byteOffset, values.byteLength);
  } else {
    payload = Buffer.alloc(4 * values.length);
    for (let i = 0; i < values.length; i++) payload.writeFloatLE(values[i], 4 * i);
  }
  return Buffer.concat([header, payload]);
}

export function decodeTensor(buf: Buffer): { dims: number[]; values: Float32Array } {
  if (buf.length < 5 || !buf.subarray(0, 4).equals(MAGIC)) {
    throw new ContractError("bad magic: not an RTN1 tensor");
  }
  const rank = buf.readUInt8(4);
  if (rank < 1 || rank > 3) throw new ContractError(`bad rank ${rank}`);
  const dims: number[] = [];
  for (let i = 0; i < rank; i++) dims.push(buf.readUInt32LE(5 + 4 * i));
  const count = dims.reduce((a, b) => a * b, 1);
  const offset = 5 + 4 * rank;
  if (buf.length !== offset + 4 * count) {
    throw new ContractError(
      `expected ${offset + 4 * count} bytes for dims ${dims}, got ${buf.length}`
    );
  }
  const values = new Float32Array(count);
  for (let i = 0; i < count; i++) values[i] = buf.readFloatLE(offset + 4 * i);
  return { dims, values };
}

/** Write atomically: temp file in the target directory, then rename. */
export async function writeTensorFile(
  filePath: string,
  dims: number[],
  values: Float32Array
): Promise<number> {
  const data = encodeTensor(dims, values);
  const dir = path.dirname(path.resolve(filePath));
  const tmp = path.join(dir, `.${path.basename(filePath)}.${process.pid}.tmp`);
  await fs.writeFile(tmp, data);
  await fs.rename(tmp, filePath);
  return data.length;
}

export async function readTensorFile(filePath: string) {
  return decodeTensor(await fs.readFile(filePath));
}
