import { mkdtemp, readFile, readdir, rm } from "node:fs/promises";
import os from "node:os";
import path from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ContractError } from "../src/errors.js";
import { decodeTensor, encodeTensor, writeTensorFile } from "../src/rtn.js";

let tmp: string;
beforeAll(async () => {
  tmp = await mkdtemp(path.join(os.tmpdir(), "rtn-"));
});
afterAll(async () => {
  await rm(tmp, { recursive: true, force: true });
});

describe("encodeTensor", () => {
  it("encodes the minimal tensor to the exact 13 bytes", () => {
    const buf = encodeTensor([1], new Float32Array([1.0]));
    expect(buf.length).toBe(13);
    expect(buf.toString("hex")).toBe("52544e31" + "01" + "01000000" + "0000803f");
  });

  it("round-trips rank-3 tensors bit-exactly", () => {
    const values = new Float32Array(2 * 3 * 4);
    for (let i = 0; i < values.length; i++) values[i] = Math.fround(Math.sin(i) * 100);
    const buf = encodeTensor([2, 3, 4], values);
    const back = decodeTensor(buf);
    expect(back.dims).toEqual([2, 3, 4]);
    expect(Buffer.from(back.values.buffer)).toEqual(Buffer.from(values.buffer));
  });

  it("rejects bad ranks, dim mismatches, and non-finite values", () => {
    expect(() => encodeTensor([], new Float32Array(0))).toThrow(ContractError);
    expect(() => encodeTensor([1, 1, 1, 1], new Float32Array(1))).toThrow(ContractError);
    expect(() => encodeTensor([3], new Float32Array(2))).toThrow(/expect 3 values/);
    expect(() => encodeTensor([1], new Float32Array([NaN]))).toThrow(/flat index 0/);
    expect(() => encodeTensor([0], new Float32Array(0))).toThrow(ContractError);
  });
});

describe("writeTensorFile", () => {
  it("writes atomically and leaves no temp files behind", async () => {
    const out = path.join(tmp, "t.rtn");
    const n = await writeTensorFile(out, [2, 2], new Float32Array([1, 2, 3, 4]));
    expect(n).toBe(4 + 1 + 8 + 16);
    const data = await readFile(out);
    expect(data.length).toBe(n);
    expect(decodeTensor(data).dims).toEqual([2, 2]);
    const leftovers = (await readdir(tmp)).filter((f) => f.endsWith(".tmp"));
    expect(leftovers).toEqual([]);
  });
});
