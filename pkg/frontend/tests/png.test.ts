import { describe, expect, it } from "vitest";

import { decodeBase64, decodeLabelPng } from "../src/png.js";

/** Hand-rolled PNG encoder (grayscale, per-row filter choice) so the decoder
 * is tested against an independent construction. */

function crc32(bytes: Uint8Array): number {
  let crc = 0xffffffff;
  for (const byte of bytes) {
    crc ^= byte;
    for (let k = 0; k < 8; k++) {
      crc = (crc >>> 1) ^ (0xedb88320 & -(crc & 1));
    }
  }
  return (crc ^ 0xffffffff) >>> 0;
}

function be32(value: number): Uint8Array {
  return new Uint8Array([
    (value >>> 24) & 0xff, (value >>> 16) & 0xff,
    (value >>> 8) & 0xff, value & 0xff,
  ]);
}

function chunk(type: string, data: Uint8Array): Uint8Array {
  const typed = new Uint8Array(4 + data.length);
  typed.set([...type].map((c) => c.charCodeAt(0)));
  typed.set(data, 4);
  const out = new Uint8Array(12 + data.length);
  out.set(be32(data.length));
  out.set(typed, 4);
  out.set(be32(crc32(typed)), 8 + data.length);
  return out;
}

function paeth(a: number, b: number, c: number): number {
  const p = a + b - c;
  const pa = Math.abs(p - a), pb = Math.abs(p - b), pc = Math.abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

async function deflate(raw: Uint8Array): Promise<Uint8Array> {
  const stream = new Blob([raw as BlobPart]).stream()
    .pipeThrough(new CompressionStream("deflate"));
  return new Uint8Array(await new Response(stream).arrayBuffer());
}

async function encodePng(
  data: Uint16Array, width: number, height: number,
  bitDepth: 8 | 16, rowFilter: (y: number) => number,
): Promise<Uint8Array> {
  const bpp = bitDepth / 8;
  const stride = width * bpp;
  const bytes = new Uint8Array(stride * height);
  for (let i = 0; i < data.length; i++) {
    if (bitDepth === 16) {
      bytes[2 * i] = data[i] >> 8;
      bytes[2 * i + 1] = data[i] & 0xff;
    } else {
      bytes[i] = data[i] & 0xff;
    }
  }
  const filtered = new Uint8Array((stride + 1) * height);
  for (let y = 0; y < height; y++) {
    const filter = rowFilter(y);
    filtered[y * (stride + 1)] = filter;
    for (let x = 0; x < stride; x++) {
      const raw = bytes[y * stride + x];
      const left = x >= bpp ? bytes[y * stride + x - bpp] : 0;
      const above = y > 0 ? bytes[(y - 1) * stride + x] : 0;
      const upLeft = y > 0 && x >= bpp ? bytes[(y - 1) * stride + x - bpp] : 0;
      let value: number;
      switch (filter) {
        case 0: value = raw; break;
        case 1: value = raw - left; break;
        case 2: value = raw - above; break;
        case 3: value = raw - ((left + above) >> 1); break;
        default: value = raw - paeth(left, above, upLeft); break;
      }
      filtered[y * (stride + 1) + 1 + x] = value & 0xff;
    }
  }
  const ihdr = new Uint8Array(13);
  ihdr.set(be32(width));
  ihdr.set(be32(height), 4);
  ihdr[8] = bitDepth;
  ihdr[9] = 0; // grayscale
  const idat = await deflate(filtered);
  const signature = new Uint8Array([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]);
  const parts = [
    signature,
    chunk("IHDR", ihdr),
    chunk("IDAT", idat),
    chunk("IEND", new Uint8Array(0)),
  ];
  const out = new Uint8Array(parts.reduce((n, p) => n + p.length, 0));
  let at = 0;
  for (const part of parts) {
    out.set(part, at);
    at += part.length;
  }
  return out;
}

function randomLabels(n: number, seed: number, max: number): Uint16Array {
  const out = new Uint16Array(n);
  let state = seed >>> 0;
  for (let i = 0; i < n; i++) {
    state = (state * 1664525 + 1013904223) >>> 0;
    out[i] = state % max;
  }
  return out;
}

describe("decodeLabelPng", () => {
  it("round-trips 16-bit labels through every filter type", async () => {
    const data = randomLabels(23 * 17, 7, 4000);
    const png = await encodePng(data, 23, 17, 16, (y) => y % 5);
    const decoded = await decodeLabelPng(png);
    expect(decoded.width).toBe(23);
    expect(decoded.height).toBe(17);
    expect([...decoded.data]).toEqual([...data]);
  });

  it("round-trips 8-bit labels", async () => {
    const data = randomLabels(9 * 6, 3, 250);
    const png = await encodePng(data, 9, 6, 8, () => 0);
    const decoded = await decodeLabelPng(png);
    expect([...decoded.data]).toEqual([...data]);
  });

  it("rejects non-PNG input", async () => {
    await expect(decodeLabelPng(new Uint8Array([1, 2, 3]))).rejects.toThrow("not a PNG");
  });

  it("decodes base64 payloads", async () => {
    const data = randomLabels(5 * 4, 11, 9);
    const png = await encodePng(data, 5, 4, 16, () => 0);
    const b64 = Buffer.from(png).toString("base64");
    const decoded = await decodeLabelPng(decodeBase64(b64));
    expect([...decoded.data]).toEqual([...data]);
  });
});
