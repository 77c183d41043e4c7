/** Minimal PNG decoder for the mask format the service emits: non-interlaced
 * grayscale, 8- or 16-bit. Canvas decoding would quantize 16-bit ids to
 * 8 bits, so the raw instance ids must be recovered by hand. */

const SIGNATURE = [0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a];

export interface LabelImage {
  width: number;
  height: number;
  /** instance id per pixel, row-major */
  data: Uint16Array;
}

function u32(bytes: Uint8Array, offset: number): number {
  return (
    (bytes[offset] << 24) | (bytes[offset + 1] << 16) |
    (bytes[offset + 2] << 8) | bytes[offset + 3]
  ) >>> 0;
}

async function inflate(compressed: Uint8Array): Promise<Uint8Array> {
  const stream = new Blob([compressed as BlobPart])
    .stream()
    .pipeThrough(new DecompressionStream("deflate"));
  const buffer = await new Response(stream).arrayBuffer();
  return new Uint8Array(buffer);
}

function paeth(a: number, b: number, c: number): number {
  const p = a + b - c;
  const pa = Math.abs(p - a);
  const pb = Math.abs(p - b);
  const pc = Math.abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

function unfilter(raw: Uint8Array, width: number, height: number, bpp: number): Uint8Array {
  const stride = width * bpp;
  const out = new Uint8Array(stride * height);
  for (let y = 0; y < height; y++) {
    const filter = raw[y * (stride + 1)];
    const src = y * (stride + 1) + 1;
    const dst = y * stride;
    for (let x = 0; x < stride; x++) {
      const value = raw[src + x];
      const left = x >= bpp ? out[dst + x - bpp] : 0;
      const above = y > 0 ? out[dst + x - stride] : 0;
      const upLeft = y > 0 && x >= bpp ? out[dst + x - bpp - stride] : 0;
      let recon: number;
      switch (filter) {
        case 0: recon = value; break;
        case 1: recon = value + left; break;
        case 2: recon = value + above; break;
        case 3: recon = value + ((left + above) >> 1); break;
        case 4: recon = value + paeth(left, above, upLeft); break;
        default: throw new Error(`unsupported PNG filter ${filter}`);
      }
      out[dst + x] = recon & 0xff;
    }
  }
  return out;
}

export async function decodeLabelPng(bytes: Uint8Array): Promise<LabelImage> {
  for (let i = 0; i < SIGNATURE.length; i++) {
    if (bytes[i] !== SIGNATURE[i]) throw new Error("not a PNG");
  }
  let offset = 8;
  let width = 0;
  let height = 0;
  let bitDepth = 0;
  const idat: Uint8Array[] = [];
  while (offset < bytes.length) {
    const length = u32(bytes, offset);
    const type = String.fromCharCode(...bytes.subarray(offset + 4, offset + 8));
    const data = bytes.subarray(offset + 8, offset + 8 + length);
    if (type === "IHDR") {
      width = u32(data, 0);
      height = u32(data, 4);
      bitDepth = data[8];
      const colorType = data[9];
      const interlace = data[12];
      if (colorType !== 0) throw new Error(`mask PNG must be grayscale, got color type ${colorType}`);
      if (bitDepth !== 8 && bitDepth !== 16) throw new Error(`unsupported bit depth ${bitDepth}`);
      if (interlace !== 0) throw new Error("interlaced PNG not supported");
    } else if (type === "IDAT") {
      idat.push(data);
    } else if (type === "IEND") {
      break;
    }
    offset += 12 + length;
  }
  const compressed = new Uint8Array(idat.reduce((n, c) => n + c.length, 0));
  let at = 0;
  for (const chunk of idat) {
    compressed.set(chunk, at);
    at += chunk.length;
  }
  const bpp = bitDepth / 8;
  const raw = await inflate(compressed);
  const pixels = unfilter(raw, width, height, bpp);
  const data = new Uint16Array(width * height);
  if (bitDepth === 8) {
    data.set(pixels);
  } else {
    for (let i = 0; i < data.length; i++) {
      data[i] = (pixels[2 * i] << 8) | pixels[2 * i + 1];
    }
  }
  return { width, height, data };
}

export function decodeBase64(b64: string): Uint8Array {
  const text = atob(b64);  // browsers and node 16+
  const out = new Uint8Array(text.length);
  for (let i = 0; i < text.length; i++) out[i] = text.charCodeAt(i);
  return out;
}
