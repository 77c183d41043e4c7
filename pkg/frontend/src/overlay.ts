/** Build the RGBA overlay for a decoded instance mask: background stays
 * transparent, every instance id gets its palette color at the chosen
 * opacity. Pure buffer math so it is testable without a canvas. */

import { Palette } from "./palette.js";
import { LabelImage } from "./png.js";

export function renderOverlayRgba(
  mask: LabelImage,
  palette: Palette,
  opacity: number,
): Uint8ClampedArray<ArrayBuffer> {
  const alpha = Math.round(255 * Math.min(1, Math.max(0, opacity)));
  const out = new Uint8ClampedArray(mask.width * mask.height * 4);
  for (let i = 0; i < mask.data.length; i++) {
    const id = mask.data[i];
    if (id === 0) continue;
    const [r, g, b] = palette.color(id);
    const o = i * 4;
    out[o] = r;
    out[o + 1] = g;
    out[o + 2] = b;
    out[o + 3] = alpha;
  }
  return out;
}

export function idsPresent(mask: LabelImage): number[] {
  const seen = new Set<number>();
  for (const id of mask.data) {
    if (id !== 0) seen.add(id);
  }
  return [...seen].sort((a, b) => a - b);
}
