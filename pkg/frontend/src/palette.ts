/** Stable instance colors: a pure function of the id, so the same instance
 * renders the same color in every view and across reloads. Mirrors the
 * engine's PNG colorizer (golden-ratio hue walk in HSV). */

export type Rgb = readonly [number, number, number];

const GOLDEN = 0.6180339887498949;
const SATURATION = 0.65;
const VALUE = 0.95;

function hsvToRgb(h: number, s: number, v: number): Rgb {
  const i = Math.floor(h * 6);
  const f = h * 6 - i;
  const p = v * (1 - s);
  const q = v * (1 - s * f);
  const t = v * (1 - s * (1 - f));
  switch (((i % 6) + 6) % 6) {
    case 0: return [v, t, p];
    case 1: return [q, v, p];
    case 2: return [p, v, t];
    case 3: return [p, q, v];
    case 4: return [t, p, v];
    default: return [v, p, q];
  }
}

export function instanceColor(id: number): Rgb {
  const hue = (id * GOLDEN) % 1.0;
  const [r, g, b] = hsvToRgb(hue, SATURATION, VALUE);
  return [Math.floor(r * 255), Math.floor(g * 255), Math.floor(b * 255)];
}

/** Memoized palette for one session; the mapping never changes, memoization
 * just avoids recomputing per frame. */
export class Palette {
  private cache = new Map<number, Rgb>();

  color(id: number): Rgb {
    let c = this.cache.get(id);
    if (!c) {
      c = instanceColor(id);
      this.cache.set(id, c);
    }
    return c;
  }
}
