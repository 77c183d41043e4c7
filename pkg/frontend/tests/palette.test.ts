import { describe, expect, it } from "vitest";

import { instanceColor, Palette } from "../src/palette.js";

describe("instanceColor", () => {
  it("matches the engine palette exactly", () => {
    // frozen from the server-side PNG colorizer
    expect(instanceColor(1)).toEqual([84, 130, 242]);
    expect(instanceColor(2)).toEqual([176, 242, 84]);
    expect(instanceColor(7)).toEqual([91, 242, 84]);
    expect(instanceColor(42)).toEqual([242, 84, 125]);
  });

  it("is a pure function of the id", () => {
    for (const id of [1, 3, 9, 1234]) {
      expect(instanceColor(id)).toEqual(instanceColor(id));
    }
  });

  it("separates nearby ids", () => {
    const seen = new Set<string>();
    for (let id = 1; id <= 12; id++) {
      seen.add(instanceColor(id).join(","));
    }
    expect(seen.size).toBe(12);
  });
});

describe("Palette", () => {
  it("memoizes per session but stays equal to the pure function", () => {
    const palette = new Palette();
    const first = palette.color(5);
    expect(palette.color(5)).toBe(first);
    expect(first).toEqual(instanceColor(5));
  });
});
