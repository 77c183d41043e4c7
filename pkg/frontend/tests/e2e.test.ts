/** End-to-end loop against the real engine: create a session on a synthetic
 * multi-cluster scene, click one cluster, verify the overlay carries the
 * instance at the clicked pixel within the interaction budget, step to
 * another view, and verify the same id and color reappear. Skipped when the
 * Python engine is not importable. */

import { spawn, spawnSync } from "node:child_process";
import { mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { clickToPrompt } from "../src/clicks.js";
import { renderOverlayRgba } from "../src/overlay.js";
import { decodeBase64, decodeLabelPng } from "../src/png.js";
import { UiSessionState } from "../src/state.js";

const PYTHON = process.env.PYTHON ?? "python3";
const PORT = 8732 + (process.pid % 500);
const BASE = `http://127.0.0.1:${PORT}`;

function engineAvailable(): boolean {
  if (process.env.SPLATSEG_E2E === "0") return false;
  const probe = spawnSync(PYTHON, ["-c", "import splatseg"], { timeout: 30_000 });
  return probe.status === 0;
}

const available = engineAvailable();
const maybe = available ? describe : describe.skip;

maybe("browser-loop end to end", () => {
  let server: ReturnType<typeof spawn> | null = null;
  let meta: {
    view_ids: string[];
    width: number;
    height: number;
    projected_centers: Record<string, { u: number; v: number }[]>;
  };

  beforeAll(async () => {
    const dir = mkdtempSync(join(tmpdir(), "splatseg-e2e-"));
    const gen = spawnSync(PYTHON, [
      "-m", "splatseg.cli", "demo-scene", dir,
      "--clusters", "4", "--points", "1200", "--views", "4", "--seed", "9",
    ], { timeout: 120_000 });
    expect(gen.status, String(gen.stderr)).toBe(0);
    meta = JSON.parse(readFileSync(join(dir, "clicks.json"), "utf-8"));

    server = spawn(PYTHON, [
      "-m", "splatseg.cli", "serve",
      "--scene", join(dir, "scene.ply"),
      "--cameras", join(dir, "colmap"),
      "--port", String(PORT),
      "--growth-radius", "0.1",
    ], { stdio: "ignore" });

    const deadline = Date.now() + 60_000;
    for (;;) {
      try {
        const resp = await fetch(`${BASE}/sessions`);
        if (resp.ok) break;
      } catch {
        // not up yet
      }
      if (Date.now() > deadline) throw new Error("engine did not come up");
      await new Promise((r) => setTimeout(r, 250));
    }
  }, 120_000);

  afterAll(() => {
    server?.kill();
  });

  it("click -> overlay -> view step keeps the instance id and color", async () => {
    const api = new ApiClient(BASE);
    const sessions = await api.listSessions();
    expect(sessions.length).toBeGreaterThan(0);
    const info = sessions[0];
    const state = new UiSessionState(info.session_id, info.view_ids);

    // click cluster 0 through the canvas mapping (canvas displayed at 2x)
    const viewA = state.currentViewId;
    const target = meta.projected_centers[viewA][0];
    const body = clickToPrompt(
      {
        canvasX: target.u * 2,
        canvasY: target.v * 2,
        canvasWidth: meta.width * 2,
        canvasHeight: meta.height * 2,
        imageWidth: meta.width,
        imageHeight: meta.height,
      },
      viewA,
      state.clickTarget(),
      state.pendingRequest,
    );
    expect(body).not.toBeNull();

    const started = Date.now();
    const result = await api.addClick(info.session_id, body!);
    const elapsed = Date.now() - started;
    expect(elapsed).toBeLessThan(3_000);
    expect(result.faithfulness_warning).toBeUndefined();
    state.recordClick({
      viewId: viewA, u: body!.u, v: body!.v, instanceId: result.instance_id,
    });

    // non-empty overlay at the clicked pixel, in the instance's color
    const maskA = await decodeLabelPng(decodeBase64(result.mask_png));
    const clickedId = maskA.data[body!.v * maskA.width + body!.u];
    expect(clickedId).toBe(result.instance_id);
    const overlayA = renderOverlayRgba(maskA, state.palette, 1.0);
    const offset = (body!.v * maskA.width + body!.u) * 4;
    const colorA = [...overlayA.slice(offset, offset + 3)];
    expect(colorA).toEqual([...state.palette.color(result.instance_id)]);
    expect(overlayA[offset + 3]).toBe(255);

    // step to the next view: same instance id, same color
    const viewB = state.stepView(1);
    expect(viewB).not.toBe(viewA);
    const maskResp = await api.getMask(info.session_id, viewB, state.showRefined);
    expect(maskResp.instance_ids).toContain(result.instance_id);
    const maskB = await decodeLabelPng(decodeBase64(maskResp.mask_png));
    const overlayB = renderOverlayRgba(maskB, state.palette, 1.0);
    const idx = maskB.data.findIndex((v) => v === result.instance_id);
    expect(idx).toBeGreaterThanOrEqual(0);
    const colorB = [...overlayB.slice(idx * 4, idx * 4 + 3)];
    expect(colorB).toEqual(colorA);

    // clicks survive navigation
    expect(state.clicks).toHaveLength(1);
  }, 60_000);
});
