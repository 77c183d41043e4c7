/** Page bootstrap: attach to the first live session (the one `splatseg
 * serve --scene ... --cameras ...` preloads) or create one from the form. */

import { ApiClient } from "./api.js";
import { UiSessionState } from "./state.js";
import { Viewer, ViewerElements } from "./viewer.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

async function boot(): Promise<void> {
  const params = new URLSearchParams(location.search);
  const api = new ApiClient(params.get("api") ?? "http://127.0.0.1:8000");
  const status = el<HTMLElement>("status");

  let sessions = await api.listSessions();
  if (sessions.length === 0) {
    const scene = params.get("scene");
    const cameras = params.get("cameras");
    if (!scene || !cameras) {
      status.textContent =
        "no live session; start the server with --scene/--cameras or pass " +
        "?scene=...&cameras=... in the URL";
      return;
    }
    await api.createSession(scene, cameras);
    sessions = await api.listSessions();
  }
  const info = sessions[0];
  const state = new UiSessionState(info.session_id, info.view_ids);

  const elements: ViewerElements = {
    preview: el<HTMLImageElement>("preview"),
    overlay: el<HTMLCanvasElement>("overlay"),
    status,
    viewLabel: el<HTMLElement>("view-label"),
    instanceList: el<HTMLElement>("instances"),
    prevButton: el<HTMLButtonElement>("prev-view"),
    nextButton: el<HTMLButtonElement>("next-view"),
    refinedToggle: el<HTMLInputElement>("refined-toggle"),
    newInstanceToggle: el<HTMLInputElement>("new-instance-toggle"),
    opacitySlider: el<HTMLInputElement>("opacity"),
  };
  const viewer = new Viewer(api, state, elements);
  status.textContent =
    `session ${info.session_id.slice(0, 8)} | ${info.primitive_count} primitives, ` +
    `${info.view_ids.length} views - click an object to segment it`;
  await viewer.refresh();
}

boot().catch((err) => {
  const status = document.getElementById("status");
  if (status) status.textContent = `startup failed: ${err}`;
  console.error(err);
});
