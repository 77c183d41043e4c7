/** DOM controller: preview image + overlay canvas + toolbar, one in-flight
 * segmentation request at a time. */

import { ApiClient, ApiError } from "./api.js";
import { clickToPrompt } from "./clicks.js";
import { idsPresent, renderOverlayRgba } from "./overlay.js";
import { decodeBase64, decodeLabelPng, LabelImage } from "./png.js";
import { UiSessionState } from "./state.js";

export interface ViewerElements {
  preview: HTMLImageElement;
  overlay: HTMLCanvasElement;
  status: HTMLElement;
  viewLabel: HTMLElement;
  instanceList: HTMLElement;
  prevButton: HTMLButtonElement;
  nextButton: HTMLButtonElement;
  refinedToggle: HTMLInputElement;
  newInstanceToggle: HTMLInputElement;
  opacitySlider: HTMLInputElement;
}

export class Viewer {
  private mask: LabelImage | null = null;
  private epoch = 0;

  constructor(
    readonly api: ApiClient,
    readonly state: UiSessionState,
    readonly el: ViewerElements,
  ) {
    el.prevButton.addEventListener("click", () => void this.step(-1));
    el.nextButton.addEventListener("click", () => void this.step(1));
    el.refinedToggle.checked = state.showRefined;
    el.refinedToggle.addEventListener("change", () => {
      state.showRefined = el.refinedToggle.checked;
      void this.refresh();
    });
    el.newInstanceToggle.checked = state.newInstanceMode;
    el.newInstanceToggle.addEventListener("change", () => {
      state.newInstanceMode = el.newInstanceToggle.checked;
    });
    el.opacitySlider.addEventListener("input", () => {
      state.overlayOpacity = Number(el.opacitySlider.value) / 100;
      this.paintOverlay();
    });
    el.overlay.addEventListener("click", (event) => void this.onClick(event));
  }

  toast(message: string): void {
    this.el.status.textContent = message;
  }

  async step(direction: 1 | -1): Promise<void> {
    this.state.stepView(direction);
    await this.refresh();
  }

  async refresh(): Promise<void> {
    const viewId = this.state.currentViewId;
    const epoch = ++this.epoch;
    this.el.viewLabel.textContent = viewId;
    this.el.preview.src =
      this.api.previewUrl(this.state.sessionId, viewId) + `?t=${Date.now()}`;
    const mask = await this.api.getMask(
      this.state.sessionId, viewId, this.state.showRefined,
    );
    if (epoch !== this.epoch) return; // a newer view superseded this fetch
    this.mask = await decodeLabelPng(decodeBase64(mask.mask_png));
    this.paintOverlay();
    await this.refreshInstances();
  }

  paintOverlay(): void {
    if (!this.mask) return;
    const { width, height } = this.mask;
    const canvas = this.el.overlay;
    canvas.width = width;
    canvas.height = height;
    const ctx = canvas.getContext("2d");
    if (!ctx) return;
    const rgba = renderOverlayRgba(this.mask, this.state.palette, this.state.overlayOpacity);
    ctx.putImageData(new ImageData(rgba, width, height), 0, 0);
  }

  async refreshInstances(): Promise<void> {
    const summary = await this.api.instances(this.state.sessionId);
    const parts = summary.instances.map((inst) => {
      const [r, g, b] = this.state.palette.color(inst.id);
      return `<span class="chip" style="background: rgb(${r},${g},${b})">` +
        `#${inst.id} &middot; ${inst.primitive_count}</span>`;
    });
    this.el.instanceList.innerHTML = parts.join(" ") || "<em>no instances yet</em>";
  }

  async onClick(event: MouseEvent): Promise<void> {
    if (!this.mask) return;
    const rect = this.el.overlay.getBoundingClientRect();
    const body = clickToPrompt(
      {
        canvasX: event.clientX - rect.left,
        canvasY: event.clientY - rect.top,
        canvasWidth: rect.width,
        canvasHeight: rect.height,
        imageWidth: this.mask.width,
        imageHeight: this.mask.height,
      },
      this.state.currentViewId,
      this.state.clickTarget(),
      this.state.pendingRequest,
    );
    if (!body) {
      if (this.state.pendingRequest) this.toast("segmentation in progress, click ignored");
      return;
    }
    this.state.pendingRequest = true;
    this.toast(`segmenting at (${body.u}, ${body.v})...`);
    const started = performance.now();
    try {
      const result = await this.api.addClick(this.state.sessionId, body);
      this.state.recordClick({
        viewId: body.view_id, u: body.u, v: body.v,
        instanceId: result.instance_id,
      });
      const ms = Math.round(performance.now() - started);
      this.toast(
        result.faithfulness_warning
          ? `instance #${result.instance_id}: ${result.faithfulness_warning}`
          : `instance #${result.instance_id}: ${result.labeled_count} primitives in ${ms} ms`,
      );
      this.mask = await decodeLabelPng(decodeBase64(result.mask_png));
      if (!this.state.showRefined) {
        await this.refresh(); // click responses carry the refined mask
      } else {
        this.paintOverlay();
        await this.refreshInstances();
      }
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        this.toast("click hit empty space, try clicking on an object");
      } else {
        this.toast(`error: ${err instanceof Error ? err.message : err}`);
      }
    } finally {
      this.state.pendingRequest = false;
    }
  }

  maskIds(): number[] {
    return this.mask ? idsPresent(this.mask) : [];
  }
}
