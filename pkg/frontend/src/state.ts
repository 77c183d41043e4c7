/** Client-side session state: current view, palette, overlay opacity, and
 * the single-in-flight-request gate that matches the service's write queue. */

import { Palette } from "./palette.js";

export interface ClickRecord {
  viewId: string;
  u: number;
  v: number;
  instanceId: number;
}

export class UiSessionState {
  readonly sessionId: string;
  readonly viewIds: readonly string[];
  readonly palette = new Palette();
  overlayOpacity = 0.55;
  showRefined = true;
  newInstanceMode = true;
  activeInstance: number | null = null;
  pendingRequest = false;
  clicks: ClickRecord[] = [];
  private viewIndex = 0;

  constructor(sessionId: string, viewIds: readonly string[]) {
    if (viewIds.length === 0) {
      throw new Error("a session needs at least one view");
    }
    this.sessionId = sessionId;
    this.viewIds = viewIds;
  }

  get currentViewId(): string {
    return this.viewIds[this.viewIndex];
  }

  /** Step to the adjacent view, wrapping at both ends. Clicks, the refined
   * toggle, and the palette are untouched by navigation. */
  stepView(direction: 1 | -1): string {
    const n = this.viewIds.length;
    this.viewIndex = (this.viewIndex + direction + n) % n;
    return this.currentViewId;
  }

  clickTarget(): "new" | number {
    if (this.newInstanceMode || this.activeInstance === null) return "new";
    return this.activeInstance;
  }

  recordClick(record: ClickRecord): void {
    this.clicks.push(record);
    this.activeInstance = record.instanceId;
  }
}
