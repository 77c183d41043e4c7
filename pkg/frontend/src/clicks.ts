/** Map canvas-space click coordinates to image pixel coordinates.
 *
 * The canvas letterboxes the image with a contain fit, so the click must be
 * unscaled and un-offset; clicks in the letterbox bars or while a request is
 * pending produce no prompt. */

export interface ClickContext {
  canvasX: number;
  canvasY: number;
  canvasWidth: number;
  canvasHeight: number;
  imageWidth: number;
  imageHeight: number;
}

export interface PixelHit {
  u: number;
  v: number;
}

export function mapClickToPixel(ctx: ClickContext): PixelHit | null {
  const scale = Math.min(
    ctx.canvasWidth / ctx.imageWidth,
    ctx.canvasHeight / ctx.imageHeight,
  );
  if (!(scale > 0) || !isFinite(scale)) return null;
  const shownW = ctx.imageWidth * scale;
  const shownH = ctx.imageHeight * scale;
  const originX = (ctx.canvasWidth - shownW) / 2;
  const originY = (ctx.canvasHeight - shownH) / 2;
  const u = Math.floor((ctx.canvasX - originX) / scale);
  const v = Math.floor((ctx.canvasY - originY) / scale);
  if (u < 0 || v < 0 || u >= ctx.imageWidth || v >= ctx.imageHeight) {
    return null;
  }
  return { u, v };
}

export type ClickTarget = "new" | number;

export interface ClickBody {
  view_id: string;
  u: number;
  v: number;
  target: ClickTarget;
}

/** Build the POST /clicks body, or null when the click cannot become a
 * prompt (outside the image, or another segmentation is in flight). */
export function clickToPrompt(
  ctx: ClickContext,
  viewId: string,
  target: ClickTarget,
  requestPending: boolean,
): ClickBody | null {
  if (requestPending) return null;
  const hit = mapClickToPixel(ctx);
  if (!hit) return null;
  return { view_id: viewId, u: hit.u, v: hit.v, target };
}
