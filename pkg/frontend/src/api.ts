/** Typed client for the segmentation session HTTP API. */

import { ClickBody } from "./clicks.js";

export interface SessionInfo {
  session_id: string;
  view_ids: string[];
  primitive_count: number;
}

export interface ClickResponse {
  instance_id: number;
  labeled_count: number;
  mask_png: string; // base64
  width: number;
  height: number;
  faithfulness_warning?: string;
}

export interface MaskResponse {
  view_id: string;
  refined: boolean;
  mask_png: string; // base64
  width: number;
  height: number;
  instance_ids: number[];
}

export interface InstanceSummary {
  instances: { id: number; primitive_count: number; click_count: number }[];
  next_instance_id: number;
}

export class ApiError extends Error {
  constructor(readonly status: number, detail: string) {
    super(detail);
  }
}

async function asJson<T>(resp: Response): Promise<T> {
  if (!resp.ok) {
    let detail = resp.statusText;
    try {
      const body = await resp.json();
      if (body && typeof body.detail === "string") detail = body.detail;
    } catch {
      // keep statusText
    }
    throw new ApiError(resp.status, detail);
  }
  return resp.json() as Promise<T>;
}

export class ApiClient {
  constructor(readonly baseUrl: string) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  async listSessions(): Promise<SessionInfo[]> {
    const body = await asJson<{ sessions: SessionInfo[] }>(
      await fetch(this.url("/sessions")),
    );
    return body.sessions;
  }

  async createSession(
    scenePath: string,
    camerasPath: string,
    params?: Record<string, unknown>,
  ): Promise<SessionInfo> {
    return asJson(await fetch(this.url("/sessions"), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({
        scene_path: scenePath,
        cameras_path: camerasPath,
        params: params ?? null,
      }),
    }));
  }

  async addClick(sessionId: string, body: ClickBody): Promise<ClickResponse> {
    return asJson(await fetch(this.url(`/sessions/${sessionId}/clicks`), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    }));
  }

  async getMask(
    sessionId: string,
    viewId: string,
    refined: boolean,
  ): Promise<MaskResponse> {
    return asJson(await fetch(this.url(
      `/sessions/${sessionId}/views/${viewId}/mask?refined=${refined}`,
    )));
  }

  previewUrl(sessionId: string, viewId: string): string {
    return this.url(`/sessions/${sessionId}/views/${viewId}/preview`);
  }

  async instances(sessionId: string): Promise<InstanceSummary> {
    return asJson(await fetch(this.url(`/sessions/${sessionId}/instances`)));
  }
}
