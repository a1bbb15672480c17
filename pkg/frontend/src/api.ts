/** Typed client for the annotation/generation HTTP API. */

import type { Keypoint, Stroke } from "./geometry.js";

export interface SessionPayload {
  session_id: string;
  frames: number;
  width: number;
  height: number;
  prompt: string | null;
  f1: number | null;
  f2: number | null;
  keypoints: Keypoint[];
  object_strokes: Stroke[];
  robot_strokes: Stroke[];
  has_object_mask: boolean;
  has_robot_mask: boolean;
  status: string;
  error: string | null;
  image: string; // base64 PNG
  object_mask: string | null;
  robot_mask: string | null;
}

export interface GenerateParams {
  steps?: number;
  cfg_scale?: number;
  seed?: number;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: unknown,
  ) {
    super(`HTTP ${status}: ${JSON.stringify(detail)}`);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const resp = await fetch(url, {
    headers: { "content-type": "application/json" },
    ...init,
  });
  if (!resp.ok) {
    let detail: unknown = resp.statusText;
    try {
      detail = (await resp.json()).detail;
    } catch {
      /* non-JSON error body */
    }
    throw new ApiError(resp.status, detail);
  }
  return (await resp.json()) as T;
}

export class AnnotatorApi {
  constructor(public base: string = "") {}

  createSession(imageB64: string, frames = 15): Promise<{ id: string }> {
    return request(`${this.base}/sessions`, {
      method: "POST",
      body: JSON.stringify({ image: imageB64, frames }),
    });
  }

  getSession(id: string): Promise<SessionPayload> {
    return request(`${this.base}/sessions/${id}`);
  }

  putPrompt(id: string, prompt: string): Promise<unknown> {
    return request(`${this.base}/sessions/${id}/prompt`, {
      method: "PUT",
      body: JSON.stringify({ prompt }),
    });
  }

  putMask(id: string, body: { strokes?: Stroke[]; png?: string }, robot = false): Promise<unknown> {
    const path = robot ? "robot-mask" : "mask";
    return request(`${this.base}/sessions/${id}/${path}`, {
      method: "PUT",
      body: JSON.stringify(body),
    });
  }

  putPhases(id: string, f1: number, f2: number): Promise<unknown> {
    return request(`${this.base}/sessions/${id}/phases`, {
      method: "PUT",
      body: JSON.stringify({ f1, f2 }),
    });
  }

  putKeypoints(id: string, keypoints: Keypoint[]): Promise<unknown> {
    return request(`${this.base}/sessions/${id}/keypoints`, {
      method: "PUT",
      body: JSON.stringify({ keypoints }),
    });
  }

  getTrajectory(id: string): Promise<{ points: [number, number][]; f1: number; f2: number }> {
    return request(`${this.base}/sessions/${id}/trajectory`);
  }

  generate(id: string, params: GenerateParams = {}): Promise<{ status: string }> {
    return request(`${this.base}/sessions/${id}/generate`, {
      method: "POST",
      body: JSON.stringify(params),
    });
  }

  getStatus(id: string): Promise<{ status: string; error: string | null }> {
    return request(`${this.base}/sessions/${id}/status`);
  }

  async getVideo(id: string): Promise<ArrayBuffer> {
    const resp = await fetch(`${this.base}/sessions/${id}/video`);
    if (!resp.ok) throw new ApiError(resp.status, await resp.text());
    return resp.arrayBuffer();
  }

  async getMaskRaw(id: string, robot = false): Promise<Uint8Array> {
    const name = robot ? "robot-mask.raw" : "object-mask.raw";
    const resp = await fetch(`${this.base}/sessions/${id}/${name}`);
    if (!resp.ok) throw new ApiError(resp.status, await resp.text());
    return new Uint8Array(await resp.arrayBuffer());
  }

  async waitDone(id: string, timeoutMs = 30_000, pollMs = 100): Promise<string> {
    const deadline = Date.now() + timeoutMs;
    while (Date.now() < deadline) {
      const { status } = await this.getStatus(id);
      if (status === "done" || status === "failed") return status;
      await new Promise((r) => setTimeout(r, pollMs));
    }
    throw new Error("generation timed out");
  }
}
