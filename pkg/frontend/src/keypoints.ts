/** Keypoint editor: click to drop, drag to move, live interpolated overlay. */

import { PHASE_COLORS, phaseOfFrame, type Keypoint } from "./geometry.js";
import type { UiSessionState } from "./state.js";

export class KeypointEditor {
  private draggingIndex: number | null = null;

  constructor(
    private canvas: HTMLCanvasElement,
    private get: () => UiSessionState,
    private path: () => [number, number][] | null,
    private onAdd: (kp: Keypoint) => void,
    private onMove: (index: number, x: number, y: number) => void,
    private onError: (message: string) => void,
  ) {
    canvas.addEventListener("pointerdown", (e) => this.down(e));
    canvas.addEventListener("pointermove", (e) => this.move(e));
    canvas.addEventListener("pointerup", () => (this.draggingIndex = null));
  }

  private toImage(e: PointerEvent): [number, number] {
    const rect = this.canvas.getBoundingClientRect();
    const s = this.get();
    return [
      ((e.clientX - rect.left) / rect.width) * s.width,
      ((e.clientY - rect.top) / rect.height) * s.height,
    ];
  }

  private hit(x: number, y: number): number | null {
    const s = this.get();
    for (let i = s.keypoints.length - 1; i >= 0; i--) {
      const kp = s.keypoints[i];
      if ((kp.x - x) ** 2 + (kp.y - y) ** 2 <= 9) return i;
    }
    return null;
  }

  private down(e: PointerEvent) {
    const [x, y] = this.toImage(e);
    const existing = this.hit(x, y);
    if (existing !== null) {
      this.draggingIndex = existing;
      this.canvas.setPointerCapture(e.pointerId);
      return;
    }
    const s = this.get();
    try {
      this.onAdd({ phase: s.activePhase, t: s.playhead, x, y });
    } catch (err) {
      this.onError(err instanceof Error ? err.message : String(err));
    }
    this.render();
  }

  private move(e: PointerEvent) {
    if (this.draggingIndex === null) return;
    const [x, y] = this.toImage(e);
    this.onMove(this.draggingIndex, x, y);
    this.render(); // overlay updates within the same interaction frame
  }

  render() {
    const ctx = this.canvas.getContext("2d")!;
    const s = this.get();
    const sx = this.canvas.width / s.width;
    const sy = this.canvas.height / s.height;
    ctx.clearRect(0, 0, this.canvas.width, this.canvas.height);
    const path = this.path();
    if (path && s.overlayVisible) {
      for (let t = 1; t < path.length; t++) {
        ctx.strokeStyle = PHASE_COLORS[phaseOfFrame(t + 1, s.f1, s.f2)];
        ctx.lineWidth = 2;
        ctx.beginPath();
        ctx.moveTo(path[t - 1][0] * sx, path[t - 1][1] * sy);
        ctx.lineTo(path[t][0] * sx, path[t][1] * sy);
        ctx.stroke();
      }
    }
    for (const kp of s.keypoints) {
      ctx.fillStyle = PHASE_COLORS[kp.phase];
      ctx.strokeStyle = "#111";
      ctx.beginPath();
      ctx.arc(kp.x * sx, kp.y * sy, 5, 0, Math.PI * 2);
      ctx.fill();
      ctx.stroke();
    }
  }
}
