/** Frame timeline with a playhead and draggable interaction boundaries. */

import { PHASE_COLORS, phaseOfFrame } from "./geometry.js";

export class Timeline {
  private dragging: "f1" | "f2" | "playhead" | null = null;

  constructor(
    private canvas: HTMLCanvasElement,
    private get: () => { frames: number; f1: number; f2: number; playhead: number },
    private onChange: (update: { f1?: number; f2?: number; playhead?: number }) => void,
  ) {
    canvas.addEventListener("pointerdown", (e) => this.down(e));
    canvas.addEventListener("pointermove", (e) => this.move(e));
    canvas.addEventListener("pointerup", () => (this.dragging = null));
    canvas.addEventListener("pointerleave", () => (this.dragging = null));
    this.render();
  }

  private frameAt(e: PointerEvent): number {
    const rect = this.canvas.getBoundingClientRect();
    const { frames } = this.get();
    const frac = (e.clientX - rect.left) / rect.width;
    return Math.min(frames, Math.max(1, Math.round(frac * (frames - 1)) + 1));
  }

  private down(e: PointerEvent) {
    const t = this.frameAt(e);
    const { f1, f2 } = this.get();
    const d1 = Math.abs(t - f1);
    const d2 = Math.abs(t - f2);
    if (d1 <= 1 && d1 <= d2) this.dragging = "f1";
    else if (d2 <= 1) this.dragging = "f2";
    else this.dragging = "playhead";
    this.apply(t);
    this.canvas.setPointerCapture(e.pointerId);
  }

  private move(e: PointerEvent) {
    if (!this.dragging) return;
    this.apply(this.frameAt(e));
  }

  private apply(t: number) {
    const { f1, f2 } = this.get();
    if (this.dragging === "f1") this.onChange({ f1: Math.min(t, f2) });
    else if (this.dragging === "f2") this.onChange({ f2: Math.max(t, f1) });
    else this.onChange({ playhead: t });
    this.render();
  }

  render() {
    const ctx = this.canvas.getContext("2d")!;
    const { width, height } = this.canvas;
    const { frames, f1, f2, playhead } = this.get();
    const xOf = (t: number) => ((t - 1) / (frames - 1)) * (width - 12) + 6;
    ctx.clearRect(0, 0, width, height);
    for (let t = 1; t < frames; t++) {
      ctx.fillStyle = PHASE_COLORS[phaseOfFrame(t + 1, f1, f2)];
      ctx.fillRect(xOf(t), height / 2 - 3, xOf(t + 1) - xOf(t), 6);
    }
    for (const [t, label] of [
      [f1, "F1"],
      [f2, "F2"],
    ] as [number, string][]) {
      ctx.fillStyle = "#ddd";
      ctx.fillRect(xOf(t) - 1.5, 4, 3, height - 8);
      ctx.font = "10px sans-serif";
      ctx.fillText(label, xOf(t) - 6, height - 1);
    }
    ctx.fillStyle = "#fff";
    ctx.beginPath();
    ctx.arc(xOf(playhead), height / 2, 5, 0, Math.PI * 2);
    ctx.fill();
  }
}
