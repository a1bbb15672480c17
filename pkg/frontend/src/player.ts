/** Video playback with an input-trajectory overlay toggle. */

import { PHASE_COLORS, phaseOfFrame } from "./geometry.js";
import { parseRmvd, planeToRgba, type RawVideo } from "./rmvd.js";

export class Player {
  private video: RawVideo | null = null;
  private frame = 0;
  private timer: ReturnType<typeof setInterval> | null = null;
  overlay = true;

  constructor(
    private canvas: HTMLCanvasElement,
    private fps = 8,
    private getPath: () => { points: [number, number][]; f1: number; f2: number } | null,
    private onFrame: (frame: number) => void = () => {},
  ) {}

  load(buffer: ArrayBuffer) {
    this.video = parseRmvd(buffer);
    this.frame = 0;
    this.renderFrame();
  }

  get frameCount(): number {
    return this.video ? this.video.frames : 0;
  }

  play() {
    if (!this.video || this.timer) return;
    this.timer = setInterval(() => {
      if (!this.video) return;
      this.frame = (this.frame + 1) % this.video.frames;
      this.renderFrame();
      this.onFrame(this.frame + 1);
    }, 1000 / this.fps);
  }

  pause() {
    if (this.timer) clearInterval(this.timer);
    this.timer = null;
  }

  seek(frame: number) {
    if (!this.video) return;
    this.frame = Math.min(this.video.frames - 1, Math.max(0, frame - 1));
    this.renderFrame();
  }

  private renderFrame() {
    const v = this.video;
    if (!v) return;
    const ctx = this.canvas.getContext("2d")!;
    const image = new ImageData(planeToRgba(v.planes[this.frame]), v.width, v.height);
    createImageBitmap(image).then((bitmap) => {
      ctx.imageSmoothingEnabled = false;
      ctx.drawImage(bitmap, 0, 0, this.canvas.width, this.canvas.height);
      if (this.overlay) this.drawOverlay(ctx, v);
    });
  }

  private drawOverlay(ctx: CanvasRenderingContext2D, v: RawVideo) {
    const path = this.getPath();
    if (!path) return;
    const sx = this.canvas.width / v.width;
    const sy = this.canvas.height / v.height;
    for (let t = 1; t < path.points.length; t++) {
      ctx.strokeStyle = PHASE_COLORS[phaseOfFrame(t + 1, path.f1, path.f2)];
      ctx.lineWidth = 2;
      ctx.beginPath();
      ctx.moveTo(path.points[t - 1][0] * sx, path.points[t - 1][1] * sy);
      ctx.lineTo(path.points[t][0] * sx, path.points[t][1] * sy);
      ctx.stroke();
    }
    const here = path.points[this.frame];
    ctx.fillStyle = "#ffffff";
    ctx.beginPath();
    ctx.arc(here[0] * sx, here[1] * sy, 4, 0, Math.PI * 2);
    ctx.fill();
  }
}
