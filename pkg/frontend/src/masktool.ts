/** Canvas brush tool: captures strokes and previews the rasterized mask. */

import { rasterizeStrokes, type Stroke } from "./geometry.js";

export class MaskTool {
  private drawing = false;
  private current: [number, number][] = [];

  constructor(
    private canvas: HTMLCanvasElement,
    private width: number,
    private height: number,
    private getRadius: () => number,
    private getStrokes: () => Stroke[],
    private onStroke: (stroke: Stroke) => void,
  ) {
    canvas.addEventListener("pointerdown", (e) => this.start(e));
    canvas.addEventListener("pointermove", (e) => this.move(e));
    canvas.addEventListener("pointerup", () => this.finish());
    canvas.addEventListener("pointerleave", () => this.finish());
  }

  private toImage(e: PointerEvent): [number, number] {
    const rect = this.canvas.getBoundingClientRect();
    const x = ((e.clientX - rect.left) / rect.width) * this.width;
    const y = ((e.clientY - rect.top) / rect.height) * this.height;
    return [x, y];
  }

  private start(e: PointerEvent) {
    this.drawing = true;
    this.current = [this.toImage(e)];
    this.canvas.setPointerCapture(e.pointerId);
  }

  private move(e: PointerEvent) {
    if (!this.drawing) return;
    this.current.push(this.toImage(e));
    this.renderPreview([...this.getStrokes(), { points: this.current, radius: this.getRadius() }]);
  }

  private finish() {
    if (!this.drawing) return;
    this.drawing = false;
    if (this.current.length > 0) {
      this.onStroke({ points: this.current, radius: this.getRadius() });
    }
    this.current = [];
  }

  /** Paint the mask overlay; identical pixels to the server's raster. */
  renderPreview(strokes: Stroke[], color: [number, number, number] = [255, 64, 64]) {
    const ctx = this.canvas.getContext("2d")!;
    ctx.clearRect(0, 0, this.canvas.width, this.canvas.height);
    const mask = rasterizeStrokes(strokes, this.height, this.width);
    const image = ctx.createImageData(this.width, this.height);
    for (let i = 0; i < mask.length; i++) {
      if (mask[i]) {
        image.data[i * 4] = color[0];
        image.data[i * 4 + 1] = color[1];
        image.data[i * 4 + 2] = color[2];
        image.data[i * 4 + 3] = 110;
      }
    }
    createImageBitmap(image).then((bitmap) => {
      ctx.imageSmoothingEnabled = false;
      ctx.drawImage(bitmap, 0, 0, this.canvas.width, this.canvas.height);
    });
  }
}
