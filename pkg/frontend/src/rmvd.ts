/** Parser for the raw video container served by the backend. */

export interface RawVideo {
  frames: number;
  height: number;
  width: number;
  /** One RGB byte plane per frame, length height*width*3. */
  planes: Uint8Array[];
}

export function parseRmvd(buffer: ArrayBuffer): RawVideo {
  const view = new DataView(buffer);
  if (buffer.byteLength < 16) throw new Error("truncated video container");
  const magic = String.fromCharCode(
    view.getUint8(0),
    view.getUint8(1),
    view.getUint8(2),
    view.getUint8(3),
  );
  if (magic !== "RMVD") throw new Error(`bad magic ${magic}`);
  const frames = view.getUint32(4, true);
  const height = view.getUint32(8, true);
  const width = view.getUint32(12, true);
  const frameBytes = height * width * 3;
  if (buffer.byteLength !== 16 + frames * frameBytes) {
    throw new Error(
      `payload is ${buffer.byteLength - 16} bytes, expected ${frames * frameBytes}`,
    );
  }
  const planes: Uint8Array[] = [];
  for (let f = 0; f < frames; f++) {
    planes.push(new Uint8Array(buffer, 16 + f * frameBytes, frameBytes));
  }
  return { frames, height, width, planes };
}

/** Expand an RGB plane into RGBA pixels for ImageData. */
export function planeToRgba(plane: Uint8Array): Uint8ClampedArray<ArrayBuffer> {
  const pixels = plane.length / 3;
  const rgba = new Uint8ClampedArray(new ArrayBuffer(pixels * 4));
  for (let i = 0; i < pixels; i++) {
    rgba[i * 4] = plane[i * 3];
    rgba[i * 4 + 1] = plane[i * 3 + 1];
    rgba[i * 4 + 2] = plane[i * 3 + 2];
    rgba[i * 4 + 3] = 255;
  }
  return rgba;
}
