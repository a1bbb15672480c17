/**
 * Client-side mirrors of the server's interpolation and rasterization rules.
 *
 * These must stay numerically identical to the service implementations: the
 * live preview is trusted only because both sides compute the same IEEE-754
 * arithmetic in the same order. The parity test suite enforces this against
 * a running server.
 */

export type Phase = "pre" | "inter" | "post";

export interface Keypoint {
  phase: Phase;
  t: number; // frame, 1-indexed
  x: number;
  y: number;
}

export interface Stroke {
  points: [number, number][];
  radius: number;
}

export const PHASES: Phase[] = ["pre", "inter", "post"];

/** Inclusive frame interval of a phase; lo > hi means the phase is empty. */
export function phaseInterval(
  phase: Phase,
  frames: number,
  f1: number,
  f2: number,
): [number, number] {
  if (phase === "pre") return [1, f1];
  if (phase === "inter") return [f1 + 1, f2];
  return [f2 + 1, frames];
}

/**
 * Per-frame trajectory from per-phase keypoints: linear interpolation between
 * consecutive keypoints, hold before the first and after the last, and a
 * phase without keypoints holds the previous phase's final value.
 */
export function interpolateKeypoints(
  keypoints: Keypoint[],
  frames: number,
  f1: number,
  f2: number,
): [number, number][] {
  if (!(1 <= f1 && f1 <= f2 && f2 <= frames)) {
    throw new Error(`need 1 <= f1 <= f2 <= frames, got (${f1}, ${f2}, ${frames})`);
  }
  const byPhase: Record<Phase, Keypoint[]> = { pre: [], inter: [], post: [] };
  for (const kp of keypoints) {
    const [lo, hi] = phaseInterval(kp.phase, frames, f1, f2);
    if (!(lo <= kp.t && kp.t <= hi)) {
      throw new Error(
        `keypoint at frame ${kp.t} lies outside its ${kp.phase} interval [${lo}, ${hi}]`,
      );
    }
    byPhase[kp.phase].push(kp);
  }

  const out: [number, number][] = new Array(frames);
  let current: [number, number] | null = null;
  for (const phase of PHASES) {
    const [lo, hi] = phaseInterval(phase, frames, f1, f2);
    if (lo > hi) continue;
    const kps = [...byPhase[phase]].sort((a, b) => a.t - b.t);
    if (kps.length === 0) {
      if (current === null) {
        throw new Error(`phase '${phase}' has no keypoints and nothing to hold from`);
      }
      for (let t = lo; t <= hi; t++) out[t - 1] = current;
      continue;
    }
    for (let t = lo; t <= hi; t++) {
      let value: [number, number];
      if (t <= kps[0].t) {
        value = [kps[0].x, kps[0].y];
      } else if (t >= kps[kps.length - 1].t) {
        value = [kps[kps.length - 1].x, kps[kps.length - 1].y];
      } else {
        value = [NaN, NaN];
        for (let i = 0; i + 1 < kps.length; i++) {
          const a = kps[i];
          const b = kps[i + 1];
          if (a.t <= t && t <= b.t) {
            if (a.t === b.t) {
              value = [b.x, b.y];
            } else {
              const w = (t - a.t) / (b.t - a.t);
              value = [a.x + (b.x - a.x) * w, a.y + (b.y - a.y) * w];
            }
            break;
          }
        }
      }
      out[t - 1] = value;
    }
    current = [out[hi - 1][0], out[hi - 1][1]];
  }
  return out;
}

/**
 * Mask of all pixels within a stroke radius of its polyline; single-point
 * strokes stamp a disc. Matches the server rule pixel for pixel.
 */
export function rasterizeStrokes(
  strokes: Stroke[],
  height: number,
  width: number,
): Uint8Array {
  const mask = new Uint8Array(height * width);
  for (const stroke of strokes) {
    const r = stroke.radius;
    if (r < 0 || stroke.points.length === 0) continue;
    const pts = stroke.points;
    const segments: [[number, number], [number, number]][] =
      pts.length > 1
        ? pts.slice(0, -1).map((p, i) => [p, pts[i + 1]] as [[number, number], [number, number]])
        : [[pts[0], pts[0]]];
    for (const [[x0, y0], [x1, y1]] of segments) {
      const loX = Math.max(0, Math.floor(Math.min(x0, x1) - r));
      const hiX = Math.min(width - 1, Math.ceil(Math.max(x0, x1) + r));
      const loY = Math.max(0, Math.floor(Math.min(y0, y1) - r));
      const hiY = Math.min(height - 1, Math.ceil(Math.max(y0, y1) + r));
      const dx = x1 - x0;
      const dy = y1 - y0;
      const segLen2 = dx * dx + dy * dy;
      for (let py = loY; py <= hiY; py++) {
        for (let px = loX; px <= hiX; px++) {
          let qx: number;
          let qy: number;
          if (segLen2 === 0) {
            qx = x0;
            qy = y0;
          } else {
            let s = ((px - x0) * dx + (py - y0) * dy) / segLen2;
            s = s < 0 ? 0 : s > 1 ? 1 : s;
            qx = x0 + s * dx;
            qy = y0 + s * dy;
          }
          if ((px - qx) ** 2 + (py - qy) ** 2 <= r * r) {
            mask[py * width + px] = 1;
          }
        }
      }
    }
  }
  return mask;
}

/** Phase of a 1-indexed frame under the (f1, f2] interaction convention. */
export function phaseOfFrame(t: number, f1: number, f2: number): Phase {
  if (t <= f1) return "pre";
  if (t <= f2) return "inter";
  return "post";
}

/** Colors shared by the timeline and the trajectory overlay. */
export const PHASE_COLORS: Record<Phase, string> = {
  pre: "#4a9eff",
  inter: "#ff9f40",
  post: "#53d769",
};
