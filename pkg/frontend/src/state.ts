/**
 * Editor state: a session mirror plus view state (active tool/phase,
 * playhead, undo stack for strokes). Every mutation keeps the state
 * serializable to a valid session payload.
 */

import type { Keypoint, Phase, Stroke } from "./geometry.js";
import { interpolateKeypoints, phaseInterval } from "./geometry.js";

export type Tool = "brush" | "robot-brush" | "keypoints" | "review";

export interface UiSessionState {
  sessionId: string | null;
  frames: number;
  width: number;
  height: number;
  prompt: string;
  f1: number;
  f2: number;
  keypoints: Keypoint[];
  objectStrokes: Stroke[];
  robotStrokes: Stroke[];
  // view state
  tool: Tool;
  activePhase: Phase;
  playhead: number; // 1-indexed frame
  zoom: number;
  brushRadius: number;
  overlayVisible: boolean;
}

export function defaultPhases(frames: number): [number, number] {
  return [Math.ceil(frames / 3), frames];
}

export function initialState(frames = 15, width = 64, height = 64): UiSessionState {
  const [f1, f2] = defaultPhases(frames);
  return {
    sessionId: null,
    frames,
    width,
    height,
    prompt: "",
    f1,
    f2,
    keypoints: [],
    objectStrokes: [],
    robotStrokes: [],
    tool: "brush",
    activePhase: "pre",
    playhead: 1,
    zoom: 6,
    brushRadius: 3,
    overlayVisible: true,
  };
}

export function addStroke(state: UiSessionState, stroke: Stroke, robot = false): UiSessionState {
  const key = robot ? "robotStrokes" : "objectStrokes";
  return { ...state, [key]: [...state[key], stroke] };
}

export function undoStroke(state: UiSessionState, robot = false): UiSessionState {
  const key = robot ? "robotStrokes" : "objectStrokes";
  return { ...state, [key]: state[key].slice(0, -1) };
}

export function setPhases(state: UiSessionState, f1: number, f2: number): UiSessionState {
  const lo = Math.max(1, Math.min(f1, state.frames));
  const hi = Math.max(lo, Math.min(f2, state.frames));
  // Keypoints whose phase interval no longer contains them are dropped.
  const keep = state.keypoints.filter((kp) => {
    const [a, b] = phaseInterval(kp.phase, state.frames, lo, hi);
    return a <= kp.t && kp.t <= b;
  });
  return { ...state, f1: lo, f2: hi, keypoints: keep };
}

export function addKeypoint(state: UiSessionState, kp: Keypoint): UiSessionState {
  const [lo, hi] = phaseInterval(kp.phase, state.frames, state.f1, state.f2);
  if (!(lo <= kp.t && kp.t <= hi)) {
    throw new Error(`frame ${kp.t} is outside the ${kp.phase} interval [${lo}, ${hi}]`);
  }
  return { ...state, keypoints: [...state.keypoints, kp] };
}

export function moveKeypoint(
  state: UiSessionState,
  index: number,
  x: number,
  y: number,
): UiSessionState {
  const keypoints = state.keypoints.map((kp, i) => (i === index ? { ...kp, x, y } : kp));
  return { ...state, keypoints };
}

export function deleteKeypoint(state: UiSessionState, index: number): UiSessionState {
  return { ...state, keypoints: state.keypoints.filter((_, i) => i !== index) };
}

export function clearPhaseKeypoints(state: UiSessionState, phase: Phase): UiSessionState {
  return { ...state, keypoints: state.keypoints.filter((kp) => kp.phase !== phase) };
}

/** Live overlay path, or null while the keypoints cannot interpolate yet. */
export function overlayPath(state: UiSessionState): [number, number][] | null {
  try {
    return interpolateKeypoints(state.keypoints, state.frames, state.f1, state.f2);
  } catch {
    return null;
  }
}

/** Body-compatible view of the editable session fields. */
export function toSessionPayload(state: UiSessionState): {
  prompt: string;
  f1: number;
  f2: number;
  keypoints: Keypoint[];
  object_strokes: Stroke[];
  robot_strokes: Stroke[];
} {
  return {
    prompt: state.prompt,
    f1: state.f1,
    f2: state.f2,
    keypoints: state.keypoints,
    object_strokes: state.objectStrokes,
    robot_strokes: state.robotStrokes,
  };
}
