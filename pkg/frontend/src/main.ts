/**
 * Annotation workflow: upload a frame, brush the object mask, set the
 * interaction window on the timeline, drop per-phase keypoints with a live
 * interpolation preview, generate, and review with a trajectory overlay.
 */

import { AnnotatorApi, ApiError } from "./api.js";
import type { Keypoint, Phase, Stroke } from "./geometry.js";
import { KeypointEditor } from "./keypoints.js";
import { MaskTool } from "./masktool.js";
import { Player } from "./player.js";
import {
  addKeypoint,
  addStroke,
  clearPhaseKeypoints,
  defaultPhases,
  deleteKeypoint,
  initialState,
  moveKeypoint,
  overlayPath,
  setPhases,
  toSessionPayload,
  undoStroke,
  type UiSessionState,
} from "./state.js";

const api = new AnnotatorApi("");
let state: UiSessionState = initialState();
let imageB64: string | null = null;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  if (text) node.textContent = text;
  return node;
}

const root = document.getElementById("app")!;
const statusLine = el("div", { class: "status" }, "upload an initial frame to begin");
const errorLine = el("div", { class: "error" });

const stage = el("div", { class: "stage" });
const imageCanvas = el("canvas", { width: "384", height: "384", class: "layer" });
const maskCanvas = el("canvas", { width: "384", height: "384", class: "layer" });
const keypointCanvas = el("canvas", { width: "384", height: "384", class: "layer top" });
stage.append(imageCanvas, maskCanvas, keypointCanvas);

const playerCanvas = el("canvas", { width: "384", height: "384", class: "player" });
const timelineCanvas = el("canvas", { width: "384", height: "28" });

const controls = el("div", { class: "controls" });
const fileInput = el("input", { type: "file", accept: "image/png" });
const promptInput = el("input", {
  type: "text",
  placeholder: "prompt, e.g. pick up the red disc",
});
const phaseSelect = el("select");
for (const p of ["pre", "inter", "post"]) phaseSelect.append(el("option", { value: p }, p));
const toolSelect = el("select");
for (const t of ["brush", "keypoints", "review"]) toolSelect.append(el("option", { value: t }, t));
const robotBrushToggle = el("label", {}, "advanced: edit robot mask ");
const robotBrushCheckbox = el("input", { type: "checkbox" });
robotBrushToggle.prepend(robotBrushCheckbox);
const radiusInput = el("input", { type: "range", min: "1", max: "10", value: "3" });
const undoButton = el("button", {}, "undo stroke");
const clearPhaseButton = el("button", {}, "clear phase keypoints");
const generateButton = el("button", { disabled: "true" }, "generate");
const overlayToggle = el("button", {}, "overlay: on");
const refineButton = el("button", {}, "refine");
const playButton = el("button", {}, "play");

controls.append(
  fileInput, promptInput, toolSelect, phaseSelect, robotBrushToggle, radiusInput,
  undoButton, clearPhaseButton, generateButton, overlayToggle, playButton, refineButton,
);
root.append(statusLine, errorLine, controls, stage, timelineCanvas, playerCanvas);

const maskTool = new MaskTool(
  maskCanvas,
  state.width,
  state.height,
  () => Number(radiusInput.value),
  () => (robotBrushCheckbox.checked ? state.robotStrokes : state.objectStrokes),
  (stroke: Stroke) => {
    state = addStroke(state, stroke, robotBrushCheckbox.checked);
    void pushMask();
  },
);

const keypointEditor = new KeypointEditor(
  keypointCanvas,
  () => state,
  () => overlayPath(state),
  (kp: Keypoint) => {
    state = addKeypoint(state, kp);
    void pushKeypoints();
  },
  (i, x, y) => {
    state = moveKeypoint(state, i, x, y);
    scheduleKeypointPush();
  },
  (message) => showError(message),
);

const player = new Player(playerCanvas, 8, () =>
  state.f1 && overlayPath(state)
    ? { points: overlayPath(state)!, f1: state.f1, f2: state.f2 }
    : null,
);

import { Timeline } from "./timeline.js";
const timeline = new Timeline(
  timelineCanvas,
  () => ({ frames: state.frames, f1: state.f1, f2: state.f2, playhead: state.playhead }),
  (update) => {
    if (update.playhead !== undefined) {
      state = { ...state, playhead: update.playhead };
      player.seek(update.playhead);
    }
    if (update.f1 !== undefined || update.f2 !== undefined) {
      state = setPhases(state, update.f1 ?? state.f1, update.f2 ?? state.f2);
      void pushPhases();
    }
    keypointEditor.render();
  },
);

function showError(message: string) {
  errorLine.textContent = message;
  setTimeout(() => {
    if (errorLine.textContent === message) errorLine.textContent = "";
  }, 4000);
}

function setStatus(message: string) {
  statusLine.textContent = message;
}

async function refreshCompleteness() {
  if (!state.sessionId) return;
  const payload = toSessionPayload(state);
  const ready =
    payload.prompt.length > 0 &&
    state.objectStrokes.length > 0 &&
    overlayPath(state) !== null;
  if (ready) {
    generateButton.removeAttribute("disabled");
    setStatus("session complete: ready to generate");
  } else {
    generateButton.setAttribute("disabled", "true");
    const missing = [
      payload.prompt ? null : "prompt",
      state.objectStrokes.length ? null : "object mask",
      overlayPath(state) ? null : "keypoints",
    ].filter(Boolean);
    setStatus(`missing: ${missing.join(", ")}`);
  }
}

async function pushMask() {
  if (!state.sessionId) return;
  const robot = robotBrushCheckbox.checked;
  const strokes = robot ? state.robotStrokes : state.objectStrokes;
  maskTool.renderPreview(strokes, robot ? [80, 160, 255] : [255, 64, 64]);
  await api.putMask(state.sessionId, { strokes }, robot).catch((e) => showError(String(e)));
  void refreshCompleteness();
}

async function pushPhases() {
  if (!state.sessionId) return;
  await api.putPhases(state.sessionId, state.f1, state.f2).catch((e) => showError(String(e)));
  await pushKeypoints();
}

let keypointPushTimer: ReturnType<typeof setTimeout> | null = null;
function scheduleKeypointPush() {
  if (keypointPushTimer) clearTimeout(keypointPushTimer);
  keypointPushTimer = setTimeout(() => void pushKeypoints(), 150);
}

async function pushKeypoints() {
  if (!state.sessionId) return;
  await api.putKeypoints(state.sessionId, state.keypoints).catch((e) => showError(String(e)));
  keypointEditor.render();
  void refreshCompleteness();
}

fileInput.addEventListener("change", async () => {
  const file = fileInput.files?.[0];
  if (!file) return;
  const bytes = new Uint8Array(await file.arrayBuffer());
  let binary = "";
  bytes.forEach((b) => (binary += String.fromCharCode(b)));
  imageB64 = btoa(binary);
  const { id } = await api.createSession(imageB64, state.frames);
  const session = await api.getSession(id);
  const [f1, f2] = defaultPhases(session.frames);
  state = {
    ...initialState(session.frames, session.width, session.height),
    sessionId: id,
    f1,
    f2,
  };
  await api.putPhases(id, f1, f2);
  const img = new Image();
  img.onload = () => {
    const ctx = imageCanvas.getContext("2d")!;
    ctx.imageSmoothingEnabled = false;
    ctx.drawImage(img, 0, 0, imageCanvas.width, imageCanvas.height);
  };
  img.src = `data:image/png;base64,${imageB64}`;
  timeline.render();
  setStatus(`session ${id}: brush the object mask`);
});

promptInput.addEventListener("change", async () => {
  state = { ...state, prompt: promptInput.value };
  if (state.sessionId) {
    await api.putPrompt(state.sessionId, state.prompt).catch((e) => showError(String(e)));
  }
  void refreshCompleteness();
});

phaseSelect.addEventListener("change", () => {
  state = { ...state, activePhase: phaseSelect.value as Phase };
});

toolSelect.addEventListener("change", () => {
  state = { ...state, tool: toolSelect.value as UiSessionState["tool"] };
  keypointCanvas.style.pointerEvents = state.tool === "keypoints" ? "auto" : "none";
  maskCanvas.style.pointerEvents = state.tool === "brush" ? "auto" : "none";
});
keypointCanvas.style.pointerEvents = "none";

undoButton.addEventListener("click", () => {
  state = undoStroke(state, robotBrushCheckbox.checked);
  void pushMask();
});

clearPhaseButton.addEventListener("click", () => {
  state = clearPhaseKeypoints(state, state.activePhase);
  void pushKeypoints();
});

overlayToggle.addEventListener("click", () => {
  player.overlay = !player.overlay;
  state = { ...state, overlayVisible: !state.overlayVisible };
  overlayToggle.textContent = `overlay: ${player.overlay ? "on" : "off"}`;
  keypointEditor.render();
  player.seek(state.playhead);
});

playButton.addEventListener("click", () => {
  if (playButton.textContent === "play") {
    player.play();
    playButton.textContent = "pause";
  } else {
    player.pause();
    playButton.textContent = "play";
  }
});

refineButton.addEventListener("click", () => {
  player.pause();
  playButton.textContent = "play";
  setStatus("editing: state intact, regenerate when ready");
});

generateButton.addEventListener("click", async () => {
  if (!state.sessionId) return;
  try {
    await api.generate(state.sessionId, { seed: 0 });
    setStatus("generating...");
    const status = await api.waitDone(state.sessionId);
    if (status === "failed") {
      const s = await api.getStatus(state.sessionId);
      showError(`generation failed: ${s.error}`);
      return;
    }
    const video = await api.getVideo(state.sessionId);
    player.load(video);
    player.play();
    playButton.textContent = "pause";
    setStatus(`playing ${player.frameCount} frames; use refine to keep editing`);
  } catch (err) {
    if (err instanceof ApiError && err.status === 409) {
      const detail = err.detail as { missing?: string[] };
      showError(`incomplete: ${detail.missing?.join(", ") ?? JSON.stringify(err.detail)}`);
    } else {
      showError(String(err));
    }
  }
});

setStatus("upload an initial frame to begin");
