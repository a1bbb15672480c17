"""Annotation and generation HTTP service backing the browser UI.

Sessions persist as JSON + PNG files under the store directory; generation
runs on a single worker thread (one job per session at a time). The CLI and
the service share the same generation code path, so identical inputs and
seeds produce identical bytes.
"""

from __future__ import annotations

import base64
import os
import queue
import subprocess
import threading
import uuid
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from fastapi import FastAPI, HTTPException, Response
from pydantic import BaseModel, Field

from .annotation import AnnotationError, AnnotationSession, Keypoint, Stroke, rasterize_strokes
from .conditioning import CollaborativeTrajectory, ConditioningError
from .curation import AnnotatedSample
from .formats import (
    decode_image_png,
    decode_mask_png,
    image_png_bytes,
    mask_png_bytes,
    write_rmvd,
)

TRANSCODER_ENV = "MANIPGEN_TRANSCODER"

Generator = Callable[[AnnotatedSample, dict], np.ndarray]


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


class SessionStore:
    """Directory-backed session state with per-session write locks."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._guard = threading.Lock()

    def lock(self, session_id: str) -> threading.Lock:
        with self._guard:
            return self._locks.setdefault(session_id, threading.Lock())

    def path(self, session_id: str) -> Path:
        return self.root / session_id

    def exists(self, session_id: str) -> bool:
        return (self.path(session_id) / "session.json").exists()

    def save(self, session: AnnotationSession) -> None:
        import json

        d = self.path(session.session_id)
        d.mkdir(parents=True, exist_ok=True)
        tmp = d / "session.json.tmp"
        tmp.write_text(json.dumps(session.to_dict(), sort_keys=True))
        tmp.replace(d / "session.json")

    def load(self, session_id: str) -> AnnotationSession:
        import json

        p = self.path(session_id) / "session.json"
        if not p.exists():
            raise KeyError(session_id)
        return AnnotationSession.from_dict(json.loads(p.read_text()))

    def write_blob(self, session_id: str, name: str, data: bytes) -> None:
        d = self.path(session_id)
        d.mkdir(parents=True, exist_ok=True)
        (d / name).write_bytes(data)

    def read_blob(self, session_id: str, name: str) -> bytes:
        p = self.path(session_id) / name
        if not p.exists():
            raise KeyError(name)
        return p.read_bytes()


class CreateSession(BaseModel):
    image: str = Field(description="base64 PNG of the initial frame")
    frames: int = Field(default=15, ge=2)


class PromptBody(BaseModel):
    prompt: str


class MaskBody(BaseModel):
    strokes: Optional[list[dict]] = None
    png: Optional[str] = None


class PhasesBody(BaseModel):
    f1: int = Field(ge=1)
    f2: int = Field(ge=1)


class KeypointsBody(BaseModel):
    keypoints: list[dict]


class GenerateBody(BaseModel):
    steps: int = Field(default=50, ge=1)
    cfg_scale: float = Field(default=6.0, ge=0.0)
    seed: int = 0


def session_sample(
    session: AnnotationSession,
    image: np.ndarray,
    robot_mask: np.ndarray,
    object_mask: np.ndarray,
) -> AnnotatedSample:
    """Materialize the model input for a complete session."""
    trajectory = CollaborativeTrajectory(
        points=session.trajectory(), f1=session.f1, f2=session.f2
    )
    return AnnotatedSample(
        sample_id=session.session_id,
        init_frame=image,
        prompt=session.prompt,
        robot_mask=robot_mask,
        object_mask=object_mask,
        trajectory=trajectory,
    )


def sample_from_session_payload(
    payload: dict, init_frame: np.ndarray | None = None
) -> AnnotatedSample:
    """Build the model input from an exported session payload (the body of
    GET /sessions/{id}): image and masks as base64 PNG, phases, and either
    keypoints or an explicit trajectory. The CLI and the service share this
    path, so both produce identical videos for identical inputs."""
    if init_frame is None:
        if "image" not in payload or payload["image"] is None:
            raise AnnotationError("payload has no image")
        init_frame = decode_image_png(base64.b64decode(payload["image"]))
    session = AnnotationSession.from_dict(
        {
            **payload,
            "session_id": payload.get("session_id", payload.get("id", "annotation")),
            "frames": payload.get("frames", 15),
            "height": payload.get("height", init_frame.shape[0]),
            "width": payload.get("width", init_frame.shape[1]),
        }
    )
    robot_mask = decode_mask_png(base64.b64decode(payload["robot_mask"]))
    object_mask = decode_mask_png(base64.b64decode(payload["object_mask"]))
    if session.f1 is None or session.f2 is None:
        raise AnnotationError("payload has no phase boundaries")
    if payload.get("trajectory"):
        points = np.asarray(payload["trajectory"], dtype=np.float64)
    else:
        points = session.trajectory()
    trajectory = CollaborativeTrajectory(points=points, f1=session.f1, f2=session.f2)
    return AnnotatedSample(
        sample_id=session.session_id,
        init_frame=init_frame,
        prompt=session.prompt,
        robot_mask=robot_mask,
        object_mask=object_mask,
        trajectory=trajectory,
    )


def stub_generator(sample: AnnotatedSample, params: dict) -> np.ndarray:
    """Deterministic fast stand-in for the diffusion model: repeats the init
    frame and paints a dot along the trajectory."""
    frames = sample.trajectory.frame_count
    video = np.repeat(sample.init_frame[None], frames, axis=0).copy()
    h, w = video.shape[1:3]
    for t in range(frames):
        x, y = (int(round(v)) for v in sample.trajectory.points[t])
        y0, y1 = max(0, y - 1), min(h, y + 2)
        x0, x1 = max(0, x - 1), min(w, x + 2)
        video[t, y0:y1, x0:x1] = (255, 255, 255)
    return video


def checkpoint_generator(checkpoint_path: str) -> Generator:
    from .diffusion import load_checkpoint
    from .diffusion.generate import generate_video

    state = load_checkpoint(checkpoint_path)

    def run(sample: AnnotatedSample, params: dict) -> np.ndarray:
        return generate_video(
            state,
            sample,
            steps=params.get("steps", 50),
            cfg_scale=params.get("cfg_scale", 6.0),
            seed=params.get("seed", 0),
        )

    return run


def create_app(
    store_dir: str | Path,
    generator: Generator | None = None,
    robot_mask_preset: str | Path | None = None,
) -> FastAPI:
    app = FastAPI(title="manipgen annotation service")
    store = SessionStore(store_dir)
    generate_fn = generator or stub_generator
    jobs: queue.Queue[str] = queue.Queue()
    preset_bytes = Path(robot_mask_preset).read_bytes() if robot_mask_preset else None

    def worker() -> None:
        while True:
            sid = jobs.get()
            if sid is None:
                return
            try:
                session = store.load(sid)
                image = decode_image_png(store.read_blob(sid, "image.png"))
                robot_mask = decode_mask_png(store.read_blob(sid, "robot_mask.png"))
                object_mask = decode_mask_png(store.read_blob(sid, "object_mask.png"))
                sample = session_sample(session, image, robot_mask, object_mask)
                video = generate_fn(sample, session.generate_params)
                store.write_blob(sid, "video.raw", write_rmvd(video))
                with store.lock(sid):
                    session = store.load(sid)
                    session.status = "done"
                    session.updated_at = _now()
                    store.save(session)
            except Exception as exc:
                with store.lock(sid):
                    session = store.load(sid)
                    session.status = "failed"
                    session.error = str(exc)
                    session.updated_at = _now()
                    store.save(session)
            finally:
                jobs.task_done()

    thread = threading.Thread(target=worker, daemon=True)
    thread.start()
    app.state.worker = thread
    app.state.jobs = jobs

    def get_session(session_id: str) -> AnnotationSession:
        try:
            return store.load(session_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id}")

    def mutate(session_id: str, fn) -> AnnotationSession:
        with store.lock(session_id):
            session = get_session(session_id)
            if session.status == "generating":
                raise HTTPException(status_code=409, detail="session busy: generation in progress")
            fn(session)
            if session.status == "done":
                session.status = "draft"  # edits invalidate the last video
            session.updated_at = _now()
            store.save(session)
            return session

    @app.get("/health")
    def health():
        return {"ok": True}

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSession):
        try:
            image = decode_image_png(base64.b64decode(body.image))
        except Exception:
            raise HTTPException(status_code=422, detail="image is not a decodable PNG")
        sid = uuid.uuid4().hex[:12]
        session = AnnotationSession(
            session_id=sid,
            frames=body.frames,
            width=image.shape[1],
            height=image.shape[0],
            created_at=_now(),
            updated_at=_now(),
        )
        store.write_blob(sid, "image.png", image_png_bytes(image))
        if preset_bytes is not None:
            store.write_blob(sid, "robot_mask.png", preset_bytes)
            session.has_robot_mask = True
        store.save(session)
        return {"id": sid}

    @app.get("/sessions/{session_id}")
    def read_session(session_id: str):
        session = get_session(session_id)
        payload = session.to_dict()
        payload["image"] = base64.b64encode(store.read_blob(session_id, "image.png")).decode()
        for name, key in (("object_mask.png", "object_mask"), ("robot_mask.png", "robot_mask")):
            try:
                payload[key] = base64.b64encode(store.read_blob(session_id, name)).decode()
            except KeyError:
                payload[key] = None
        return payload

    @app.put("/sessions/{session_id}/prompt")
    def put_prompt(session_id: str, body: PromptBody):
        mutate(session_id, lambda s: setattr(s, "prompt", body.prompt))
        return {"ok": True}

    def apply_mask(session_id: str, body: MaskBody, which: str):
        with store.lock(session_id):
            session = get_session(session_id)
            if session.status == "generating":
                raise HTTPException(status_code=409, detail="session busy: generation in progress")
            if body.png is not None:
                try:
                    mask = decode_mask_png(base64.b64decode(body.png))
                except Exception:
                    raise HTTPException(status_code=422, detail="mask is not a decodable PNG")
                if mask.shape != (session.height, session.width):
                    raise HTTPException(status_code=422, detail="mask size disagrees with image")
                strokes = []
            elif body.strokes is not None:
                try:
                    strokes = [
                        Stroke(points=[tuple(p) for p in s["points"]], radius=float(s["radius"]))
                        for s in body.strokes
                    ]
                except (KeyError, TypeError, ValueError):
                    raise HTTPException(status_code=422, detail="strokes need points and radius")
                mask = rasterize_strokes(strokes, session.height, session.width)
            else:
                raise HTTPException(status_code=422, detail="provide strokes or png")
            store.write_blob(session_id, f"{which}_mask.png", mask_png_bytes(mask))
            if which == "object":
                session.object_strokes = strokes
                session.has_object_mask = bool(mask.any())
            else:
                session.robot_strokes = strokes
                session.has_robot_mask = bool(mask.any())
            if session.status == "done":
                session.status = "draft"
            session.updated_at = _now()
            store.save(session)
        return {"ok": True, "valid_pixels": int(mask.sum())}

    @app.put("/sessions/{session_id}/mask")
    def put_mask(session_id: str, body: MaskBody):
        return apply_mask(session_id, body, "object")

    @app.put("/sessions/{session_id}/robot-mask")
    def put_robot_mask(session_id: str, body: MaskBody):
        return apply_mask(session_id, body, "robot")

    @app.put("/sessions/{session_id}/phases")
    def put_phases(session_id: str, body: PhasesBody):
        session = get_session(session_id)
        if not (1 <= body.f1 <= body.f2 <= session.frames):
            raise HTTPException(
                status_code=422,
                detail=f"need 1 <= f1 <= f2 <= {session.frames}",
            )
        mutate(session_id, lambda s: (setattr(s, "f1", body.f1), setattr(s, "f2", body.f2)))
        return {"ok": True}

    @app.put("/sessions/{session_id}/keypoints")
    def put_keypoints(session_id: str, body: KeypointsBody):
        try:
            kps = [
                Keypoint(phase=k["phase"], t=int(k["t"]), x=float(k["x"]), y=float(k["y"]))
                for k in body.keypoints
            ]
        except (KeyError, TypeError, ValueError):
            raise HTTPException(status_code=422, detail="keypoints need phase, t, x, y")
        session = get_session(session_id)
        if session.f1 is not None and session.f2 is not None:
            for kp in kps:
                from .annotation import phase_interval

                lo, hi = phase_interval(kp.phase, session.frames, session.f1, session.f2)
                if not (lo <= kp.t <= hi):
                    raise HTTPException(
                        status_code=422,
                        detail=f"keypoint at frame {kp.t} outside its {kp.phase} interval [{lo}, {hi}]",
                    )
        mutate(session_id, lambda s: setattr(s, "keypoints", kps))
        return {"ok": True}

    @app.get("/sessions/{session_id}/trajectory")
    def get_trajectory(session_id: str):
        session = get_session(session_id)
        try:
            points = session.trajectory()
        except AnnotationError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        return {"points": points.tolist(), "f1": session.f1, "f2": session.f2}

    @app.post("/sessions/{session_id}/generate", status_code=202)
    def generate(session_id: str, body: GenerateBody):
        with store.lock(session_id):
            session = get_session(session_id)
            if session.status == "generating":
                raise HTTPException(status_code=409, detail="session busy: generation in progress")
            missing = session.missing_fields()
            if missing:
                raise HTTPException(
                    status_code=409,
                    detail={"message": "session incomplete", "missing": missing},
                )
            session.status = "generating"
            session.generate_params = {
                "steps": body.steps,
                "cfg_scale": body.cfg_scale,
                "seed": body.seed,
            }
            session.updated_at = _now()
            store.save(session)
        jobs.put(session_id)
        return {"status": "accepted"}

    @app.get("/sessions/{session_id}/status")
    def get_status(session_id: str):
        session = get_session(session_id)
        return {"status": session.status, "error": session.error}

    @app.get("/sessions/{session_id}/video")
    def get_video(session_id: str, format: str = "rmvd"):
        session = get_session(session_id)
        if session.status != "done":
            raise HTTPException(status_code=409, detail=f"no video: session is {session.status}")
        data = store.read_blob(session_id, "video.raw")
        if format == "rmvd":
            return Response(content=data, media_type="application/octet-stream")
        if format == "mp4":
            binary = os.environ.get(TRANSCODER_ENV)
            if not binary:
                raise HTTPException(status_code=409, detail=f"set {TRANSCODER_ENV} to enable mp4")
            from .formats import read_rmvd

            video = read_rmvd(data)
            f, h, w, _ = video.shape
            proc = subprocess.run(
                [
                    binary, "-y", "-f", "rawvideo", "-pix_fmt", "rgb24",
                    "-s", f"{w}x{h}", "-r", "8", "-i", "-",
                    "-f", "mp4", "-movflags", "frag_keyframe+empty_moov", "-",
                ],
                input=video.tobytes(),
                capture_output=True,
            )
            if proc.returncode != 0:
                raise HTTPException(status_code=500, detail="transcoder failed")
            return Response(content=proc.stdout, media_type="video/mp4")
        raise HTTPException(status_code=422, detail=f"unknown format {format!r}")

    @app.get("/sessions/{session_id}/object-mask.raw")
    def get_object_mask_raw(session_id: str):
        get_session(session_id)
        try:
            mask = decode_mask_png(store.read_blob(session_id, "object_mask.png"))
        except KeyError:
            raise HTTPException(status_code=404, detail="no object mask yet")
        return Response(content=mask.astype(np.uint8).tobytes(), media_type="application/octet-stream")

    @app.get("/sessions/{session_id}/robot-mask.raw")
    def get_robot_mask_raw(session_id: str):
        get_session(session_id)
        try:
            mask = decode_mask_png(store.read_blob(session_id, "robot_mask.png"))
        except KeyError:
            raise HTTPException(status_code=404, detail="no robot mask yet")
        return Response(content=mask.astype(np.uint8).tobytes(), media_type="application/octet-stream")

    return app
