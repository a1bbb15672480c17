"""Annotation sessions: brush masks, phase timestamps, keypoint interpolation.

The rasterization and interpolation rules here are the single source of truth
for the browser client, which mirrors them for live preview; both sides must
produce identical results for identical inputs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from typing import Optional

import numpy as np


class AnnotationError(ValueError):
    pass


@dataclass
class Keypoint:
    phase: str  # "pre" | "inter" | "post"
    t: int  # frame, 1-indexed, inside the phase interval
    x: float
    y: float


@dataclass
class Stroke:
    points: list[tuple[float, float]]
    radius: float


PHASES = ("pre", "inter", "post")


def phase_interval(phase: str, frames: int, f1: int, f2: int) -> tuple[int, int]:
    """Inclusive frame interval of a phase; empty phases return (lo, hi) with lo > hi."""
    if phase == "pre":
        return 1, f1
    if phase == "inter":
        return f1 + 1, f2
    if phase == "post":
        return f2 + 1, frames
    raise AnnotationError(f"unknown phase {phase!r}")


def interpolate_keypoints(
    keypoints: list[Keypoint], frames: int, f1: int, f2: int
) -> np.ndarray:
    """Per-frame trajectory from per-phase keypoints.

    Within a phase, consecutive keypoints are linearly interpolated by frame;
    before the first and after the last the value holds. A phase without
    keypoints holds the previous phase's final value, so boundaries stay
    continuous.
    """
    if not (1 <= f1 <= f2 <= frames):
        raise AnnotationError(f"need 1 <= f1 <= f2 <= frames, got ({f1}, {f2}, {frames})")
    by_phase: dict[str, list[Keypoint]] = {p: [] for p in PHASES}
    for kp in keypoints:
        lo, hi = phase_interval(kp.phase, frames, f1, f2)
        if not (lo <= kp.t <= hi):
            raise AnnotationError(
                f"keypoint at frame {kp.t} lies outside its {kp.phase} interval [{lo}, {hi}]"
            )
        by_phase[kp.phase].append(kp)

    out = np.zeros((frames, 2), dtype=np.float64)
    current: Optional[tuple[float, float]] = None
    for phase in PHASES:
        lo, hi = phase_interval(phase, frames, f1, f2)
        if lo > hi:
            continue
        kps = sorted(by_phase[phase], key=lambda k: k.t)
        if not kps:
            if current is None:
                raise AnnotationError(f"phase '{phase}' has no keypoints and nothing to hold from")
            for t in range(lo, hi + 1):
                out[t - 1] = current
            continue
        for t in range(lo, hi + 1):
            if t <= kps[0].t:
                value = (kps[0].x, kps[0].y)
            elif t >= kps[-1].t:
                value = (kps[-1].x, kps[-1].y)
            else:
                for a, b in zip(kps, kps[1:]):
                    if a.t <= t <= b.t:
                        if a.t == b.t:
                            value = (b.x, b.y)
                        else:
                            w = (t - a.t) / (b.t - a.t)
                            value = (a.x + (b.x - a.x) * w, a.y + (b.y - a.y) * w)
                        break
            out[t - 1] = value
        current = (float(out[hi - 1, 0]), float(out[hi - 1, 1]))
    return out


def rasterize_strokes(strokes: list[Stroke], height: int, width: int) -> np.ndarray:
    """Mask of all pixels within a stroke radius of its polyline.

    A pixel (px, py) is set when its squared distance to the nearest point on
    any stroke segment is <= radius^2; single-point strokes stamp a disc.
    Pixels outside the image are clipped. The client mirrors this rule
    exactly.
    """
    mask = np.zeros((height, width), dtype=bool)
    for stroke in strokes:
        r = float(stroke.radius)
        if r < 0 or not stroke.points:
            continue
        pts = [(float(x), float(y)) for x, y in stroke.points]
        segments = list(zip(pts, pts[1:])) if len(pts) > 1 else [(pts[0], pts[0])]
        for (x0, y0), (x1, y1) in segments:
            lo_x = max(0, int(np.floor(min(x0, x1) - r)))
            hi_x = min(width - 1, int(np.ceil(max(x0, x1) + r)))
            lo_y = max(0, int(np.floor(min(y0, y1) - r)))
            hi_y = min(height - 1, int(np.ceil(max(y0, y1) + r)))
            dx, dy = x1 - x0, y1 - y0
            seg_len2 = dx * dx + dy * dy
            for py in range(lo_y, hi_y + 1):
                for px in range(lo_x, hi_x + 1):
                    if seg_len2 == 0:
                        qx, qy = x0, y0
                    else:
                        s = ((px - x0) * dx + (py - y0) * dy) / seg_len2
                        s = 0.0 if s < 0.0 else (1.0 if s > 1.0 else s)
                        qx, qy = x0 + s * dx, y0 + s * dy
                    if (px - qx) ** 2 + (py - qy) ** 2 <= r * r:
                        mask[py, px] = True
    return mask


@dataclass
class AnnotationSession:
    session_id: str
    frames: int
    width: int
    height: int
    prompt: Optional[str] = None
    f1: Optional[int] = None
    f2: Optional[int] = None
    keypoints: list[Keypoint] = field(default_factory=list)
    object_strokes: list[Stroke] = field(default_factory=list)
    robot_strokes: list[Stroke] = field(default_factory=list)
    has_object_mask: bool = False
    has_robot_mask: bool = False
    status: str = "draft"  # draft | generating | done | failed
    created_at: str = ""
    updated_at: str = ""
    generate_params: dict = field(default_factory=dict)
    error: Optional[str] = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["keypoints"] = [asdict(k) for k in self.keypoints]
        d["object_strokes"] = [asdict(s) for s in self.object_strokes]
        d["robot_strokes"] = [asdict(s) for s in self.robot_strokes]
        return d

    @staticmethod
    def from_dict(d: dict) -> "AnnotationSession":
        return AnnotationSession(
            session_id=d["session_id"],
            frames=d["frames"],
            width=d["width"],
            height=d["height"],
            prompt=d.get("prompt"),
            f1=d.get("f1"),
            f2=d.get("f2"),
            keypoints=[Keypoint(**k) for k in d.get("keypoints", [])],
            object_strokes=[
                Stroke(points=[tuple(p) for p in s["points"]], radius=s["radius"])
                for s in d.get("object_strokes", [])
            ],
            robot_strokes=[
                Stroke(points=[tuple(p) for p in s["points"]], radius=s["radius"])
                for s in d.get("robot_strokes", [])
            ],
            has_object_mask=d.get("has_object_mask", False),
            has_robot_mask=d.get("has_robot_mask", False),
            status=d.get("status", "draft"),
            created_at=d.get("created_at", ""),
            updated_at=d.get("updated_at", ""),
            generate_params=d.get("generate_params", {}),
            error=d.get("error"),
        )

    def missing_fields(self) -> list[str]:
        missing = []
        if not self.prompt:
            missing.append("prompt")
        if not self.has_object_mask:
            missing.append("object mask")
        if not self.has_robot_mask:
            missing.append("robot mask")
        if self.f1 is None or self.f2 is None:
            missing.append("phases")
        else:
            try:
                self.trajectory()
            except AnnotationError as exc:
                missing.append(f"keypoints ({exc})")
        return missing

    def trajectory(self) -> np.ndarray:
        if self.f1 is None or self.f2 is None:
            raise AnnotationError("phases not set")
        return interpolate_keypoints(self.keypoints, self.frames, self.f1, self.f2)
