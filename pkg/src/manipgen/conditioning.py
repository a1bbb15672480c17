"""Subject embeddings and the causally-propagated trajectory conditioning volume.

A subject (gripper or manipulated object) is summarized by the per-channel
average of the encoded first-frame latent over its downsampled mask, plus a
disc radius derived from the mask area. The conditioning volume V paints that
disc at the trajectory point of each latent timestep, copying the previous
timestep forward first, so painted content persists causally. Which subject
gets painted follows the interaction phase of the timestep's latest covered
frame: gripper before and after interaction, object during it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .codec import CodecConfig, frame_to_latent_index, latent_group_frames


class ConditioningError(ValueError):
    """Raised on invalid masks, centers, or trajectory data."""


class Phase(IntEnum):
    PRE = 0
    INTER = 1
    POST = 2


@dataclass(frozen=True)
class CollaborativeTrajectory:
    """Per-frame 2D path in image pixels, partitioned at frames f1 <= f2.

    Frames 1..f1 are pre-interaction (gripper-driven), f1+1..f2 interaction
    (object-driven), f2+1..F post-interaction (gripper again).
    """

    points: np.ndarray  # F x 2 float, (x, y) pixel coordinates
    f1: int
    f2: int

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        object.__setattr__(self, "points", pts)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 1:
            raise ConditioningError(f"trajectory must be F x 2, got {pts.shape}")
        if not (1 <= self.f1 <= self.f2 <= pts.shape[0]):
            raise ConditioningError(
                f"need 1 <= f1 <= f2 <= F, got f1={self.f1}, f2={self.f2}, F={pts.shape[0]}"
            )
        if not np.all(np.isfinite(pts)):
            raise ConditioningError("trajectory contains non-finite points")

    @property
    def frame_count(self) -> int:
        return self.points.shape[0]

    def phase_of_frame(self, t: int) -> Phase:
        if t <= self.f1:
            return Phase.PRE
        if t <= self.f2:
            return Phase.INTER
        return Phase.POST


@dataclass(frozen=True)
class SubjectEmbedding:
    vector: np.ndarray  # c floats
    radius: int  # latent cells
    mask_area: int  # valid latent cells
    role: str  # "dominant" | "submissive"


@dataclass(frozen=True)
class TrajectoryLatent:
    v: np.ndarray  # f x c x h x w float32
    phase_of_latent: np.ndarray  # f uint8, Phase values


def downsample_mask(mask: np.ndarray, c_s: int) -> np.ndarray:
    """Reduce an H x W binary mask to h x w by majority block coverage.

    A cell is valid when >= 50% of its c_s x c_s pixel block is valid. If
    that leaves a nonempty input mask with no valid cells, the single block
    with maximal coverage is promoted (row-major first on ties).
    """
    mask = np.asarray(mask).astype(bool)
    hh, ww = mask.shape
    if hh % c_s or ww % c_s:
        raise ConditioningError(f"mask {mask.shape} not divisible by factor {c_s}")
    counts = mask.reshape(hh // c_s, c_s, ww // c_s, c_s).sum(axis=(1, 3))
    out = counts * 2 >= c_s * c_s
    if mask.any() and not out.any():
        flat = np.argmax(counts)  # row-major argmax takes the first maximum
        out = np.zeros_like(out)
        out[np.unravel_index(flat, counts.shape)] = True
    return out


def masked_pool(z: np.ndarray, m: np.ndarray) -> np.ndarray:
    """Per-channel average of the c x h x w grid over valid cells of m."""
    m = np.asarray(m).astype(bool)
    if z.shape[1:] != m.shape:
        raise ConditioningError(f"latent {z.shape} and mask {m.shape} disagree")
    n = int(m.sum())
    if n == 0:
        raise ConditioningError("cannot pool over an empty mask")
    return z[:, m].sum(axis=1) / n


def radius_from_area(
    area: int, grid_h: int, grid_w: int, gamma: float = 0.5
) -> int:
    """Disc radius from mask area: round(gamma * sqrt(area)), clamped to
    [1, floor(min(h, w) / 2)]. Rounding is half-up."""
    if area < 1:
        raise ConditioningError(f"mask area must be >= 1, got {area}")
    r = math.floor(gamma * math.sqrt(area) + 0.5)
    return int(min(max(r, 1), min(grid_h, grid_w) // 2))


def subject_embedding(
    z: np.ndarray,
    mask: np.ndarray,
    role: str,
    c_s: int,
    gamma: float = 0.5,
) -> SubjectEmbedding:
    """Build a subject's pooled feature and disc radius from its pixel mask."""
    m = downsample_mask(mask, c_s)
    area = int(m.sum())
    if area == 0:
        raise ConditioningError(f"{role} mask is empty")
    vec = masked_pool(z, m)
    r = radius_from_area(area, z.shape[1], z.shape[2], gamma)
    return SubjectEmbedding(vector=vec.astype(np.float32), radius=r, mask_area=area, role=role)


def paint_circle(
    v_t: np.ndarray, center: tuple[int, int], radius: int, vector: np.ndarray
) -> np.ndarray:
    """Overwrite all channels of v_t (c x h x w) with `vector` on the disc
    (j - x)^2 + (k - y)^2 <= r^2, clipped to bounds. Mutates and returns v_t."""
    c, h, w = v_t.shape
    x, y = center
    if not (0 <= x < w and 0 <= y < h):
        raise ConditioningError(f"circle center {center} outside {w} x {h} grid")
    j0, j1 = max(0, x - radius), min(w - 1, x + radius)
    k0, k1 = max(0, y - radius), min(h - 1, y + radius)
    jj, kk = np.meshgrid(np.arange(j0, j1 + 1), np.arange(k0, k1 + 1))
    disc = (jj - x) ** 2 + (kk - y) ** 2 <= radius * radius
    v_t[:, kk[disc], jj[disc]] = np.asarray(vector, dtype=v_t.dtype)[:, None]
    return v_t


def assemble_collaborative_latent(
    z: np.ndarray,
    robot_mask: np.ndarray,
    object_mask: np.ndarray,
    trajectory: CollaborativeTrajectory,
    config: CodecConfig = CodecConfig(),
    gamma: float = 0.5,
) -> TrajectoryLatent:
    """Build the f x c x h x w conditioning volume from the encoded first
    frame, the two subject masks, and the collaborative trajectory.

    Each latent timestep copies the previous one, then paints the circle of
    the phase-owning subject at the (floor-divided) trajectory point of its
    latest covered frame, so the feature sequence over time runs
    gripper -> object -> gripper.
    """
    c_s, c_t = config.spatial_factor, config.temporal_factor
    frames = trajectory.frame_count
    f = config.latent_frames(frames)
    c, h, w = z.shape

    dom = subject_embedding(z, robot_mask, "dominant", c_s, gamma)
    sub = subject_embedding(z, object_mask, "submissive", c_s, gamma)

    pts = trajectory.points
    if np.any(pts[:, 0] < 0) or np.any(pts[:, 0] >= w * c_s) or np.any(
        pts[:, 1] < 0
    ) or np.any(pts[:, 1] >= h * c_s):
        raise ConditioningError("trajectory leaves the image bounds")

    v = np.zeros((f, c, h, w), dtype=np.float32)
    phases = np.zeros(f, dtype=np.uint8)
    prev = np.zeros((c, h, w), dtype=np.float32)
    for l in range(1, f + 1):
        step = prev.copy()
        t = latent_group_frames(l, c_t, frames)[-1]
        phase = trajectory.phase_of_frame(t)
        emb = sub if phase == Phase.INTER else dom
        cx = int(pts[t - 1, 0] // c_s)
        cy = int(pts[t - 1, 1] // c_s)
        paint_circle(step, (cx, cy), emb.radius, emb.vector)
        v[l - 1] = step
        phases[l - 1] = int(phase)
        prev = step
    return TrajectoryLatent(v=v, phase_of_latent=phases)


def phase_switch_latents(f1: int, f2: int, frames: int, c_t: int) -> list[int]:
    """Latent timesteps at which phase_of_latent changes value."""
    switches = []
    if f1 < frames:
        switches.append(frame_to_latent_index(f1 + 1, c_t))
    if f2 < frames:
        l2 = frame_to_latent_index(f2 + 1, c_t)
        if not switches or l2 != switches[-1]:
            switches.append(l2)
    return switches
