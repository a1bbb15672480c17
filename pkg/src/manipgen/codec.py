"""Deterministic, lossless, causal video <-> latent transform.

Frame 1 maps alone to latent timestep 1 (space-to-depth, channels
zero-padded); every following group of ``temporal_factor`` frames maps to one
latent timestep (space-to-depth per frame, channels concatenated). The
transform is a pure permutation plus zero padding, so decode(encode(X)) is
bit-exact and latent timestep l depends only on frames up to the last frame
of group l.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class CodecError(ValueError):
    """Raised on shape or configuration violations."""


@dataclass(frozen=True)
class CodecConfig:
    spatial_factor: int = 4
    temporal_factor: int = 2

    @property
    def channels(self) -> int:
        """Latent channels: 3 * c_s^2 * c_t, sized for a full frame group."""
        return 3 * self.spatial_factor**2 * self.temporal_factor

    def latent_frames(self, frame_count: int) -> int:
        if (frame_count - 1) % self.temporal_factor != 0:
            raise CodecError(
                f"frame count {frame_count} is not 1 + k*{self.temporal_factor}"
            )
        return 1 + (frame_count - 1) // self.temporal_factor

    def validate_video_shape(self, frames: int, height: int, width: int) -> None:
        if height % self.spatial_factor or width % self.spatial_factor:
            raise CodecError(
                f"H={height}, W={width} not divisible by spatial factor {self.spatial_factor}"
            )
        self.latent_frames(frames)


@dataclass(frozen=True)
class LatentVideo:
    x: np.ndarray  # f x c x h x w, float32
    config: CodecConfig


def frames_to_unit(video: np.ndarray) -> np.ndarray:
    """uint8 frames -> float32 in [-1, 1]."""
    return (video.astype(np.float32) / 127.5) - 1.0


def unit_to_frames(x: np.ndarray) -> np.ndarray:
    """float32 in [-1, 1] -> uint8 frames (clamped, rounded)."""
    return np.clip(np.round((x + 1.0) * 127.5), 0, 255).astype(np.uint8)


def _space_to_depth(frame: np.ndarray, c_s: int) -> np.ndarray:
    """H x W x 3 -> (3*c_s^2) x h x w; out channel = ch*c_s^2 + dy*c_s + dx."""
    hh, ww, _ = frame.shape
    h, w = hh // c_s, ww // c_s
    blocks = frame.reshape(h, c_s, w, c_s, 3)
    return blocks.transpose(4, 1, 3, 0, 2).reshape(3 * c_s * c_s, h, w)


def _depth_to_space(latent: np.ndarray, c_s: int) -> np.ndarray:
    c3, h, w = latent.shape
    blocks = latent.reshape(3, c_s, c_s, h, w)
    return blocks.transpose(3, 1, 4, 2, 0).reshape(h * c_s, w * c_s, 3)


def encode_frame(frame: np.ndarray, config: CodecConfig = CodecConfig()) -> np.ndarray:
    """Encode one H x W x 3 frame in [-1, 1] to a c x h x w latent grid.

    This is the latent-timestep-1 layout: real values in the first
    3*c_s^2 channels, zeros in the rest.
    """
    if frame.ndim != 3 or frame.shape[2] != 3:
        raise CodecError(f"expected H x W x 3 frame, got {frame.shape}")
    config.validate_video_shape(1, frame.shape[0], frame.shape[1])
    c_s = config.spatial_factor
    real = _space_to_depth(np.asarray(frame, dtype=np.float32), c_s)
    z = np.zeros((config.channels, real.shape[1], real.shape[2]), dtype=np.float32)
    z[: real.shape[0]] = real
    return z


def encode(video: np.ndarray, config: CodecConfig = CodecConfig()) -> LatentVideo:
    """Encode F x H x W x 3 frames in [-1, 1] into an f x c x h x w latent video."""
    if video.ndim != 4 or video.shape[3] != 3:
        raise CodecError(f"expected F x H x W x 3 video, got {video.shape}")
    frames, height, width, _ = video.shape
    config.validate_video_shape(frames, height, width)
    c_s, c_t = config.spatial_factor, config.temporal_factor
    f = config.latent_frames(frames)
    video = np.asarray(video, dtype=np.float32)

    x = np.zeros((f, config.channels, height // c_s, width // c_s), dtype=np.float32)
    x[0] = encode_frame(video[0], config)
    per_frame = 3 * c_s * c_s
    for l in range(1, f):
        group = video[1 + (l - 1) * c_t : 1 + l * c_t]
        for k in range(c_t):
            x[l, k * per_frame : (k + 1) * per_frame] = _space_to_depth(group[k], c_s)
    return LatentVideo(x=x, config=config)


def decode(latent: LatentVideo) -> np.ndarray:
    """Exact inverse of :func:`encode`; drops the frame-1 padding channels."""
    x, config = latent.x, latent.config
    c_s, c_t = config.spatial_factor, config.temporal_factor
    if x.ndim != 4 or x.shape[1] != config.channels:
        raise CodecError(
            f"latent has {x.shape} but config expects {config.channels} channels"
        )
    f, _, h, w = x.shape
    frames = 1 + (f - 1) * c_t
    per_frame = 3 * c_s * c_s
    video = np.zeros((frames, h * c_s, w * c_s, 3), dtype=np.float32)
    video[0] = _depth_to_space(x[0, :per_frame], c_s)
    for l in range(1, f):
        for k in range(c_t):
            video[1 + (l - 1) * c_t + k] = _depth_to_space(
                x[l, k * per_frame : (k + 1) * per_frame], c_s
            )
    return video


def frame_to_latent_index(t: int, c_t: int) -> int:
    """Latent timestep (1-indexed) covering frame t (1-indexed).

    Frame 1 sits alone in latent 1; latent l >= 2 covers frames
    2 + (l-2)*c_t .. 1 + (l-1)*c_t.
    """
    if t < 1:
        raise CodecError(f"frame index must be >= 1, got {t}")
    if t == 1:
        return 1
    return 2 + (t - 2) // c_t


def latent_group_frames(l: int, c_t: int, frame_count: int) -> list[int]:
    """1-indexed frames covered by latent timestep l."""
    if l == 1:
        return [1]
    first = 2 + (l - 2) * c_t
    return [t for t in range(first, first + c_t) if t <= frame_count]


def patchify(x: np.ndarray) -> np.ndarray:
    """f x c x h x w -> (f/2 * h/2 * w/2) x 8c tokens.

    Tokens are ordered t-major, then rows, then cols. Within a token the
    channel layout is ((dt*2 + dj)*2 + dk)*c + ch for the 2x2x2 block
    offsets (dt, dj, dk) and source channel ch.
    """
    f, c, h, w = x.shape
    if f % 2 or h % 2 or w % 2:
        raise CodecError(f"patchify needs even dims, got f={f}, h={h}, w={w}")
    blocks = x.reshape(f // 2, 2, c, h // 2, 2, w // 2, 2)
    # (ft, hr, wc, dt, dj, dk, c)
    tokens = blocks.transpose(0, 3, 5, 1, 4, 6, 2)
    return np.ascontiguousarray(tokens.reshape(f // 2 * (h // 2) * (w // 2), 8 * c))


def unpatchify(tokens: np.ndarray, f: int, c: int, h: int, w: int) -> np.ndarray:
    """Exact inverse of :func:`patchify`."""
    expected = (f // 2) * (h // 2) * (w // 2)
    if tokens.shape != (expected, 8 * c):
        raise CodecError(
            f"tokens have shape {tokens.shape}, expected ({expected}, {8 * c})"
        )
    blocks = tokens.reshape(f // 2, h // 2, w // 2, 2, 2, 2, c)
    x = blocks.transpose(0, 3, 6, 1, 4, 2, 5)
    return np.ascontiguousarray(x.reshape(f, c, h, w))
