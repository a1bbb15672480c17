"""Binary file formats shared across the toolchain.

All containers are little-endian:

* ``RMVD`` -- raw video: magic, u32 F, H, W, then F*H*W*3 bytes of 8-bit RGB.
* ``RMLV`` -- latent video: magic, u32 f, c, h, w, then row-major float32.
* ``RMTL`` -- trajectory latent: magic, u32 f, c, h, w, row-major float32,
  then f phase bytes (0=pre, 1=inter, 2=post).
"""

from __future__ import annotations

import io
import struct
from pathlib import Path

import numpy as np
from PIL import Image

RMVD_MAGIC = b"RMVD"
RMLV_MAGIC = b"RMLV"
RMTL_MAGIC = b"RMTL"


class FormatError(ValueError):
    """Raised when a container is malformed."""


def write_rmvd(video: np.ndarray) -> bytes:
    """Serialize an F x H x W x 3 uint8 video to RMVD bytes."""
    if video.ndim != 4 or video.shape[3] != 3:
        raise FormatError(f"expected F x H x W x 3 video, got shape {video.shape}")
    if video.dtype != np.uint8:
        raise FormatError(f"expected uint8 video, got {video.dtype}")
    f, h, w, _ = video.shape
    header = RMVD_MAGIC + struct.pack("<III", f, h, w)
    return header + np.ascontiguousarray(video).tobytes()


def read_rmvd(data: bytes) -> np.ndarray:
    if data[:4] != RMVD_MAGIC:
        raise FormatError("bad RMVD magic")
    f, h, w = struct.unpack("<III", data[4:16])
    body = np.frombuffer(data, dtype=np.uint8, offset=16)
    expected = f * h * w * 3
    if body.size != expected:
        raise FormatError(f"RMVD payload has {body.size} bytes, expected {expected}")
    return body.reshape(f, h, w, 3).copy()


def save_rmvd(path: str | Path, video: np.ndarray) -> None:
    Path(path).write_bytes(write_rmvd(video))


def load_rmvd(path: str | Path) -> np.ndarray:
    return read_rmvd(Path(path).read_bytes())


def _write_volume(magic: bytes, x: np.ndarray) -> bytes:
    if x.ndim != 4:
        raise FormatError(f"expected 4-d volume, got shape {x.shape}")
    f, c, h, w = x.shape
    header = magic + struct.pack("<IIII", f, c, h, w)
    return header + np.ascontiguousarray(x, dtype="<f4").tobytes()


def _read_volume(magic: bytes, data: bytes) -> tuple[np.ndarray, int]:
    if data[:4] != magic:
        raise FormatError(f"bad {magic.decode()} magic")
    f, c, h, w = struct.unpack("<IIII", data[4:20])
    count = f * c * h * w
    body = np.frombuffer(data, dtype="<f4", offset=20, count=count)
    if body.size != count:
        raise FormatError("volume payload truncated")
    return body.reshape(f, c, h, w).copy(), 20 + count * 4


def write_rmlv(x: np.ndarray) -> bytes:
    return _write_volume(RMLV_MAGIC, x)


def read_rmlv(data: bytes) -> np.ndarray:
    x, _ = _read_volume(RMLV_MAGIC, data)
    return x


def write_rmtl(v: np.ndarray, phases: np.ndarray) -> bytes:
    if phases.ndim != 1 or phases.shape[0] != v.shape[0]:
        raise FormatError("phase vector must have one entry per latent timestep")
    if not np.all((phases >= 0) & (phases <= 2)):
        raise FormatError("phase bytes must be in {0, 1, 2}")
    return _write_volume(RMTL_MAGIC, v) + phases.astype(np.uint8).tobytes()


def read_rmtl(data: bytes) -> tuple[np.ndarray, np.ndarray]:
    v, offset = _read_volume(RMTL_MAGIC, data)
    phases = np.frombuffer(data, dtype=np.uint8, offset=offset)
    if phases.size != v.shape[0]:
        raise FormatError("phase vector truncated")
    return v, phases.copy()


def save_mask_png(path: str | Path, mask: np.ndarray) -> None:
    """Save a binary H x W mask as a 1-channel PNG (nonzero = valid)."""
    img = Image.fromarray((mask.astype(bool) * np.uint8(255)), mode="L")
    img.save(Path(path), format="PNG")


def mask_png_bytes(mask: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray((mask.astype(bool) * np.uint8(255)), mode="L").save(buf, format="PNG")
    return buf.getvalue()


def load_mask_png(path: str | Path) -> np.ndarray:
    return decode_mask_png(Path(path).read_bytes())


def decode_mask_png(data: bytes) -> np.ndarray:
    img = Image.open(io.BytesIO(data)).convert("L")
    return (np.asarray(img) > 0)


def save_image_png(path: str | Path, image: np.ndarray) -> None:
    Image.fromarray(image, mode="RGB").save(Path(path), format="PNG")


def image_png_bytes(image: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(image, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def decode_image_png(data: bytes) -> np.ndarray:
    img = Image.open(io.BytesIO(data)).convert("RGB")
    return np.asarray(img).copy()
