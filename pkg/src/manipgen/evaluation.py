"""Quantitative evaluation: color-keyed sprite tracking, trajectory error,
PSNR/SSIM, and the held-out benchmark runner."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

PSNR_CAP_DB = 99.0


class EvalError(ValueError):
    pass


def track_sprite(
    video: np.ndarray,
    reference_color: np.ndarray,
    init_position: tuple[float, float],
    window: int = 8,
    color_tolerance: float = 60.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-frame centroid of pixels near `reference_color`, searched in a
    window around the previous position.

    Frames with no matching pixel keep the previous position and are flagged.
    Returns (F x 2 positions, F flags).
    """
    frames, height, width, _ = video.shape
    color = np.asarray(reference_color, dtype=np.float64)
    pos = np.asarray(init_position, dtype=np.float64)
    positions = np.zeros((frames, 2), dtype=np.float64)
    flags = np.zeros(frames, dtype=bool)
    for t in range(frames):
        x0 = max(0, int(round(pos[0])) - window)
        x1 = min(width, int(round(pos[0])) + window + 1)
        y0 = max(0, int(round(pos[1])) - window)
        y1 = min(height, int(round(pos[1])) + window + 1)
        crop = video[t, y0:y1, x0:x1].astype(np.float64)
        dist = np.linalg.norm(crop - color, axis=-1)
        ys, xs = np.nonzero(dist <= color_tolerance)
        if xs.size:
            pos = np.array([x0 + xs.mean(), y0 + ys.mean()])
        else:
            flags[t] = True
        positions[t] = pos
    return positions, flags


def traj_error(input_traj: np.ndarray, generated_traj: np.ndarray) -> float:
    """Mean per-frame L1 distance between two equal-length trajectories."""
    a = np.asarray(input_traj, dtype=np.float64)
    b = np.asarray(generated_traj, dtype=np.float64)
    if a.shape != b.shape:
        raise EvalError(f"trajectory shapes disagree: {a.shape} vs {b.shape}")
    if a.size == 0:
        raise EvalError("empty trajectories")
    return float(np.abs(a - b).sum(axis=1).mean())


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """Per-frame 10*log10(255^2 / MSE), meaned over frames; identical frames
    score the 99 dB cap."""
    if a.shape != b.shape:
        raise EvalError(f"video shapes disagree: {a.shape} vs {b.shape}")
    a64 = a.astype(np.float64)
    b64 = b.astype(np.float64)
    values = []
    for t in range(a.shape[0]):
        mse = float(np.mean((a64[t] - b64[t]) ** 2))
        values.append(PSNR_CAP_DB if mse == 0 else min(10 * math.log10(255.0**2 / mse), PSNR_CAP_DB))
    return float(np.mean(values))


def _window_sums(x: np.ndarray, size: int) -> np.ndarray:
    """Sliding `size`x`size` window sums at every fully-interior position."""
    padded = np.zeros((x.shape[0] + 1, x.shape[1] + 1), dtype=np.float64)
    padded[1:, 1:] = np.cumsum(np.cumsum(x, axis=0), axis=1)
    return (
        padded[size:, size:]
        - padded[:-size, size:]
        - padded[size:, :-size]
        + padded[:-size, :-size]
    )


def ssim(a: np.ndarray, b: np.ndarray, window: int = 8) -> float:
    """Uniform-window SSIM on 8-bit videos, per channel, meaned over
    channels then frames."""
    if a.shape != b.shape:
        raise EvalError(f"video shapes disagree: {a.shape} vs {b.shape}")
    c1 = (0.01 * 255) ** 2
    c2 = (0.03 * 255) ** 2
    n = window * window
    frame_scores = []
    for t in range(a.shape[0]):
        channel_scores = []
        for ch in range(a.shape[3]):
            x = a[t, :, :, ch].astype(np.float64)
            y = b[t, :, :, ch].astype(np.float64)
            mx = _window_sums(x, window) / n
            my = _window_sums(y, window) / n
            sxx = _window_sums(x * x, window) / n - mx * mx
            syy = _window_sums(y * y, window) / n - my * my
            sxy = _window_sums(x * y, window) / n - mx * my
            score = ((2 * mx * my + c1) * (2 * sxy + c2)) / (
                (mx * mx + my * my + c1) * (sxx + syy + c2)
            )
            channel_scores.append(score.mean())
        frame_scores.append(np.mean(channel_scores))
    return float(np.mean(frame_scores))


@dataclass
class BenchmarkConfig:
    steps: int = 50
    cfg_scale: float = 6.0
    seed: int = 0
    batch_size: int = 10
    window: int = 8
    color_tolerance: float = 60.0
    self_test: bool = False  # evaluate ground-truth videos against themselves


@dataclass
class EvalReport:
    per_sample: list[dict]
    aggregates: dict
    config_hash: str
    sample_ids: list[str]
    failures: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "per_sample": self.per_sample,
            "aggregates": self.aggregates,
            "config_hash": self.config_hash,
            "sample_ids": self.sample_ids,
            "failures": self.failures,
        }


def _phase_frames(f1: int, f2: int, frames: int) -> tuple[list[int], list[int]]:
    robot = [t for t in range(1, frames + 1) if t <= f1 or t > f2]
    obj = [t for t in range(f1 + 1, f2 + 1)]
    return robot, obj


def _mean_color(frame: np.ndarray, mask: np.ndarray) -> np.ndarray:
    return frame[mask].reshape(-1, 3).mean(axis=0)


def evaluate_generated_video(
    generated: np.ndarray,
    sample,
    gt_video: np.ndarray | None,
    window: int = 8,
    color_tolerance: float = 60.0,
) -> dict:
    """Metrics for one generated video against its annotation (and GT video
    when available)."""
    from .curation import mask_centroid

    traj = sample.trajectory
    frames = traj.frame_count
    robot_color = _mean_color(sample.init_frame, sample.robot_mask)
    object_color = _mean_color(sample.init_frame, sample.object_mask)
    robot_start = mask_centroid(sample.robot_mask)
    object_start = mask_centroid(sample.object_mask)
    robot_track, robot_flags = track_sprite(
        generated, robot_color, robot_start, window, color_tolerance
    )
    object_track, object_flags = track_sprite(
        generated, object_color, object_start, window, color_tolerance
    )
    robot_frames, object_frames = _phase_frames(traj.f1, traj.f2, frames)
    record: dict = {"id": sample.sample_id, "f1": traj.f1, "f2": traj.f2}
    ridx = [t - 1 for t in robot_frames]
    record["traj_error_robot"] = traj_error(traj.points[ridx], robot_track[ridx])
    if object_frames:
        oidx = [t - 1 for t in object_frames]
        record["traj_error_obj"] = traj_error(traj.points[oidx], object_track[oidx])
    else:
        record["traj_error_obj"] = None
    record["tracker_dropouts"] = int(robot_flags.sum() + object_flags.sum())
    if sample.gt_gripper_track is not None:
        record["traj_error_robot_full"] = traj_error(sample.gt_gripper_track, robot_track)
    if sample.gt_object_track is not None:
        record["traj_error_obj_full"] = traj_error(sample.gt_object_track, object_track)
    if gt_video is not None:
        record["psnr"] = psnr(gt_video, generated)
        record["ssim"] = ssim(gt_video, generated)
        record["frame1_psnr"] = psnr(gt_video[:1], generated[:1])
    return record


def run_benchmark(
    state,
    data_dir: str | Path,
    sample_ids: list[str],
    out_dir: str | Path | None = None,
    config: BenchmarkConfig = BenchmarkConfig(),
) -> EvalReport:
    """Generate (or replay, in self-test mode) every sample in the split,
    track both subjects, and aggregate metrics. The split must be disjoint
    from the checkpoint's training ids.

    Initial noise is drawn per sample from (seed + index), so results do not
    depend on the generation batch size."""
    import torch

    from . import store
    from .diffusion.generate import conditioning_tensors, decode_latents
    from .diffusion.sampler import ddim_sample
    from .formats import save_rmvd

    train_ids = set((state.metadata or {}).get("train_ids", [])) if state is not None else set()
    overlap = train_ids & set(sample_ids)
    if overlap:
        raise EvalError(f"split overlaps training ids: {sorted(overlap)[:5]}")

    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        (out / "samples").mkdir(parents=True, exist_ok=True)

    per_sample: list[dict] = []
    failures: list[dict] = []
    if not sample_ids:
        import warnings

        warnings.warn("empty evaluation split: writing an empty report")

    pending = []
    for i, sid in enumerate(sample_ids):
        try:
            sample = store.load_sample(data_dir, sid)
            gt_video = store.load_video_for(data_dir, sid)
            if config.self_test:
                pending.append((i, sid, sample, gt_video, None))
            else:
                pending.append((i, sid, sample, gt_video, conditioning_tensors(state, sample)))
        except Exception as exc:
            failures.append({"id": sid, "error": str(exc)})

    def finish(sid: str, sample, generated: np.ndarray, gt_video: np.ndarray | None) -> None:
        record = evaluate_generated_video(
            generated, sample, gt_video, config.window, config.color_tolerance
        )
        per_sample.append(record)
        if out is not None:
            sdir = out / "samples" / sid
            sdir.mkdir(parents=True, exist_ok=True)
            save_rmvd(sdir / "gen.raw", generated)

    if config.self_test:
        for _, sid, sample, gt_video, _tensors in pending:
            try:
                finish(sid, sample, gt_video, gt_video)
            except Exception as exc:
                failures.append({"id": sid, "error": str(exc)})
    else:
        cfgm = state.config
        shape = (cfgm.latent_frames, cfgm.latent_channels, cfgm.latent_height, cfgm.latent_width)
        for start in range(0, len(pending), config.batch_size):
            chunk = pending[start : start + config.batch_size]
            try:
                z = torch.stack([t[4][0] for t in chunk])
                prompts = torch.stack([t[4][1] for t in chunk])
                v = torch.stack([t[4][2] for t in chunk])
                noise = torch.stack(
                    [
                        torch.randn(shape, generator=torch.Generator().manual_seed(config.seed + i))
                        for i, *_ in chunk
                    ]
                )
                x0 = ddim_sample(
                    state, z, prompts, v,
                    steps=config.steps, cfg_scale=config.cfg_scale, noise=noise,
                )
            except Exception as exc:
                failures.extend({"id": t[1], "error": str(exc)} for t in chunk)
                continue
            for row, (_, sid, sample, gt_video, _tensors) in enumerate(chunk):
                try:
                    finish(sid, sample, decode_latents(state, x0[row]), gt_video)
                except Exception as exc:
                    failures.append({"id": sid, "error": str(exc)})

    def agg(key: str) -> float | None:
        vals = [r[key] for r in per_sample if r.get(key) is not None]
        return float(np.mean(vals)) if vals else None

    aggregates = {
        k: agg(k)
        for k in (
            "traj_error_robot",
            "traj_error_obj",
            "traj_error_robot_full",
            "traj_error_obj_full",
            "psnr",
            "ssim",
            "frame1_psnr",
        )
    }
    cfg_blob = json.dumps(
        {
            "steps": config.steps,
            "cfg_scale": config.cfg_scale,
            "seed": config.seed,
            "self_test": config.self_test,
            "model": None if state is None else state.config_hash(),
        },
        sort_keys=True,
    )
    report = EvalReport(
        per_sample=per_sample,
        aggregates=aggregates,
        config_hash=hashlib.sha256(cfg_blob.encode()).hexdigest()[:16],
        sample_ids=list(sample_ids),
        failures=failures,
    )
    if out is not None:
        (out / "report.json").write_text(json.dumps(report.to_dict(), indent=1, sort_keys=True))
    return report
