"""Turning raw (video, prompt, masks, tracks) into annotated training samples.

The object's associated track is thresholded on per-frame displacement to
find the interaction interval, and the collaborative path is spliced from the
gripper track outside that interval and the object track inside it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .conditioning import CollaborativeTrajectory
from .formats import load_mask_png

DEFAULT_TAU = 1.0


class CurationError(ValueError):
    """Raised for invalid masks, tracks, or import records."""


@dataclass(frozen=True)
class TrackSet:
    points: np.ndarray  # n_tracks x F x 2
    grid_interval: int = 30

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        object.__setattr__(self, "points", pts)
        if pts.ndim != 3 or pts.shape[2] != 2:
            raise CurationError(f"tracks must be n x F x 2, got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise CurationError("tracks contain non-finite points")

    @property
    def frame_count(self) -> int:
        return self.points.shape[1]


@dataclass
class AnnotatedSample:
    sample_id: str
    init_frame: np.ndarray  # H x W x 3 uint8
    prompt: str
    robot_mask: np.ndarray  # H x W bool
    object_mask: np.ndarray  # H x W bool
    trajectory: CollaborativeTrajectory
    source_video: Optional[str] = None  # training only
    gt_gripper_track: Optional[np.ndarray] = None
    gt_object_track: Optional[np.ndarray] = None

    @property
    def f1(self) -> int:
        return self.trajectory.f1

    @property
    def f2(self) -> int:
        return self.trajectory.f2


def mask_centroid(mask: np.ndarray) -> tuple[float, float]:
    """(x, y) centroid of valid pixels."""
    ys, xs = np.nonzero(np.asarray(mask).astype(bool))
    if xs.size == 0:
        raise CurationError("mask is empty")
    return float(xs.mean()), float(ys.mean())


def associate_track(mask: np.ndarray, tracks: TrackSet) -> np.ndarray:
    """Full trajectory of the track whose frame-1 point is nearest to the
    mask centroid; ties go to the lowest track index."""
    if tracks.points.shape[0] == 0:
        raise CurationError("track set is empty")
    cx, cy = mask_centroid(mask)
    first = tracks.points[:, 0, :]
    d2 = (first[:, 0] - cx) ** 2 + (first[:, 1] - cy) ** 2
    return tracks.points[int(np.argmin(d2))].copy()


def decompose_phases(
    object_track: np.ndarray, tau: float, smooth_window: int = 1
) -> tuple[int, int]:
    """Locate the interaction interval from per-frame displacement.

    d[t] = |p_t - p_{t-1}| for frames t = 2..F. The interval starts one frame
    before the first displacement above tau and ends at the last one. No
    displacement above tau means no interaction: (F, F). An optional moving
    average over d (window > 1) smooths jitter before thresholding.
    """
    track = np.asarray(object_track, dtype=np.float64)
    frames = track.shape[0]
    if frames < 2:
        raise CurationError(f"need at least 2 frames, got {frames}")
    if tau <= 0:
        raise CurationError(f"tau must be positive, got {tau}")
    d = np.linalg.norm(np.diff(track, axis=0), axis=1)
    if smooth_window > 1:
        kernel = np.ones(smooth_window) / smooth_window
        d = np.convolve(d, kernel, mode="same")
    above = np.nonzero(d > tau)[0]
    if above.size == 0:
        return frames, frames
    first_t = int(above[0]) + 2  # displacement index i covers frames i+1 -> i+2
    last_t = int(above[-1]) + 2
    return first_t - 1, last_t


def splice_trajectory(
    robot_track: np.ndarray, object_track: np.ndarray, f1: int, f2: int
) -> np.ndarray:
    """Gripper positions on [1, f1] and (f2, F], object positions on (f1, f2]."""
    robot_track = np.asarray(robot_track, dtype=np.float64)
    object_track = np.asarray(object_track, dtype=np.float64)
    if robot_track.shape != object_track.shape:
        raise CurationError("robot and object tracks disagree in shape")
    spliced = robot_track.copy()
    spliced[f1 : f2] = object_track[f1 : f2]
    return spliced


def assemble_sample(
    video: np.ndarray,
    prompt: str,
    robot_mask: np.ndarray,
    object_mask: np.ndarray,
    tracks: TrackSet,
    tau: float = DEFAULT_TAU,
    sample_id: str = "sample",
    source_video: Optional[str] = None,
    smooth_window: int = 1,
) -> AnnotatedSample:
    """Associate both subjects to tracks, find the interaction interval on
    the object's track, and splice the collaborative trajectory."""
    frames, height, width, _ = video.shape
    if tracks.frame_count != frames:
        raise CurationError(
            f"sample {sample_id}: tracks have {tracks.frame_count} frames, video has {frames}"
        )
    try:
        robot_track = associate_track(robot_mask, tracks)
        object_track = associate_track(object_mask, tracks)
        f1, f2 = decompose_phases(object_track, tau, smooth_window)
        spliced = splice_trajectory(robot_track, object_track, f1, f2)
        trajectory = CollaborativeTrajectory(points=spliced, f1=f1, f2=f2)
    except (CurationError, ValueError) as exc:
        raise CurationError(f"sample {sample_id}: {exc}") from exc
    if np.any(spliced[:, 0] < 0) or np.any(spliced[:, 0] >= width) or np.any(
        spliced[:, 1] < 0
    ) or np.any(spliced[:, 1] >= height):
        raise CurationError(f"sample {sample_id}: trajectory leaves image bounds")
    return AnnotatedSample(
        sample_id=sample_id,
        init_frame=video[0].copy(),
        prompt=prompt,
        robot_mask=np.asarray(robot_mask).astype(bool),
        object_mask=np.asarray(object_mask).astype(bool),
        trajectory=trajectory,
        source_video=source_video,
        gt_gripper_track=robot_track,
        gt_object_track=object_track,
    )


def curate_directory(
    in_dir: str | Path,
    out_dir: str | Path,
    tau: float = DEFAULT_TAU,
    smooth_window: int = 1,
) -> tuple[list[str], list[tuple[str, str]]]:
    """Curate a world dataset (manifest.json layout) or an import-schema
    directory into the annotated-sample store. Returns (curated ids,
    rejections)."""
    import os

    from . import store
    from .world.dataset import MANIFEST_NAME, load_manifest, load_sample_meta

    in_dir, out_dir = Path(in_dir), Path(out_dir)
    if not in_dir.is_dir():
        raise CurationError(f"input directory {in_dir} does not exist")
    out_dir.mkdir(parents=True, exist_ok=True)
    curated: list[str] = []
    rejected: list[tuple[str, str]] = []

    def rel(p: Path) -> str:
        return os.path.relpath(p, out_dir)

    if (in_dir / MANIFEST_NAME).exists():
        manifest = load_manifest(in_dir)
        for entry in manifest["samples"]:
            sid = entry["id"]
            try:
                meta = load_sample_meta(in_dir, sid)
                sdir = in_dir / sid
                from .formats import load_rmvd

                video = load_rmvd(sdir / "video.raw")
                robot_mask = load_mask_png(sdir / "robot_mask.png")
                object_mask = load_mask_png(sdir / "object_mask.png")
                tracks = TrackSet(
                    points=np.stack(
                        [
                            np.asarray(meta["gripper_track"], dtype=np.float64),
                            np.asarray(meta["object_track"], dtype=np.float64),
                        ]
                    )
                )
                sample = assemble_sample(
                    video,
                    meta["prompt"],
                    robot_mask,
                    object_mask,
                    tracks,
                    tau=tau,
                    sample_id=sid,
                    source_video=str(sdir / "video.raw"),
                    smooth_window=smooth_window,
                )
                store.write_sample_record(
                    out_dir,
                    sample,
                    video_path=rel(sdir / "video.raw"),
                    robot_mask_path=rel(sdir / "robot_mask.png"),
                    object_mask_path=rel(sdir / "object_mask.png"),
                )
                curated.append(sid)
            except (CurationError, ValueError, OSError, KeyError) as exc:
                rejected.append((sid, str(exc)))
    else:
        samples, rejected_records = import_external_annotations(in_dir, tau)
        rejected.extend(rejected_records)
        for sample in samples:
            record = json.loads((in_dir / f"{sample.sample_id}.json").read_text())
            store.write_sample_record(
                out_dir,
                sample,
                video_path=rel(in_dir / record["frames_path"]),
                robot_mask_path=rel(in_dir / record["robot_mask_path"]),
                object_mask_path=rel(in_dir / record["object_mask_path"]),
            )
            curated.append(sample.sample_id)
    store.write_manifest(out_dir, curated, tau, str(in_dir))
    return curated, rejected


def import_external_annotations(
    directory: str | Path, tau: float = DEFAULT_TAU
) -> tuple[list[AnnotatedSample], list[tuple[str, str]]]:
    """Load import-schema records (one JSON per sample) from a directory.

    Each record holds {frames_path, prompt, robot_mask_path,
    object_mask_path, tracks, tau_override?, f1?, f2?}. Explicit phase
    boundaries bypass threshold decomposition but are still validated.
    Invalid records are rejected individually with a reason; valid ones are
    returned.
    """
    from .formats import load_rmvd

    directory = Path(directory)
    records = sorted(p for p in directory.glob("*.json") if p.name != "manifest.json")
    samples: list[AnnotatedSample] = []
    rejected: list[tuple[str, str]] = []
    for path in records:
        try:
            record = json.loads(path.read_text())
            video_path = directory / record["frames_path"]
            video = load_rmvd(video_path)
            robot_mask = load_mask_png(directory / record["robot_mask_path"])
            object_mask = load_mask_png(directory / record["object_mask_path"])
            tracks = TrackSet(points=np.asarray(record["tracks"], dtype=np.float64))
            sample = assemble_sample(
                video,
                record["prompt"],
                robot_mask,
                object_mask,
                tracks,
                tau=float(record.get("tau_override", tau)),
                sample_id=path.stem,
                source_video=str(video_path),
            )
            if "f1" in record or "f2" in record:
                f1, f2 = int(record["f1"]), int(record["f2"])
                spliced = splice_trajectory(
                    sample.gt_gripper_track, sample.gt_object_track, f1, f2
                )
                sample.trajectory = CollaborativeTrajectory(points=spliced, f1=f1, f2=f2)
            samples.append(sample)
        except (KeyError, CurationError, ValueError, OSError) as exc:
            rejected.append((path.stem, str(exc)))
    return samples, rejected
