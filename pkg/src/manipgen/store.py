"""On-disk store for curated annotated samples.

Layout: ``<dir>/manifest.json`` plus one ``<id>.json`` record per sample.
Records reference the source video/masks by path (relative to the record or
absolute), so curation does not copy media.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .conditioning import CollaborativeTrajectory
from .curation import AnnotatedSample
from .formats import load_mask_png, load_rmvd


def _resolve(base: Path, ref: str) -> Path:
    p = Path(ref)
    return p if p.is_absolute() else (base / p)


def write_sample_record(directory: str | Path, sample: AnnotatedSample, video_path: str,
                        robot_mask_path: str, object_mask_path: str) -> None:
    directory = Path(directory)
    record = {
        "id": sample.sample_id,
        "prompt": sample.prompt,
        "f1": sample.f1,
        "f2": sample.f2,
        "trajectory": sample.trajectory.points.tolist(),
        "video_path": video_path,
        "robot_mask_path": robot_mask_path,
        "object_mask_path": object_mask_path,
        "gt_gripper_track": None
        if sample.gt_gripper_track is None
        else np.asarray(sample.gt_gripper_track).tolist(),
        "gt_object_track": None
        if sample.gt_object_track is None
        else np.asarray(sample.gt_object_track).tolist(),
    }
    (directory / f"{sample.sample_id}.json").write_text(json.dumps(record, sort_keys=True))


def write_manifest(directory: str | Path, sample_ids: list[str], tau: float, source: str) -> None:
    manifest = {"version": 1, "tau": tau, "source": source, "sample_ids": sorted(sample_ids)}
    (Path(directory) / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=1))


def list_sample_ids(directory: str | Path) -> list[str]:
    manifest = Path(directory) / "manifest.json"
    if manifest.exists():
        return list(json.loads(manifest.read_text())["sample_ids"])
    return sorted(p.stem for p in Path(directory).glob("*.json") if p.name != "manifest.json")


def load_record(directory: str | Path, sample_id: str) -> dict:
    return json.loads((Path(directory) / f"{sample_id}.json").read_text())


def load_sample(directory: str | Path, sample_id: str, with_video: bool = True) -> AnnotatedSample:
    directory = Path(directory)
    record = load_record(directory, sample_id)
    video_path = _resolve(directory, record["video_path"])
    video = load_rmvd(video_path) if with_video else None
    robot_mask = load_mask_png(_resolve(directory, record["robot_mask_path"]))
    object_mask = load_mask_png(_resolve(directory, record["object_mask_path"]))
    trajectory = CollaborativeTrajectory(
        points=np.asarray(record["trajectory"], dtype=np.float64),
        f1=record["f1"],
        f2=record["f2"],
    )
    init_frame = video[0] if video is not None else load_rmvd(video_path)[0]
    return AnnotatedSample(
        sample_id=sample_id,
        init_frame=init_frame,
        prompt=record["prompt"],
        robot_mask=robot_mask,
        object_mask=object_mask,
        trajectory=trajectory,
        source_video=str(video_path),
        gt_gripper_track=None
        if record.get("gt_gripper_track") is None
        else np.asarray(record["gt_gripper_track"], dtype=np.float64),
        gt_object_track=None
        if record.get("gt_object_track") is None
        else np.asarray(record["gt_object_track"], dtype=np.float64),
    )


def load_video_for(directory: str | Path, sample_id: str) -> np.ndarray:
    record = load_record(directory, sample_id)
    return load_rmvd(_resolve(Path(directory), record["video_path"]))
