"""Dataset generation: seeded episodes written in the on-disk layout.

Layout: ``<out_dir>/<id>/video.raw`` (RMVD), ``robot_mask.png``,
``object_mask.png``, ``meta.json``; plus ``manifest.json`` at the root.
Every byte is a pure function of (seed, config).
"""

from __future__ import annotations

import json
import shutil
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from pathlib import Path

import numpy as np

from ..formats import save_mask_png, save_rmvd
from .planner import SKILLS, ScriptedEpisode, plan_episode_for_scene
from .render import render_episode
from .scene import PlanningError, SpriteScene, WorldConfig, make_scene

MANIFEST_NAME = "manifest.json"


def _sample_seeds(seed: int, index: int) -> tuple[int, int]:
    state = np.random.SeedSequence(entropy=seed, spawn_key=(index,)).generate_state(2)
    return int(state[0]), int(state[1])


def build_sample(seed: int, index: int, config: WorldConfig) -> tuple[SpriteScene, ScriptedEpisode]:
    """Deterministically build sample `index`: scene, episode (with retry on
    the rare unplannable draw, re-seeded so results stay reproducible)."""
    skill = SKILLS[index % len(SKILLS)]
    scene_seed, motion_seed = _sample_seeds(seed, index)
    for attempt in range(20):
        try:
            scene = make_scene(scene_seed + attempt, config)
            episode = plan_episode_for_scene(scene, skill, motion_seed + attempt, config)
            return scene, episode
        except PlanningError:
            continue
    raise PlanningError(f"could not plan sample {index} ({skill}) after 20 attempts")


def _write_sample(args: tuple[int, int, Path, dict]) -> dict:
    seed, index, out_dir, cfg_dict = args
    config = WorldConfig(**cfg_dict)
    scene, episode = build_sample(seed, index, config)
    rendered = render_episode(scene, episode, config)
    sample_id = f"{index:05d}"
    sample_dir = out_dir / sample_id
    try:
        sample_dir.mkdir(parents=True, exist_ok=True)
        save_rmvd(sample_dir / "video.raw", rendered.video)
        save_mask_png(sample_dir / "robot_mask.png", rendered.robot_mask)
        save_mask_png(sample_dir / "object_mask.png", rendered.object_mask)
        meta = {
            "id": sample_id,
            "skill": episode.skill,
            "prompt": episode.prompt,
            "frames": episode.frame_count,
            "height": scene.height,
            "width": scene.width,
            "f1": episode.f1,
            "f2": episode.f2,
            "gripper_track": rendered.gt_gripper_track.tolist(),
            "object_track": rendered.gt_object_track.tolist(),
            "grasp_offset": list(episode.grasp_offset),
            "scene": scene.to_dict(),
        }
        (sample_dir / "meta.json").write_text(json.dumps(meta, sort_keys=True, indent=1))
    except Exception:
        shutil.rmtree(sample_dir, ignore_errors=True)
        raise
    return {"id": sample_id, "skill": episode.skill, "scene_seed": scene.seed}


def generate_dataset(
    n: int,
    seed: int,
    out_dir: str | Path,
    config: WorldConfig = WorldConfig(),
    workers: int = 1,
) -> dict:
    """Write n rendered samples plus a manifest; returns the manifest dict.

    Skills are assigned round-robin so their histogram is uniform to within
    one sample. On failure the partial sample directory is removed and no
    manifest is written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    jobs = [(seed, i, out, asdict(config)) for i in range(n)]
    if workers > 1 and n > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            entries = list(pool.map(_write_sample, jobs))
    else:
        entries = [_write_sample(job) for job in jobs]
    manifest = {
        "version": 1,
        "seed": seed,
        "count": n,
        "config": asdict(config),
        "samples": entries,
    }
    (out / MANIFEST_NAME).write_text(json.dumps(manifest, sort_keys=True, indent=1))
    return manifest


def load_manifest(dataset_dir: str | Path) -> dict:
    path = Path(dataset_dir) / MANIFEST_NAME
    if not path.exists():
        raise FileNotFoundError(f"no {MANIFEST_NAME} under {dataset_dir}")
    return json.loads(path.read_text())


def load_sample_meta(dataset_dir: str | Path, sample_id: str) -> dict:
    return json.loads((Path(dataset_dir) / sample_id / "meta.json").read_text())
