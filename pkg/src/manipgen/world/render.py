"""Rasterization of scripted episodes into videos, masks, and tracks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .planner import ScriptedEpisode
from .scene import BACKGROUNDS, SpriteScene, WorldConfig, sprite_offsets


@dataclass(frozen=True)
class RenderedSample:
    video: np.ndarray  # F x H x W x 3 uint8
    robot_mask: np.ndarray  # H x W bool, frame-1 gripper footprint
    object_mask: np.ndarray  # H x W bool, frame-1 object footprint
    gt_gripper_track: np.ndarray  # F x 2 float
    gt_object_track: np.ndarray  # F x 2 float
    episode: ScriptedEpisode


def background_canvas(scene: SpriteScene, config: WorldConfig = WorldConfig()) -> np.ndarray:
    spec = BACKGROUNDS[scene.background]
    canvas = np.zeros((scene.height, scene.width, 3), dtype=np.uint8)
    if spec["kind"] == "solid":
        canvas[:] = spec["colors"][0]
    else:
        cell = config.checker_cell
        ys, xs = np.mgrid[0 : scene.height, 0 : scene.width]
        parity = ((ys // cell) + (xs // cell)) % 2
        canvas[parity == 0] = spec["colors"][0]
        canvas[parity == 1] = spec["colors"][1]
    return canvas


def stamp_sprite(
    canvas: np.ndarray, shape: str, size: int, center: tuple[int, int], color: tuple[int, int, int]
) -> None:
    offs = sprite_offsets(shape, size)
    xs = offs[:, 0] + int(center[0])
    ys = offs[:, 1] + int(center[1])
    keep = (xs >= 0) & (xs < canvas.shape[1]) & (ys >= 0) & (ys < canvas.shape[0])
    canvas[ys[keep], xs[keep]] = color


def sprite_footprint(
    shape: str, size: int, center: tuple[int, int], height: int, width: int
) -> np.ndarray:
    mask = np.zeros((height, width), dtype=bool)
    offs = sprite_offsets(shape, size)
    xs = offs[:, 0] + int(center[0])
    ys = offs[:, 1] + int(center[1])
    keep = (xs >= 0) & (xs < width) & (ys >= 0) & (ys < height)
    mask[ys[keep], xs[keep]] = True
    return mask


def render_episode(
    scene: SpriteScene, episode: ScriptedEpisode, config: WorldConfig = WorldConfig()
) -> RenderedSample:
    """Paint every frame: background, distractors, manipulated object, gripper.

    The manipulated object is drawn above distractors and the gripper above
    everything, so the manipulated sprites' visible centroids track their
    scripted paths."""
    bg = background_canvas(scene, config)
    frames = episode.frame_count
    video = np.zeros((frames, scene.height, scene.width, 3), dtype=np.uint8)
    manipulated = scene.objects[0]
    distractors = scene.objects[1:]
    for t in range(frames):
        canvas = bg.copy()
        for d in distractors:
            stamp_sprite(canvas, d.shape, d.size, d.position, d.color)
        stamp_sprite(
            canvas, manipulated.shape, manipulated.size, tuple(episode.object_path[t]), manipulated.color
        )
        stamp_sprite(
            canvas, scene.gripper.shape, scene.gripper.size, tuple(episode.gripper_path[t]), scene.gripper.color
        )
        video[t] = canvas

    robot_mask = sprite_footprint(
        scene.gripper.shape, scene.gripper.size, tuple(episode.gripper_path[0]), scene.height, scene.width
    )
    object_mask = sprite_footprint(
        manipulated.shape, manipulated.size, tuple(episode.object_path[0]), scene.height, scene.width
    )
    return RenderedSample(
        video=video,
        robot_mask=robot_mask,
        object_mask=object_mask,
        gt_gripper_track=episode.gripper_path.astype(np.float64),
        gt_object_track=episode.object_path.astype(np.float64),
        episode=episode,
    )
