"""Scene descriptions and seeded scene sampling."""

from __future__ import annotations

from dataclasses import dataclass, field, asdict
from typing import Optional

import numpy as np


class PlanningError(ValueError):
    """Raised when an episode cannot be scripted for a scene."""


# Saturated sprite colors, far apart in RGB and from all background grays.
COLOR_PALETTE: dict[str, tuple[int, int, int]] = {
    "red": (220, 40, 40),
    "green": (40, 200, 60),
    "blue": (50, 90, 230),
    "yellow": (230, 210, 40),
    "magenta": (210, 50, 200),
    "cyan": (40, 200, 210),
    "orange": (240, 140, 30),
    "purple": (130, 60, 220),
}

# Background ids: solid dark, checkerboard, solid mid gray.
BACKGROUNDS: dict[int, dict] = {
    0: {"kind": "solid", "colors": [(34, 34, 34)]},
    1: {"kind": "checker", "colors": [(70, 70, 70), (92, 92, 92)]},
    2: {"kind": "solid", "colors": [(120, 120, 120)]},
}

OBJECT_SHAPES = ("disc", "square")
GRIPPER_SHAPES = ("triangle", "square")


@dataclass(frozen=True)
class WorldConfig:
    width: int = 64
    height: int = 64
    frame_count: int = 15
    interaction_speed: int = 3  # px per frame, axis-aligned
    safe_margin: int = 8  # sprite centers stay this far from the border
    grasp_offset_max: int = 2
    min_pre_frames: int = 2
    min_interaction_frames: int = 2
    min_post_frames: int = 2
    max_leg_frames: int = 5
    max_approach_speed: int = 6  # px per frame; keeps sprites trackable
    max_spawn_distance: float = 30.0
    checker_cell: int = 8
    distractor_prob: float = 0.5
    inertia_px: int = 0  # optional post-release drift; 0 keeps objects parked


@dataclass(frozen=True)
class SpriteDescriptor:
    shape: str  # disc | square | triangle
    color_name: str
    color: tuple[int, int, int]
    size: int  # disc radius, square side, or triangle rows
    position: tuple[int, int]  # frame-1 center (x, y)


@dataclass(frozen=True)
class SpriteScene:
    width: int
    height: int
    background: int
    gripper: SpriteDescriptor
    objects: tuple[SpriteDescriptor, ...]  # objects[0] is the manipulated one
    seed: int

    def to_dict(self) -> dict:
        d = asdict(self)
        d["objects"] = [asdict(o) for o in self.objects]
        return d

    @staticmethod
    def from_dict(d: dict) -> "SpriteScene":
        def sprite(s: dict) -> SpriteDescriptor:
            return SpriteDescriptor(
                shape=s["shape"],
                color_name=s["color_name"],
                color=tuple(s["color"]),
                size=s["size"],
                position=tuple(s["position"]),
            )

        return SpriteScene(
            width=d["width"],
            height=d["height"],
            background=d["background"],
            gripper=sprite(d["gripper"]),
            objects=tuple(sprite(o) for o in d["objects"]),
            seed=d["seed"],
        )


def sprite_offsets(shape: str, size: int) -> np.ndarray:
    """Integer (dx, dy) pixel offsets of a sprite's footprint around its center.

    Discs and squares are symmetric, so their pixel centroid equals the
    center exactly; the small triangle's centroid sits 0.44 px below it.
    """
    if shape == "disc":
        r = size
        span = np.arange(-r, r + 1)
        dx, dy = np.meshgrid(span, span)
        keep = dx**2 + dy**2 <= r * r
        return np.stack([dx[keep], dy[keep]], axis=1)
    if shape == "square":
        half = size // 2
        span = np.arange(-half, half + 1)
        dx, dy = np.meshgrid(span, span)
        return np.stack([dx.ravel(), dy.ravel()], axis=1)
    if shape == "triangle":
        rows = []
        for i in range(size):  # width 2i+1 at row offset i - size//2
            dy = i - size // 2
            for dx in range(-i, i + 1):
                rows.append((dx, dy))
        return np.asarray(rows, dtype=np.int64)
    raise ValueError(f"unknown sprite shape {shape!r}")


def sprite_half_extent(shape: str, size: int) -> int:
    offs = sprite_offsets(shape, size)
    return int(np.abs(offs).max())


def make_scene(scene_seed: int, config: WorldConfig = WorldConfig()) -> SpriteScene:
    """Sample a scene: background, small gripper, one manipulated object in a
    central clearance zone, and an optional static distractor."""
    rng = np.random.default_rng(scene_seed)
    background = int(rng.integers(0, len(BACKGROUNDS)))

    names = list(COLOR_PALETTE)
    picks = rng.choice(len(names), size=3, replace=False)
    gripper_color, object_color, distractor_color = (names[i] for i in picks)

    w, h, m = config.width, config.height, config.safe_margin
    # Central zone keeps clearance on every side for any interaction direction.
    zone_lo, zone_hi = 3 * m, w - 1 - 3 * m
    obj_pos = (
        int(rng.integers(zone_lo, zone_hi + 1)),
        int(rng.integers(zone_lo, zone_hi + 1)),
    )

    def sample_far(
        min_dists: list[tuple[tuple[int, int], float]],
        max_dist: Optional[tuple[tuple[int, int], float]] = None,
    ) -> Optional[tuple[int, int]]:
        for _ in range(256):
            p = (int(rng.integers(m, w - m)), int(rng.integers(m, h - m)))
            if not all(np.hypot(p[0] - q[0], p[1] - q[1]) >= d for q, d in min_dists):
                continue
            if max_dist is not None:
                q, d = max_dist
                if np.hypot(p[0] - q[0], p[1] - q[1]) > d:
                    continue
            return p
        return None

    grip_pos = sample_far([(obj_pos, 14.0)], max_dist=(obj_pos, config.max_spawn_distance))
    if grip_pos is None:
        raise PlanningError("could not place gripper away from the object")

    obj_shape = OBJECT_SHAPES[int(rng.integers(0, len(OBJECT_SHAPES)))]
    obj_size = int(rng.choice([5, 6])) if obj_shape == "disc" else int(rng.choice([9, 11]))
    objects = [
        SpriteDescriptor(
            shape=obj_shape,
            color_name=object_color,
            color=COLOR_PALETTE[object_color],
            size=obj_size,
            position=obj_pos,
        )
    ]

    if rng.random() < config.distractor_prob:
        d_pos = sample_far([(obj_pos, 16.0), (grip_pos, 12.0)])
        if d_pos is not None:
            shape = OBJECT_SHAPES[int(rng.integers(0, len(OBJECT_SHAPES)))]
            objects.append(
                SpriteDescriptor(
                    shape=shape,
                    color_name=distractor_color,
                    color=COLOR_PALETTE[distractor_color],
                    size=5 if shape == "disc" else 9,
                    position=d_pos,
                )
            )

    gripper = SpriteDescriptor(
        shape=GRIPPER_SHAPES[int(rng.integers(0, len(GRIPPER_SHAPES)))],
        color_name=gripper_color,
        color=COLOR_PALETTE[gripper_color],
        size=3,
        position=grip_pos,
    )
    return SpriteScene(
        width=w,
        height=h,
        background=background,
        gripper=gripper,
        objects=tuple(objects),
        seed=scene_seed,
    )
