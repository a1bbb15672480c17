"""Skill scripting: piecewise-linear gripper/object paths with phase boundaries.

All positions are integer pixels. Interaction motion is axis-aligned at a
fixed speed so per-frame object displacement during interaction is exactly
the scripted speed, and exactly zero outside it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .scene import PlanningError, SpriteScene, WorldConfig, make_scene, sprite_half_extent

SKILLS = ("pick", "move", "pick_and_place", "topple", "push")

UP = np.array([0, -1])
DOWN = np.array([0, 1])
LEFT = np.array([-1, 0])
RIGHT = np.array([1, 0])

_DIRECTION_NAMES = {(-1, 0): "left", (1, 0): "right", (0, -1): "top", (0, 1): "bottom"}


@dataclass(frozen=True)
class ScriptedEpisode:
    skill: str
    frame_count: int
    gripper_path: np.ndarray  # F x 2 int
    object_path: np.ndarray  # F x 2 int
    f1: int
    f2: int
    prompt: str
    grasp_offset: tuple[int, int]

    def to_dict(self) -> dict:
        return {
            "skill": self.skill,
            "frame_count": self.frame_count,
            "gripper_path": self.gripper_path.tolist(),
            "object_path": self.object_path.tolist(),
            "f1": self.f1,
            "f2": self.f2,
            "prompt": self.prompt,
            "grasp_offset": list(self.grasp_offset),
        }

    @staticmethod
    def from_dict(d: dict) -> "ScriptedEpisode":
        return ScriptedEpisode(
            skill=d["skill"],
            frame_count=d["frame_count"],
            gripper_path=np.asarray(d["gripper_path"], dtype=np.int64),
            object_path=np.asarray(d["object_path"], dtype=np.int64),
            f1=d["f1"],
            f2=d["f2"],
            prompt=d["prompt"],
            grasp_offset=tuple(d["grasp_offset"]),
        )


def _prompt_for(skill: str, scene: SpriteScene, direction: np.ndarray | None) -> str:
    obj = scene.objects[0]
    noun = f"the {obj.color_name} {obj.shape}"
    if skill == "pick":
        return f"pick up {noun}"
    if skill == "topple":
        return f"topple {noun}"
    word = _DIRECTION_NAMES[tuple(int(v) for v in direction)]
    if skill == "move":
        return f"move {noun} to the {word}"
    if skill == "push":
        return f"push {noun} to the {word}"
    return f"pick and place {noun} to the {word}"


def _approach(rng: np.random.Generator, start: np.ndarray, goal: np.ndarray, frames: int) -> np.ndarray:
    """Two-segment approach with a jittered waypoint and smoothed corner,
    anchored exactly at `start` (frame 1) and `goal` (frame `frames`).
    Frames are split between the segments by arc length so the speed stays
    roughly uniform."""
    if frames == 1:
        return goal[None, :].astype(np.float64)
    if frames == 2:
        return np.stack([start, goal]).astype(np.float64)
    mid = (start + goal) / 2.0
    seg = goal - start
    norm = max(float(np.hypot(*seg)), 1.0)
    perp = np.array([-seg[1], seg[0]]) / norm
    way = mid + perp * float(rng.uniform(-4.0, 4.0))
    len1 = float(np.hypot(*(way - start)))
    len2 = float(np.hypot(*(goal - way)))
    corner = 1 + int(round((frames - 1) * len1 / max(len1 + len2, 1e-9)))
    corner = min(max(corner, 1), frames - 2)
    path = np.zeros((frames, 2), dtype=np.float64)
    for t in range(frames):
        if t <= corner:
            path[t] = start + (way - start) * (t / max(corner, 1))
        else:
            path[t] = way + (goal - way) * ((t - corner) / (frames - 1 - corner))
    for _ in range(2):  # light corner rounding on interior frames only
        sm = path.copy()
        for t in range(1, frames - 1):
            sm[t] = (path[t - 1] + 2 * path[t] + path[t + 1]) / 4.0
        path = sm
    path[0], path[-1] = start, goal
    return path


def _min_pre_frames(dist: float, cfg: WorldConfig) -> int:
    """Smallest pre-phase length keeping approach speed under the tracker bound."""
    detour = dist + 10.0  # waypoint jitter and corner-rounding margin
    return max(cfg.min_pre_frames, 1 + math.ceil(detour / cfg.max_approach_speed))


def _feasible_directions(
    pos: np.ndarray, candidates: list[np.ndarray], need_px: int, cfg: WorldConfig
) -> list[np.ndarray]:
    lo, hi_x, hi_y = cfg.safe_margin, cfg.width - 1 - cfg.safe_margin, cfg.height - 1 - cfg.safe_margin
    out = []
    for d in candidates:
        target = pos + d * need_px
        if lo <= target[0] <= hi_x and lo <= target[1] <= hi_y:
            out.append(d)
    return out


def _room_along(pos: np.ndarray, d: np.ndarray, cfg: WorldConfig) -> int:
    lo, hi_x, hi_y = cfg.safe_margin, cfg.width - 1 - cfg.safe_margin, cfg.height - 1 - cfg.safe_margin
    if d[0] < 0:
        return int(pos[0] - lo)
    if d[0] > 0:
        return int(hi_x - pos[0])
    if d[1] < 0:
        return int(pos[1] - lo)
    return int(hi_y - pos[1])


def plan_episode_for_scene(
    scene: SpriteScene,
    skill: str,
    motion_seed: int,
    config: WorldConfig = WorldConfig(),
) -> ScriptedEpisode:
    if skill not in SKILLS:
        raise PlanningError(f"unsupported skill {skill!r}")
    cfg = config
    rng = np.random.default_rng(motion_seed)
    F = cfg.frame_count
    speed = cfg.interaction_speed
    obj = np.asarray(scene.objects[0].position, dtype=np.int64)
    grip0 = np.asarray(scene.gripper.position, dtype=np.int64)

    # Grasp offset: gripper arrival point relative to object center.
    goff = np.asarray(
        [int(rng.integers(-cfg.grasp_offset_max, cfg.grasp_offset_max + 1)), 0]
        if rng.random() < 0.5
        else [0, int(rng.integers(-cfg.grasp_offset_max, cfg.grasp_offset_max + 1))],
        dtype=np.int64,
    )
    arrival = obj - goff

    def leg_budget(direction: np.ndarray, want: int) -> int:
        room = _room_along(obj, direction, cfg)
        return min(want, cfg.max_leg_frames, room // speed)

    pre_min = _min_pre_frames(float(np.hypot(*(arrival - grip0))), cfg)

    if skill == "pick":
        direction = UP
        k = leg_budget(direction, F - pre_min)
        if k < cfg.min_interaction_frames:
            raise PlanningError(
                f"object too close to border for pick: only {_room_along(obj, UP, cfg)} px "
                f"of lift clearance above the object"
            )
        f1, f2 = F - k, F
        legs = [(direction, k)]
        post_dir = None
    elif skill in ("move", "push", "topple"):
        want = 2 if skill == "topple" else int(rng.integers(3, cfg.max_leg_frames + 1))
        options = [d for d in (LEFT, RIGHT) if leg_budget(d, want) >= cfg.min_interaction_frames]
        if not options:
            raise PlanningError(
                f"object too close to border for {skill}: no horizontal direction has "
                f"{cfg.min_interaction_frames * speed} px of clearance"
            )
        direction = options[int(rng.integers(0, len(options)))]
        max_k = F - pre_min - cfg.min_post_frames
        k = min(leg_budget(direction, want), max_k)
        if k < cfg.min_interaction_frames:
            raise PlanningError(f"frame budget too tight for {skill}: approach needs {pre_min} frames")
        f1 = int(rng.integers(pre_min, F - k - cfg.min_post_frames + 1))
        f2 = f1 + k
        legs = [(direction, k)]
        post_dir = -direction
    else:  # pick_and_place
        max_k = F - pre_min - cfg.min_post_frames
        k1 = min(leg_budget(UP, int(rng.integers(2, cfg.max_leg_frames + 1))),
                 max_k - cfg.min_interaction_frames)
        if k1 < cfg.min_interaction_frames:
            raise PlanningError(
                "object too close to border for pick_and_place: not enough lift clearance"
            )
        lateral_from = obj + UP * (k1 * speed)
        want2 = min(int(rng.integers(2, cfg.max_leg_frames + 1)), max_k - k1)
        options = []
        for d in (LEFT, RIGHT):
            if min(want2, _room_along(lateral_from, d, cfg) // speed) >= cfg.min_interaction_frames:
                options.append(d)
        if not options:
            raise PlanningError(
                "object too close to border for pick_and_place: no lateral clearance after lift"
            )
        d2 = options[int(rng.integers(0, len(options)))]
        k2 = min(want2, cfg.max_leg_frames, _room_along(lateral_from, d2, cfg) // speed)
        k = k1 + k2
        f1 = int(rng.integers(pre_min, F - k - cfg.min_post_frames + 1))
        f2 = f1 + k
        legs = [(UP, k1), (d2, k2)]
        direction = d2
        post_dir = -d2

    # Gripper: smoothed approach, exact interaction legs, clamped retreat.
    gpath = np.zeros((F, 2), dtype=np.int64)
    approach = _approach(rng, grip0.astype(np.float64), arrival.astype(np.float64), f1)
    gpath[:f1] = np.rint(approach).astype(np.int64)
    gpath[0], gpath[f1 - 1] = grip0, arrival

    pos = arrival.copy()
    t = f1
    for d, kk in legs:
        for _ in range(kk):
            pos = pos + d * speed
            gpath[t] = pos
            t += 1
    lo = cfg.safe_margin
    hi_x, hi_y = cfg.width - 1 - cfg.safe_margin, cfg.height - 1 - cfg.safe_margin
    for tt in range(t, F):
        pos = pos + post_dir * speed if post_dir is not None else pos
        pos = np.array([np.clip(pos[0], lo, hi_x), np.clip(pos[1], lo, hi_y)])
        gpath[tt] = pos

    # Object: parked, then rigidly follows the gripper at the grasp offset.
    opath = np.zeros((F, 2), dtype=np.int64)
    opath[:f1] = obj
    for tt in range(f1, f2):
        opath[tt] = gpath[tt] + goff
    final = opath[f2 - 1] if f2 > f1 else obj
    for tt in range(f2, F):
        opath[tt] = final
    if cfg.inertia_px > 0 and f2 < F:
        opath[f2] = opath[f2 - 1] + direction * cfg.inertia_px
        for tt in range(f2 + 1, F):
            opath[tt] = opath[f2]

    _check_bounds(scene, gpath, opath)
    prompt = _prompt_for(skill, scene, direction if skill != "pick" else None)
    return ScriptedEpisode(
        skill=skill,
        frame_count=F,
        gripper_path=gpath,
        object_path=opath,
        f1=f1,
        f2=f2,
        prompt=prompt,
        grasp_offset=(int(goff[0]), int(goff[1])),
    )


def _check_bounds(scene: SpriteScene, gpath: np.ndarray, opath: np.ndarray) -> None:
    for name, path, sprite in (
        ("gripper", gpath, scene.gripper),
        ("object", opath, scene.objects[0]),
    ):
        half = sprite_half_extent(sprite.shape, sprite.size)
        if (
            path[:, 0].min() - half < 0
            or path[:, 1].min() - half < 0
            or path[:, 0].max() + half >= scene.width
            or path[:, 1].max() + half >= scene.height
        ):
            raise PlanningError(f"{name} path leaves the frame bounds")


def plan_episode(
    skill: str,
    scene_seed: int,
    motion_seed: int,
    config: WorldConfig = WorldConfig(),
) -> ScriptedEpisode:
    """Script an episode for the scene derived from `scene_seed`."""
    scene = make_scene(scene_seed, config)
    return plan_episode_for_scene(scene, skill, motion_seed, config)
