"""Deterministic 2D sprite world: scripted gripper/object episodes with
exact masks, tracks, phase boundaries, and prompts."""

from .scene import (
    BACKGROUNDS,
    COLOR_PALETTE,
    PlanningError,
    SpriteDescriptor,
    SpriteScene,
    WorldConfig,
    make_scene,
    sprite_offsets,
)
from .planner import ScriptedEpisode, plan_episode, plan_episode_for_scene
from .render import RenderedSample, render_episode
from .dataset import generate_dataset, load_manifest

__all__ = [
    "BACKGROUNDS",
    "COLOR_PALETTE",
    "PlanningError",
    "RenderedSample",
    "ScriptedEpisode",
    "SpriteDescriptor",
    "SpriteScene",
    "WorldConfig",
    "generate_dataset",
    "load_manifest",
    "make_scene",
    "plan_episode",
    "plan_episode_for_scene",
    "render_episode",
    "sprite_offsets",
]
