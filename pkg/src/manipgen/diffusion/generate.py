"""Full generation path: annotation -> conditioning -> sampling -> frames."""

from __future__ import annotations

import numpy as np
import torch

from ..codec import CodecConfig, LatentVideo, decode, encode_frame, frames_to_unit, unit_to_frames
from ..conditioning import assemble_collaborative_latent
from ..curation import AnnotatedSample
from .model import ModelState
from .sampler import ddim_sample
from .vocab import tokenize_prompt


def codec_config_of(state: ModelState) -> CodecConfig:
    return CodecConfig(
        spatial_factor=state.codec["spatial_factor"],
        temporal_factor=state.codec["temporal_factor"],
    )


def conditioning_tensors(
    state: ModelState, sample: AnnotatedSample
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """(init latent, prompt ids, conditioning volume) for one annotation."""
    codec_cfg = codec_config_of(state)
    z = encode_frame(frames_to_unit(sample.init_frame), codec_cfg)
    latent = assemble_collaborative_latent(
        z, sample.robot_mask, sample.object_mask, sample.trajectory, codec_cfg
    )
    prompt = torch.tensor(
        tokenize_prompt(sample.prompt, state.vocab, state.config.prompt_length),
        dtype=torch.long,
    )
    return torch.from_numpy(z), prompt, torch.from_numpy(latent.v)


def decode_latents(state: ModelState, x0: torch.Tensor) -> np.ndarray:
    """(f, c, h, w) latent -> F x H x W x 3 uint8 frames."""
    codec_cfg = codec_config_of(state)
    frames = decode(LatentVideo(x=x0.numpy(), config=codec_cfg))
    return unit_to_frames(np.clip(frames, -1.0, 1.0))


def generate_latents(
    state: ModelState,
    sample: AnnotatedSample,
    steps: int = 50,
    cfg_scale: float = 6.0,
    seed: int = 0,
    inject: bool = True,
) -> torch.Tensor:
    z, prompt, v = conditioning_tensors(state, sample)
    return ddim_sample(
        state,
        z[None],
        prompt[None],
        v[None] if inject else None,
        steps=steps,
        cfg_scale=cfg_scale,
        seed=seed,
    )


def generate_video(
    state: ModelState,
    sample: AnnotatedSample,
    steps: int = 50,
    cfg_scale: float = 6.0,
    seed: int = 0,
    inject: bool = True,
) -> np.ndarray:
    """Generate F x H x W x 3 uint8 frames for an annotated sample (no video)."""
    x0 = generate_latents(state, sample, steps, cfg_scale, seed, inject)
    return decode_latents(state, x0[0])


def chain_generate(
    state: ModelState,
    init_frame: np.ndarray,
    segments: list[AnnotatedSample],
    steps: int = 50,
    cfg_scale: float = 6.0,
    seed: int = 0,
) -> np.ndarray:
    """Auto-regressive multi-segment generation: each segment starts from the
    previous segment's final frame. At each boundary the earlier segment's
    final frame is dropped in favor of the next segment's regeneration of it,
    so a chained segment is bitwise the same as replaying it in isolation."""
    if not segments:
        raise ValueError("need at least one segment")
    current = init_frame
    chunks: list[np.ndarray] = []
    for i, segment in enumerate(segments):
        segment.init_frame = current
        try:
            video = generate_video(state, segment, steps, cfg_scale, seed + i)
        except Exception as exc:
            raise RuntimeError(f"segment {i}: {exc}") from exc
        current = video[-1]
        chunks.append(video[:-1] if i + 1 < len(segments) else video)
    return np.concatenate(chunks, axis=0)
