"""Deterministic DDIM sampling with classifier-free guidance."""

from __future__ import annotations

import torch

from .model import ModelState
from .schedule import DiffusionSchedule


@torch.no_grad()
def _predict(
    state: ModelState,
    x: torch.Tensor,
    t: torch.Tensor,
    prompt_ids: torch.Tensor,
    init_latent: torch.Tensor,
    v: torch.Tensor | None,
    cfg_scale: float,
) -> torch.Tensor:
    """Guided noise estimate. The conditioning volume is injected in both
    branches; only the prompt is dropped in the unconditional one."""
    model = state.model
    if cfg_scale == 1.0:
        return model(x, t, prompt_ids, init_latent, v)
    null_ids = torch.zeros_like(prompt_ids)
    uncond = model(x, t, null_ids, init_latent, v)
    if cfg_scale == 0.0:
        return uncond
    cond = model(x, t, prompt_ids, init_latent, v)
    return uncond + cfg_scale * (cond - uncond)


@torch.no_grad()
def ddim_sample(
    state: ModelState,
    init_latent: torch.Tensor,  # (B, c, h, w)
    prompt_ids: torch.Tensor,  # (B, L)
    v: torch.Tensor | None,  # (B, f, c, h, w)
    steps: int = 50,
    cfg_scale: float = 6.0,
    seed: int = 0,
    noise: torch.Tensor | None = None,
) -> torch.Tensor:
    """Eta-zero DDIM over a uniformly spaced timestep subset; returns the
    predicted clean latent (B, f, c, h, w). Initial noise is drawn from
    `seed` unless given explicitly."""
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    if cfg_scale < 0:
        raise ValueError(f"cfg_scale must be >= 0, got {cfg_scale}")
    cfg = state.config
    schedule = DiffusionSchedule(steps=state.schedule_steps, kind=state.schedule_kind)
    b = init_latent.shape[0]
    shape = (b, cfg.latent_frames, cfg.latent_channels, cfg.latent_height, cfg.latent_width)
    if noise is None:
        generator = torch.Generator().manual_seed(seed)
        x = torch.randn(shape, generator=generator, dtype=init_latent.dtype)
    else:
        if tuple(noise.shape) != shape:
            raise ValueError(f"noise has shape {tuple(noise.shape)}, expected {shape}")
        x = noise.to(init_latent.dtype)

    timesteps = schedule.ddim_timesteps(steps)
    state.model.eval()
    for i, t in enumerate(timesteps):
        t_prev = timesteps[i + 1] if i + 1 < len(timesteps) else 0
        tb = torch.full((b,), t, dtype=torch.long)
        eps = _predict(state, x, tb, prompt_ids, init_latent, v, cfg_scale)
        a_t, s_t = float(schedule.alpha[t]), float(schedule.sigma[t])
        a_p, s_p = float(schedule.alpha[t_prev]), float(schedule.sigma[t_prev])
        x0_pred = (x - s_t * eps) / a_t
        x = a_p * x0_pred + s_p * eps
    return x
