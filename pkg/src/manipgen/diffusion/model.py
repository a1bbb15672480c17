"""Denoiser: a small video DiT with per-block zero-initialized motion injectors.

Token layout mirrors the array codec: non-overlapping 2x2x2 latent patches,
t-major then rows then cols. Prompt tokens are prepended to the video tokens
and take part in full attention; the injectors touch only the video tokens.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, asdict, field

import torch
import torch.nn as nn
import torch.nn.functional as F


class ModelConfigError(ValueError):
    pass


@dataclass(frozen=True)
class DenoiserConfig:
    blocks: int = 4
    hidden: int = 128
    heads: int = 4
    prompt_vocab_size: int = 32
    prompt_length: int = 10
    cfg_dropout: float = 0.1
    norm_groups: int = 32  # reduced to the largest divisor of `hidden` <= this
    latent_frames: int = 8
    latent_channels: int = 96
    latent_height: int = 16
    latent_width: int = 16

    def validate(self) -> None:
        problems = []
        if self.hidden % self.heads:
            problems.append(f"hidden {self.hidden} not divisible by heads {self.heads}")
        if self.hidden % 4:
            problems.append(f"hidden {self.hidden} not divisible by 4 (injector mid channels)")
        if self.latent_frames % 2 or self.latent_height % 2 or self.latent_width % 2:
            problems.append("latent dims must be even for 2x2x2 patches")
        if self.prompt_vocab_size < 1 or self.prompt_length < 1:
            problems.append("prompt vocabulary and length must be positive")
        if self.blocks < 1:
            problems.append("need at least one block")
        if problems:
            raise ModelConfigError("; ".join(problems))

    @property
    def group_count(self) -> int:
        g = min(self.norm_groups, self.hidden)
        while self.hidden % g:
            g -= 1
        return g

    @property
    def video_tokens(self) -> int:
        return (self.latent_frames // 2) * (self.latent_height // 2) * (self.latent_width // 2)

    @property
    def token_in_channels(self) -> int:
        # noisy latent concatenated with the broadcast init-frame latent
        return 8 * (2 * self.latent_channels)

    def hash(self) -> str:
        return hashlib.sha256(json.dumps(asdict(self), sort_keys=True).encode()).hexdigest()[:16]


def patchify_tokens(x: torch.Tensor) -> torch.Tensor:
    """(B, f, c, h, w) -> (B, T, 8c) with the codec's token and channel order."""
    b, f, c, h, w = x.shape
    blocks = x.view(b, f // 2, 2, c, h // 2, 2, w // 2, 2)
    tokens = blocks.permute(0, 1, 4, 6, 2, 5, 7, 3)  # (B, ft, hr, wc, dt, dj, dk, c)
    return tokens.reshape(b, (f // 2) * (h // 2) * (w // 2), 8 * c)


def unpatchify_tokens(tokens: torch.Tensor, f: int, c: int, h: int, w: int) -> torch.Tensor:
    b = tokens.shape[0]
    blocks = tokens.view(b, f // 2, h // 2, w // 2, 2, 2, 2, c)
    x = blocks.permute(0, 1, 4, 7, 2, 5, 3, 6)
    return x.reshape(b, f, c, h, w)


def sinusoidal_embedding(t: torch.Tensor, dim: int) -> torch.Tensor:
    half = dim // 2
    freqs = torch.exp(
        -math.log(10000.0) * torch.arange(half, dtype=t.dtype, device=t.device) / max(half - 1, 1)
    )
    args = t[:, None].to(freqs) * freqs[None]
    emb = torch.cat([torch.sin(args), torch.cos(args)], dim=1)
    if dim % 2:
        emb = F.pad(emb, (0, 1))
    return emb


class MotionInjector(nn.Module):
    """Zero-initialized spatial-then-temporal convolution over the patchified
    conditioning volume, added to hidden states as norm(V~) + V~."""

    def __init__(self, cfg: DenoiserConfig):
        super().__init__()
        c8 = 8 * cfg.latent_channels
        mid = cfg.hidden // 4
        self.cfg = cfg
        self.conv_space = nn.Conv2d(c8, mid, kernel_size=3, padding=1)
        self.conv_time = nn.Conv1d(mid, cfg.hidden, kernel_size=3, padding=1)
        self.norm = nn.GroupNorm(cfg.group_count, cfg.hidden)
        nn.init.zeros_(self.conv_space.weight)
        nn.init.zeros_(self.conv_space.bias)
        nn.init.zeros_(self.conv_time.weight)
        nn.init.zeros_(self.conv_time.bias)
        nn.init.ones_(self.norm.weight)
        nn.init.zeros_(self.norm.bias)  # zero affine bias: norm(0) stays 0

    def encode(self, v: torch.Tensor) -> torch.Tensor:
        """(B, f, c, h, w) conditioning volume -> (B, T, C) token features."""
        cfg = self.cfg
        b = v.shape[0]
        ft, hr, wc = cfg.latent_frames // 2, cfg.latent_height // 2, cfg.latent_width // 2
        tokens = patchify_tokens(v)  # (B, T, 8c)
        grid = tokens.view(b, ft, hr, wc, -1).permute(0, 1, 4, 2, 3)  # (B, ft, 8c, hr, wc)
        s = self.conv_space(grid.reshape(b * ft, -1, hr, wc))
        mid = s.shape[1]
        s = s.view(b, ft, mid, hr, wc).permute(0, 3, 4, 2, 1)  # (B, hr, wc, mid, ft)
        tmp = self.conv_time(s.reshape(b * hr * wc, mid, ft))
        tmp = tmp.view(b, hr, wc, cfg.hidden, ft).permute(0, 4, 1, 2, 3)  # (B, ft, hr, wc, C)
        return tmp.reshape(b, ft * hr * wc, cfg.hidden)

    def forward(self, h: torch.Tensor, v: torch.Tensor) -> torch.Tensor:
        """h: (B, T, C) video-token states; returns h + norm(V~) + V~."""
        vt = self.encode(v)
        normed = self.norm(vt.transpose(1, 2)).transpose(1, 2)
        return h + normed + vt


class Attention(nn.Module):
    def __init__(self, dim: int, heads: int):
        super().__init__()
        self.heads = heads
        self.qkv = nn.Linear(dim, dim * 3)
        self.proj = nn.Linear(dim, dim)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        b, t, d = x.shape
        qkv = self.qkv(x).view(b, t, 3, self.heads, d // self.heads)
        q, k, v = (qkv[:, :, i].transpose(1, 2) for i in range(3))
        out = F.scaled_dot_product_attention(q, k, v)
        return self.proj(out.transpose(1, 2).reshape(b, t, d))


class DiTBlock(nn.Module):
    def __init__(self, dim: int, heads: int):
        super().__init__()
        self.norm1 = nn.LayerNorm(dim)
        self.attn = Attention(dim, heads)
        self.norm2 = nn.LayerNorm(dim)
        self.mlp = nn.Sequential(
            nn.Linear(dim, dim * 4), nn.GELU(), nn.Linear(dim * 4, dim)
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = x + self.attn(self.norm1(x))
        return x + self.mlp(self.norm2(x))


class Denoiser(nn.Module):
    def __init__(self, cfg: DenoiserConfig):
        super().__init__()
        cfg.validate()
        self.cfg = cfg
        c = cfg.hidden
        self.token_in = nn.Linear(cfg.token_in_channels, c)
        self.prompt_embed = nn.Embedding(cfg.prompt_vocab_size, c)
        self.time_mlp = nn.Sequential(nn.Linear(c, 4 * c), nn.GELU(), nn.Linear(4 * c, c))
        self.pos_embed = nn.Parameter(
            torch.zeros(1, cfg.prompt_length + cfg.video_tokens, c)
        )
        self.blocks = nn.ModuleList(DiTBlock(c, cfg.heads) for _ in range(cfg.blocks))
        self.injectors = nn.ModuleList(MotionInjector(cfg) for _ in range(cfg.blocks))
        self.final_norm = nn.LayerNorm(c)
        self.token_out = nn.Linear(c, 8 * cfg.latent_channels)

        nn.init.normal_(self.pos_embed, std=0.02)
        nn.init.normal_(self.prompt_embed.weight, std=0.02)
        nn.init.zeros_(self.token_out.weight)
        nn.init.zeros_(self.token_out.bias)

    def injector_parameters(self):
        return list(self.injectors.parameters())

    def backbone_parameters(self):
        injector_ids = {id(p) for p in self.injector_parameters()}
        return [p for p in self.parameters() if id(p) not in injector_ids]

    def forward(
        self,
        x_t: torch.Tensor,  # (B, f, c, h, w)
        t: torch.Tensor,  # (B,) diffusion timesteps
        prompt_ids: torch.Tensor,  # (B, L)
        init_latent: torch.Tensor,  # (B, c, h, w)
        v: torch.Tensor | None,  # (B, f, c, h, w) conditioning volume
        inject: bool = True,
    ) -> torch.Tensor:
        cfg = self.cfg
        b, f, c, h, w = x_t.shape
        x_in = torch.cat([x_t, init_latent[:, None].expand(b, f, c, h, w)], dim=2)
        video = self.token_in(patchify_tokens(x_in))
        prompt = self.prompt_embed(prompt_ids)
        seq = torch.cat([prompt, video], dim=1) + self.pos_embed
        seq = seq + self.time_mlp(sinusoidal_embedding(t.to(seq.dtype), cfg.hidden))[:, None]
        lp = cfg.prompt_length
        for block, injector in zip(self.blocks, self.injectors):
            if inject and v is not None:
                seq = torch.cat([seq[:, :lp], injector(seq[:, lp:], v)], dim=1)
            seq = block(seq)
        out = self.token_out(self.final_norm(seq[:, lp:]))
        return unpatchify_tokens(out, f, cfg.latent_channels, h, w)


@dataclass
class ModelState:
    """Model, optimizer moments, step counter, and run metadata."""

    model: Denoiser
    optimizer: torch.optim.AdamW
    step: int
    config: DenoiserConfig
    schedule_kind: str
    schedule_steps: int
    vocab: list[str]
    codec: dict  # spatial/temporal factors and frame geometry
    metadata: dict = field(default_factory=dict)

    def config_hash(self) -> str:
        return self.config.hash()


def make_optimizer(
    model: Denoiser,
    lr_backbone: float = 2e-5,
    lr_injector: float = 1e-4,
    betas: tuple[float, float] = (0.9, 0.999),
    weight_decay: float = 1e-4,
) -> torch.optim.AdamW:
    return torch.optim.AdamW(
        [
            {"params": model.backbone_parameters(), "lr": lr_backbone},
            {"params": model.injector_parameters(), "lr": lr_injector},
        ],
        betas=betas,
        weight_decay=weight_decay,
    )


def init_model(
    cfg: DenoiserConfig,
    seed: int,
    vocab: list[str],
    codec: dict | None = None,
    schedule_kind: str = "cosine",
    schedule_steps: int = 1000,
    lr_backbone: float = 2e-5,
    lr_injector: float = 1e-4,
    weight_decay: float = 1e-4,
) -> ModelState:
    """Seeded construction; injector convolutions start at exactly zero so the
    conditioning volume has no effect until trained."""
    cfg.validate()
    torch.manual_seed(seed)
    model = Denoiser(cfg)
    optimizer = make_optimizer(model, lr_backbone, lr_injector, weight_decay=weight_decay)
    return ModelState(
        model=model,
        optimizer=optimizer,
        step=0,
        config=cfg,
        schedule_kind=schedule_kind,
        schedule_steps=schedule_steps,
        vocab=list(vocab),
        codec=codec or {"spatial_factor": 4, "temporal_factor": 2, "frames": 15, "height": 64, "width": 64},
        metadata={"init_seed": seed, "lr_backbone": lr_backbone, "lr_injector": lr_injector},
    )
