"""Noise-prediction training with classifier-free prompt dropout."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, asdict, field
from pathlib import Path

import numpy as np
import torch

from .data import Batch, TrainingData
from .model import ModelState
from .schedule import DiffusionSchedule


@dataclass
class TrainConfig:
    steps: int = 30000
    batch_size: int = 8
    lr_backbone: float = 2e-5
    lr_injector: float = 1e-4
    weight_decay: float = 1e-4
    cfg_dropout: float = 0.1
    seed: int = 0
    zero_conditioning: bool = False  # ablation: train with V forced to zero
    log_every: int = 50
    checkpoint_every: int = 0  # 0 = only at the end
    schedule_kind: str = "cosine"
    schedule_steps: int = 1000


def noise_prediction_loss(
    model,
    schedule: DiffusionSchedule,
    batch: Batch,
    t: torch.Tensor,
    eps: torch.Tensor,
    prompt_ids: torch.Tensor,
) -> torch.Tensor:
    """MSE between injected noise and its prediction at per-sample timesteps."""
    dtype = batch.x0.dtype
    alpha = torch.as_tensor(schedule.alpha, dtype=dtype)[t][:, None, None, None, None]
    sigma = torch.as_tensor(schedule.sigma, dtype=dtype)[t][:, None, None, None, None]
    x_t = alpha * batch.x0 + sigma * eps
    pred = model(x_t, t, prompt_ids, batch.init_latent, batch.v)
    return torch.mean((eps - pred) ** 2)


def training_step(
    state: ModelState,
    schedule: DiffusionSchedule,
    batch: Batch,
    generator: torch.Generator,
    cfg_dropout: float = 0.1,
) -> float:
    """One optimizer update; prompts are nulled with the dropout probability."""
    model = state.model
    b = batch.x0.shape[0]
    t = torch.randint(1, schedule.steps + 1, (b,), generator=generator)
    eps = torch.randn(batch.x0.shape, generator=generator, dtype=batch.x0.dtype)
    prompt_ids = batch.prompt_ids.clone()
    drop = torch.rand(b, generator=generator) < cfg_dropout
    prompt_ids[drop] = 0

    loss = noise_prediction_loss(model, schedule, batch, t, eps, prompt_ids)
    if not torch.isfinite(loss):
        raise RuntimeError(
            f"non-finite loss at step {state.step}: t={t.tolist()}, batch={batch.ids}"
        )
    state.optimizer.zero_grad(set_to_none=True)
    loss.backward()
    state.optimizer.step()
    state.step += 1
    return float(loss.detach())


def train(
    state: ModelState,
    data: TrainingData,
    config: TrainConfig,
    out_dir: str | Path | None = None,
    log_name: str = "train_log.jsonl",
) -> list[dict]:
    """Seed-ordered batches over the training ids; returns the log entries."""
    from .checkpoint import save_checkpoint

    schedule = DiffusionSchedule(steps=config.schedule_steps, kind=config.schedule_kind)
    generator = torch.Generator().manual_seed(config.seed)
    order_rng = np.random.default_rng(config.seed)
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    log_path = out / log_name if out is not None else None
    logs: list[dict] = []
    started = time.time()

    ids = list(data.sample_ids)
    queue: list[str] = []
    running = None
    while state.step < config.steps:  # `steps` is the total target, so resume continues
        while len(queue) < config.batch_size:
            perm = order_rng.permutation(len(ids))
            queue.extend(ids[i] for i in perm)
        sids, queue = queue[: config.batch_size], queue[config.batch_size :]
        batch = data.batch(sids)
        if config.zero_conditioning:
            batch.v.zero_()
        loss = training_step(state, schedule, batch, generator, config.cfg_dropout)
        running = loss if running is None else 0.98 * running + 0.02 * loss
        if state.step % config.log_every == 1 or state.step == config.steps:
            entry = {
                "step": state.step,
                "loss": loss,
                "loss_ema": running,
                "lr": [g["lr"] for g in state.optimizer.param_groups],
                "wallclock": round(time.time() - started, 3),
            }
            logs.append(entry)
            if log_path is not None:
                with log_path.open("a") as fh:
                    fh.write(json.dumps(entry) + "\n")
        if (
            out is not None
            and config.checkpoint_every
            and state.step % config.checkpoint_every == 0
        ):
            save_checkpoint(state, out / f"ckpt_{state.step:06d}.zip")
    state.metadata["train_config"] = asdict(config)
    if out is not None:
        save_checkpoint(state, out / "checkpoint.zip")
    return logs
