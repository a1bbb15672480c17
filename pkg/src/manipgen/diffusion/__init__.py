"""Toy video diffusion transformer with trajectory-conditioned motion injection."""

from .schedule import DiffusionSchedule
from .vocab import build_vocabulary, tokenize_prompt, NULL_TOKEN
from .model import DenoiserConfig, Denoiser, init_model, ModelState
from .checkpoint import save_checkpoint, load_checkpoint
from .train import TrainConfig, train, training_step
from .sampler import ddim_sample
from .generate import generate_video, chain_generate

__all__ = [
    "DenoiserConfig",
    "Denoiser",
    "DiffusionSchedule",
    "ModelState",
    "NULL_TOKEN",
    "TrainConfig",
    "build_vocabulary",
    "chain_generate",
    "ddim_sample",
    "generate_video",
    "init_model",
    "load_checkpoint",
    "save_checkpoint",
    "tokenize_prompt",
    "train",
    "training_step",
]
