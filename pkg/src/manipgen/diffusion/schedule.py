"""Variance-preserving noise schedules and the DDIM step subset."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class ScheduleError(ValueError):
    pass


@dataclass
class DiffusionSchedule:
    """Per-step signal/noise coefficients with alpha_t^2 + sigma_t^2 = 1.

    Index 0 corresponds to t=0 (clean data, alpha=1); indices 1..steps are
    the trainable noise levels.
    """

    steps: int = 1000
    kind: str = "cosine"  # "cosine" | "linear"
    alpha: np.ndarray = field(init=False, repr=False)
    sigma: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.steps < 1:
            raise ScheduleError(f"need at least one step, got {self.steps}")
        t = np.arange(self.steps + 1, dtype=np.float64)
        if self.kind == "cosine":
            s = 0.008
            f = np.cos((t / self.steps + s) / (1 + s) * math.pi / 2) ** 2
            alpha_bar = np.clip(f / f[0], 1e-9, 1.0)
        elif self.kind == "linear":
            betas = np.linspace(1e-4, 0.02, self.steps)
            alpha_bar = np.concatenate([[1.0], np.cumprod(1.0 - betas)])
        else:
            raise ScheduleError(f"unknown schedule kind {self.kind!r}")
        self.alpha = np.sqrt(alpha_bar)
        self.sigma = np.sqrt(1.0 - alpha_bar)

    def ddim_timesteps(self, num: int) -> list[int]:
        """Uniformly spaced descending subset of 1..steps ending the chain."""
        if num < 1:
            raise ScheduleError(f"need at least one sampling step, got {num}")
        num = min(num, self.steps)
        ts = np.rint(np.linspace(self.steps, 1, num)).astype(int)
        out = []
        for t in ts:
            if not out or t < out[-1]:
                out.append(int(t))
        return out
