"""Training data access: curated samples to model tensors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from .. import store
from ..codec import CodecConfig, encode, frames_to_unit
from ..conditioning import assemble_collaborative_latent
from .vocab import tokenize_prompt


@dataclass
class Batch:
    x0: torch.Tensor  # (B, f, c, h, w)
    init_latent: torch.Tensor  # (B, c, h, w)
    v: torch.Tensor  # (B, f, c, h, w)
    prompt_ids: torch.Tensor  # (B, L)
    ids: list[str]


class TrainingData:
    """Preloads curated videos and annotation records; encodes per draw.

    Latents are cheap permutations of the raw frames, so only the uint8
    videos are cached in memory.
    """

    def __init__(
        self,
        directory: str,
        sample_ids: list[str],
        vocab: list[str],
        prompt_length: int,
        codec: CodecConfig = CodecConfig(),
        gamma: float = 0.5,
    ):
        self.directory = directory
        self.sample_ids = list(sample_ids)
        self.vocab = vocab
        self.prompt_length = prompt_length
        self.codec = codec
        self.gamma = gamma
        self._samples = {}
        self._videos = {}
        for sid in self.sample_ids:
            sample = store.load_sample(directory, sid, with_video=False)
            self._samples[sid] = sample
            self._videos[sid] = store.load_video_for(directory, sid)

    def __len__(self) -> int:
        return len(self.sample_ids)

    def tensors_for(self, sid: str) -> tuple[np.ndarray, np.ndarray, np.ndarray, list[int]]:
        sample = self._samples[sid]
        video = frames_to_unit(self._videos[sid])
        x0 = encode(video, self.codec).x
        z = x0[0]
        latent = assemble_collaborative_latent(
            z, sample.robot_mask, sample.object_mask, sample.trajectory, self.codec, self.gamma
        )
        ids = tokenize_prompt(sample.prompt, self.vocab, self.prompt_length)
        return x0, z, latent.v, ids

    def batch(self, sids: list[str]) -> Batch:
        xs, zs, vs, ps = [], [], [], []
        for sid in sids:
            x0, z, v, ids = self.tensors_for(sid)
            xs.append(x0)
            zs.append(z)
            vs.append(v)
            ps.append(ids)
        return Batch(
            x0=torch.from_numpy(np.stack(xs)),
            init_latent=torch.from_numpy(np.stack(zs)),
            v=torch.from_numpy(np.stack(vs)),
            prompt_ids=torch.tensor(ps, dtype=torch.long),
            ids=list(sids),
        )
