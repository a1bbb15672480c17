"""Versioned checkpoint container: config JSON plus named float32 blobs.

A checkpoint is a deterministic (timestamp-free, stored, ordered) zip holding
``meta.json``, one ``params/<name>.f32`` blob per parameter, and the AdamW
moments under ``optim/``. Loading reconstructs a ModelState whose forward
outputs match the saved model bitwise.
"""

from __future__ import annotations

import io
import json
import zipfile
from dataclasses import asdict
from pathlib import Path

import numpy as np
import torch

from .model import DenoiserConfig, Denoiser, ModelState, make_optimizer

FORMAT_VERSION = 1
_EPOCH = (1980, 1, 1, 0, 0, 0)


class CheckpointError(ValueError):
    pass


def _blob(array: torch.Tensor) -> bytes:
    return np.ascontiguousarray(array.detach().cpu().numpy(), dtype="<f4").tobytes()


def _write(zf: zipfile.ZipFile, name: str, payload: bytes) -> None:
    info = zipfile.ZipInfo(name, date_time=_EPOCH)
    info.compress_type = zipfile.ZIP_STORED
    zf.writestr(info, payload)


def save_checkpoint(state: ModelState, path: str | Path) -> None:
    model = state.model
    meta = {
        "format_version": FORMAT_VERSION,
        "model_config": asdict(state.config),
        "config_hash": state.config_hash(),
        "schedule_kind": state.schedule_kind,
        "schedule_steps": state.schedule_steps,
        "step": state.step,
        "vocab": state.vocab,
        "codec": state.codec,
        "metadata": state.metadata,
        "param_names": [n for n, _ in model.named_parameters()],
    }
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w") as zf:
        _write(zf, "meta.json", json.dumps(meta, sort_keys=True).encode())
        for name, param in model.named_parameters():
            _write(zf, f"params/{name}.f32", _blob(param.data))
        optim_meta = []
        for i, (name, param) in enumerate(model.named_parameters()):
            opt_state = state.optimizer.state.get(param, {})
            entry = {"name": name, "has_state": bool(opt_state)}
            if opt_state:
                entry["step"] = float(opt_state["step"])
                _write(zf, f"optim/{i}.exp_avg.f32", _blob(opt_state["exp_avg"]))
                _write(zf, f"optim/{i}.exp_avg_sq.f32", _blob(opt_state["exp_avg_sq"]))
            optim_meta.append(entry)
        _write(zf, "optim.json", json.dumps(optim_meta, sort_keys=True).encode())
    Path(path).write_bytes(buf.getvalue())


def load_checkpoint(path: str | Path) -> ModelState:
    data = Path(path).read_bytes()
    with zipfile.ZipFile(io.BytesIO(data)) as zf:
        meta = json.loads(zf.read("meta.json"))
        if meta.get("format_version") != FORMAT_VERSION:
            raise CheckpointError(f"unsupported checkpoint version {meta.get('format_version')}")
        cfg = DenoiserConfig(**meta["model_config"])
        if cfg.hash() != meta["config_hash"]:
            raise CheckpointError("config hash mismatch in checkpoint")
        model = Denoiser(cfg)
        named = dict(model.named_parameters())
        if sorted(named) != sorted(meta["param_names"]):
            raise CheckpointError("parameter names disagree with checkpoint")
        with torch.no_grad():
            for name, param in named.items():
                raw = np.frombuffer(zf.read(f"params/{name}.f32"), dtype="<f4")
                if raw.size != param.numel():
                    raise CheckpointError(f"parameter {name} has wrong size in checkpoint")
                param.copy_(torch.from_numpy(raw.reshape(param.shape).copy()))
        md = meta["metadata"]
        optimizer = make_optimizer(
            model,
            lr_backbone=md.get("lr_backbone", 2e-5),
            lr_injector=md.get("lr_injector", 1e-4),
            weight_decay=md.get("weight_decay", 1e-4),
        )
        optim_meta = json.loads(zf.read("optim.json"))
        params_in_order = [named[n] for n in meta["param_names"]]
        for i, entry in enumerate(optim_meta):
            if not entry["has_state"]:
                continue
            param = params_in_order[i]
            avg = np.frombuffer(zf.read(f"optim/{i}.exp_avg.f32"), dtype="<f4")
            sq = np.frombuffer(zf.read(f"optim/{i}.exp_avg_sq.f32"), dtype="<f4")
            optimizer.state[param] = {
                "step": torch.tensor(entry["step"]),
                "exp_avg": torch.from_numpy(avg.reshape(param.shape).copy()),
                "exp_avg_sq": torch.from_numpy(sq.reshape(param.shape).copy()),
            }
    return ModelState(
        model=model,
        optimizer=optimizer,
        step=meta["step"],
        config=cfg,
        schedule_kind=meta["schedule_kind"],
        schedule_steps=meta["schedule_steps"],
        vocab=meta["vocab"],
        codec=meta["codec"],
        metadata=md,
    )
