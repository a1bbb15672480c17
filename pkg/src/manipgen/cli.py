"""Command-line interface: dataset generation, curation, training, evaluation,
offline generation, auto-regressive chaining, and the annotation service."""

from __future__ import annotations

import argparse
import base64
import json
import sys
from dataclasses import fields as dataclass_fields
from pathlib import Path

import numpy as np


def _override(dc_type, overrides: dict):
    names = {f.name for f in dataclass_fields(dc_type)}
    unknown = set(overrides) - names
    if unknown:
        raise ValueError(f"unknown {dc_type.__name__} keys: {sorted(unknown)}")
    return dc_type(**overrides)


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    return json.loads(Path(path).read_text())


def cmd_gen_data(args) -> int:
    from .world import WorldConfig, generate_dataset

    cfg = _override(WorldConfig, _load_config(args.config).get("world", {}))
    manifest = generate_dataset(args.n, args.seed, args.out, cfg, workers=args.workers)
    print(f"wrote {manifest['count']} samples to {args.out}")
    return 0


def cmd_curate(args) -> int:
    from .curation import curate_directory

    curated, rejected = curate_directory(args.in_dir, args.out, tau=args.tau)
    for sid, reason in rejected:
        print(f"rejected {sid}: {reason}", file=sys.stderr)
    print(f"curated {len(curated)} samples to {args.out} ({len(rejected)} rejected)")
    return 0


def _model_config(vocab: list[str], overrides: dict):
    from .diffusion import DenoiserConfig

    base = dict(prompt_vocab_size=len(vocab))
    base.update(overrides)
    return _override(DenoiserConfig, base)


def cmd_train(args) -> int:
    from .diffusion import (
        TrainConfig,
        build_vocabulary,
        init_model,
        load_checkpoint,
        save_checkpoint,
        train,
    )
    from .diffusion.data import TrainingData
    from .store import list_sample_ids

    config = _load_config(args.config)
    vocab = build_vocabulary()
    model_cfg = _model_config(vocab, config.get("model", {}))
    train_overrides = config.get("train", {})
    if args.steps is not None:
        train_overrides["steps"] = args.steps
    if args.zero_conditioning:
        train_overrides["zero_conditioning"] = True
    train_overrides.setdefault("seed", args.seed)
    train_cfg = _override(TrainConfig, train_overrides)

    ids = list_sample_ids(args.data)
    if args.holdout >= len(ids):
        raise ValueError(f"holdout {args.holdout} >= dataset size {len(ids)}")
    train_ids = ids[: len(ids) - args.holdout]
    holdout_ids = ids[len(ids) - args.holdout :]

    if args.resume:
        state = load_checkpoint(args.resume)
        train_ids = state.metadata.get("train_ids", train_ids)
        holdout_ids = state.metadata.get("holdout_ids", holdout_ids)
        model_cfg = state.config
    else:
        state = init_model(
            model_cfg,
            seed=train_cfg.seed,
            vocab=vocab,
            schedule_kind=train_cfg.schedule_kind,
            schedule_steps=train_cfg.schedule_steps,
            lr_backbone=train_cfg.lr_backbone,
            lr_injector=train_cfg.lr_injector,
            weight_decay=train_cfg.weight_decay,
        )
    state.metadata["train_ids"] = train_ids
    state.metadata["holdout_ids"] = holdout_ids
    state.metadata["data_dir"] = str(args.data)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if train_cfg.steps == 0:
        save_checkpoint(state, out / "checkpoint.zip")
        print(f"wrote initialization checkpoint to {out / 'checkpoint.zip'}")
        return 0
    data = TrainingData(args.data, train_ids, vocab, model_cfg.prompt_length)
    logs = train(state, data, train_cfg, out_dir=out)
    print(
        f"trained {train_cfg.steps} steps; final loss {logs[-1]['loss_ema']:.5f}; "
        f"checkpoint at {out / 'checkpoint.zip'}"
    )
    return 0


def cmd_eval(args) -> int:
    from .diffusion import load_checkpoint
    from .evaluation import BenchmarkConfig, run_benchmark
    from .store import list_sample_ids

    state = None
    if args.ckpt:
        state = load_checkpoint(args.ckpt)
    elif not args.self_test:
        raise ValueError("--ckpt is required unless --self-test is set")
    if args.ids:
        sample_ids = json.loads(Path(args.ids).read_text())
    elif state is not None and state.metadata.get("holdout_ids"):
        sample_ids = state.metadata["holdout_ids"]
    else:
        sample_ids = list_sample_ids(args.data)
    config = BenchmarkConfig(
        steps=args.steps, cfg_scale=args.cfg_scale, seed=args.seed, self_test=args.self_test
    )
    report = run_benchmark(state, args.data, sample_ids, out_dir=args.out, config=config)
    print(json.dumps(report.aggregates, indent=1, sort_keys=True))
    if report.failures:
        print(f"{len(report.failures)} samples failed", file=sys.stderr)
    return 0


def _load_generator(args):
    from .service import checkpoint_generator, stub_generator

    if args.stub:
        return stub_generator
    if not args.ckpt:
        raise ValueError("--ckpt is required unless --stub is set")
    return checkpoint_generator(args.ckpt)


def cmd_generate(args) -> int:
    from .formats import save_rmvd
    from .service import sample_from_session_payload

    payload = json.loads(Path(args.annotation).read_text())
    sample = sample_from_session_payload(payload)
    generator = _load_generator(args)
    video = generator(
        sample, {"steps": args.steps, "cfg_scale": args.cfg_scale, "seed": args.seed}
    )
    save_rmvd(args.out, video)
    print(f"wrote {video.shape[0]} frames to {args.out}")
    return 0


def cmd_chain(args) -> int:
    from .diffusion import load_checkpoint
    from .diffusion.generate import chain_generate
    from .formats import decode_image_png, save_rmvd
    from .service import sample_from_session_payload

    script = json.loads(Path(args.script).read_text())
    init_image = decode_image_png(base64.b64decode(script["init_image"]))
    segments = [sample_from_session_payload(seg, init_frame=init_image) for seg in script["segments"]]
    state = load_checkpoint(args.ckpt)
    video = chain_generate(
        state,
        init_image,
        segments,
        steps=args.steps,
        cfg_scale=args.cfg_scale,
        seed=args.seed,
    )
    save_rmvd(args.out, video)
    print(f"wrote {video.shape[0]} chained frames to {args.out}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    generator = _load_generator(args)
    app = create_app(args.store, generator=generator, robot_mask_preset=args.robot_mask_preset)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="manipgen")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a synthetic dataset")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--config")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("curate", help="curate raw samples into annotated records")
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--tau", type=float, default=1.0)
    p.set_defaults(func=cmd_curate)

    p = sub.add_parser("train", help="train the diffusion model")
    p.add_argument("--data", required=True)
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--holdout", type=int, default=100)
    p.add_argument("--zero-conditioning", action="store_true")
    p.add_argument("--resume", help="continue training from a checkpoint")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="run the held-out benchmark")
    p.add_argument("--ckpt")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--ids", help="JSON file with an explicit id list")
    p.add_argument("--steps", type=int, default=50)
    p.add_argument("--cfg-scale", type=float, default=6.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--self-test", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("generate", help="generate a video from an annotation JSON")
    p.add_argument("--ckpt")
    p.add_argument("--stub", action="store_true")
    p.add_argument("--annotation", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--steps", type=int, default=50)
    p.add_argument("--cfg-scale", type=float, default=6.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("chain", help="auto-regressive multi-segment generation")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--script", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--steps", type=int, default=50)
    p.add_argument("--cfg-scale", type=float, default=6.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_chain)

    p = sub.add_parser("serve", help="run the annotation/generation service")
    p.add_argument("--ckpt")
    p.add_argument("--stub", action="store_true")
    p.add_argument("--port", type=int, default=8008)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--store", required=True)
    p.add_argument("--robot-mask-preset")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BrokenPipeError:
        return 1
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
