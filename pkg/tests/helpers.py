"""Brute-force oracles and harnesses shared by the acceptance suite."""

import numpy as np
import torch

from manipgen import conditioning as cond
from manipgen.codec import CodecConfig, latent_group_frames


def brute_downsample(mask, c_s):
    h, w = mask.shape[0] // c_s, mask.shape[1] // c_s
    out = np.zeros((h, w), dtype=bool)
    best, best_cell = -1, None
    for i in range(h):
        for j in range(w):
            block = mask[i * c_s : (i + 1) * c_s, j * c_s : (j + 1) * c_s]
            n = int(block.sum())
            out[i, j] = n / (c_s * c_s) >= 0.5
            if n > best:
                best, best_cell = n, (i, j)
    if mask.any() and not out.any():
        out[best_cell] = True
    return out


def brute_disc_cells(center, radius, h, w):
    x, y = center
    return {
        (j, k)
        for j in range(w)
        for k in range(h)
        if (j - x) ** 2 + (k - y) ** 2 <= radius * radius
    }


def brute_masked_pool(z, m):
    c = z.shape[0]
    total = np.zeros(c)
    count = 0
    for i in range(z.shape[1]):
        for j in range(z.shape[2]):
            if m[i, j]:
                total += z[:, i, j]
                count += 1
    return total / count


def brute_frame_to_latent(t, c_t, frames):
    groups = [[1]]
    start = 2
    while start <= frames:
        groups.append(list(range(start, min(start + c_t, frames + 1))))
        start += c_t
    return next(i + 1 for i, g in enumerate(groups) if t in g)


def brute_assemble(z, robot_mask, object_mask, traj, config=CodecConfig(), gamma=0.5):
    """Independent sequential compositor: copy the previous timestep, paint
    the phase-owning subject's disc."""
    c_s, c_t = config.spatial_factor, config.temporal_factor
    frames = traj.frame_count
    f = config.latent_frames(frames)
    c, h, w = z.shape
    dom = cond.subject_embedding(z, robot_mask, "dominant", c_s, gamma)
    sub = cond.subject_embedding(z, object_mask, "submissive", c_s, gamma)
    layers = []
    prev = np.zeros((c, h, w), dtype=np.float32)
    for l in range(1, f + 1):
        cur = prev.copy()
        t = latent_group_frames(l, c_t, frames)[-1]
        emb = dom if (t <= traj.f1 or t > traj.f2) else sub
        x, y = int(traj.points[t - 1][0] // c_s), int(traj.points[t - 1][1] // c_s)
        for (j, k) in brute_disc_cells((x, y), emb.radius, h, w):
            cur[:, k, j] = emb.vector
        layers.append(cur)
        prev = cur
    return np.stack(layers)


def random_conditioning_inputs(rng, frames=15, size=64, c_s=4):
    z = rng.normal(size=(96, size // c_s, size // c_s)).astype(np.float32)
    robot_mask = np.zeros((size, size), dtype=bool)
    object_mask = np.zeros((size, size), dtype=bool)
    rx, ry = rng.integers(4, size - 12, size=2)
    ox, oy = rng.integers(4, size - 16, size=2)
    robot_mask[ry : ry + 6, rx : rx + 6] = True
    object_mask[oy : oy + 12, ox : ox + 12] = True
    pts = np.stack(
        [rng.uniform(0, size - 1, size=frames), rng.uniform(0, size - 1, size=frames)],
        axis=1,
    )
    f1 = int(rng.integers(1, frames + 1))
    f2 = int(rng.integers(f1, frames + 1))
    traj = cond.CollaborativeTrajectory(points=pts, f1=f1, f2=f2)
    return z, robot_mask, object_mask, traj


def run_gradient_check(min_coords=200, rel_tol=1e-4):
    """Double-precision central finite differences against autograd on a
    miniature denoiser; returns (matching, total) coordinate counts."""
    from manipgen.diffusion import DenoiserConfig, build_vocabulary, init_model
    from manipgen.diffusion.data import Batch
    from manipgen.diffusion.schedule import DiffusionSchedule
    from manipgen.diffusion.train import noise_prediction_loss

    vocab = build_vocabulary()
    cfg = DenoiserConfig(
        blocks=1, hidden=16, heads=2, prompt_vocab_size=len(vocab), prompt_length=4,
        latent_frames=2, latent_channels=4, latent_height=4, latent_width=4,
    )
    state = init_model(cfg, seed=10, vocab=vocab)
    model = state.model.double()
    g = torch.Generator().manual_seed(3)
    with torch.no_grad():
        for p in model.parameters():
            p.add_(torch.randn(p.shape, generator=g, dtype=p.dtype) * 0.05)
    schedule = DiffusionSchedule(steps=40)
    gb = torch.Generator().manual_seed(11)
    shape = (2, cfg.latent_frames, cfg.latent_channels, cfg.latent_height, cfg.latent_width)
    batch = Batch(
        x0=torch.randn(shape, generator=gb).double(),
        init_latent=torch.randn(shape[0], *shape[2:], generator=gb).double(),
        v=torch.randn(shape, generator=gb).double(),
        prompt_ids=torch.randint(0, cfg.prompt_vocab_size, (2, cfg.prompt_length), generator=gb),
        ids=["a", "b"],
    )
    t = torch.tensor([7, 33])
    eps = torch.randn(shape, generator=torch.Generator().manual_seed(4)).double()

    def loss_fn():
        return noise_prediction_loss(model, schedule, batch, t, eps, batch.prompt_ids)

    loss = loss_fn()
    loss.backward()
    params = list(model.named_parameters())
    rng = np.random.default_rng(5)
    total, ok = 0, 0
    per_param = max(1, (min_coords + len(params)) // len(params))
    for _, p in params:
        grad = p.grad.detach().clone().reshape(-1)
        flat = p.data.reshape(-1)
        for idx in rng.choice(flat.numel(), size=min(per_param, flat.numel()), replace=False):
            orig = float(flat[idx])
            h = 1e-6 * max(1.0, abs(orig))
            with torch.no_grad():
                flat[idx] = orig + h
                up = float(loss_fn())
                flat[idx] = orig - h
                down = float(loss_fn())
                flat[idx] = orig
            fd = (up - down) / (2 * h)
            an = float(grad[idx])
            denom = max(abs(fd), abs(an), 1e-8)
            total += 1
            if abs(fd - an) / denom <= rel_tol or (abs(fd) < 1e-9 and abs(an) < 1e-9):
                ok += 1
    return ok, total
