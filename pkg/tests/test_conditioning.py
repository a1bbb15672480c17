import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from manipgen import conditioning as cond
from manipgen.codec import CodecConfig, frame_to_latent_index, latent_group_frames
from manipgen.conditioning import (
    CollaborativeTrajectory,
    ConditioningError,
    Phase,
    assemble_collaborative_latent,
    downsample_mask,
    masked_pool,
    paint_circle,
    phase_switch_latents,
    radius_from_area,
)


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


class TestDownsampleMask:
    def test_full_mask(self):
        assert downsample_mask(np.ones((16, 16), dtype=bool), 4).all()

    def test_single_pixel_promotion(self):
        mask = np.zeros((4, 4), dtype=bool)
        mask[1, 2] = True
        out = downsample_mask(mask, 4)
        assert out.shape == (1, 1) and out[0, 0]

    def test_promotion_tie_row_major(self):
        mask = np.zeros((8, 8), dtype=bool)
        mask[1, 6] = True  # block (0,1)
        mask[6, 1] = True  # block (1,0)
        out = downsample_mask(mask, 4)
        assert out[0, 1] and not out[1, 0]

    def test_indivisible_raises(self):
        with pytest.raises(ConditioningError):
            downsample_mask(np.ones((10, 10), dtype=bool), 4)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            mask = rng.random((64, 64)) < rng.uniform(0.02, 0.9)
            assert np.array_equal(downsample_mask(mask, 4), brute_downsample(mask, 4))


class TestMaskedPool:
    def test_constant_field(self):
        z = np.full((5, 4, 4), 2.0, dtype=np.float32)
        m = np.zeros((4, 4), dtype=bool)
        m[0, 1] = m[2, 3] = True
        assert np.allclose(masked_pool(z, m), 2.0)

    def test_single_cell(self):
        rng = np.random.default_rng(1)
        z = rng.normal(size=(6, 4, 4))
        m = np.zeros((4, 4), dtype=bool)
        m[1, 2] = True
        assert np.array_equal(masked_pool(z, m), z[:, 1, 2])

    def test_empty_mask_raises(self):
        with pytest.raises(ConditioningError):
            masked_pool(np.zeros((3, 4, 4)), np.zeros((4, 4), dtype=bool))

    def test_matches_loop_oracle(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            z = rng.normal(size=(8, 16, 16))
            m = rng.random((16, 16)) < 0.4
            if not m.any():
                m[0, 0] = True
            expected = np.zeros(8)
            count = 0
            for i in range(16):
                for j in range(16):
                    if m[i, j]:
                        expected += z[:, i, j]
                        count += 1
            expected /= count
            got = masked_pool(z, m)
            assert np.all(np.abs(got - expected) <= 1e-6 * np.maximum(1, np.abs(expected)))

    @given(lam=st.floats(-5, 5), seed=st.integers(0, 10_000))
    @settings(max_examples=50, deadline=None)
    def test_scaling_equivariance(self, lam, seed):
        rng = np.random.default_rng(seed)
        z = rng.normal(size=(4, 8, 8))
        m = rng.random((8, 8)) < 0.5
        if not m.any():
            m[3, 3] = True
        assert np.allclose(masked_pool(lam * z, m), lam * masked_pool(z, m), atol=1e-9)

    @given(seed=st.integers(0, 10_000))
    @settings(max_examples=50, deadline=None)
    def test_pooling_bounds(self, seed):
        rng = np.random.default_rng(seed)
        z = rng.normal(size=(4, 8, 8))
        m = rng.random((8, 8)) < 0.3
        if not m.any():
            m[1, 1] = True
        v = masked_pool(z, m)
        lo = z[:, m].min(axis=1)
        hi = z[:, m].max(axis=1)
        assert np.all(v >= lo - 1e-12) and np.all(v <= hi + 1e-12)


class TestRadius:
    def test_clamp_floor(self):
        assert radius_from_area(1, 16, 16) == 1

    def test_half_up_rounding(self):
        # gamma * sqrt(49) = 3.5 rounds up to 4
        assert radius_from_area(49, 16, 16) == 4

    def test_clamp_ceiling(self):
        assert radius_from_area(16 * 16, 16, 16) == 8

    def test_formula_on_range(self):
        import math

        for area in range(1, 257):
            expected = min(max(math.floor(0.5 * math.sqrt(area) + 0.5), 1), 8)
            assert radius_from_area(area, 16, 16) == expected


def brute_disc_cells(center, radius, h, w):
    x, y = center
    return {
        (j, k)
        for j in range(w)
        for k in range(h)
        if (j - x) ** 2 + (k - y) ** 2 <= radius * radius
    }


class TestPaintCircle:
    def test_radius1_interior(self):
        v = np.zeros((2, 5, 5), dtype=np.float32)
        paint_circle(v, (2, 2), 1, np.array([1.0, 2.0]))
        cells = {(j, k) for k in range(5) for j in range(5) if v[0, k, j] != 0}
        assert cells == {(2, 2), (1, 2), (3, 2), (2, 1), (2, 3)}
        assert np.all(v[1][v[0] != 0] == 2.0)

    def test_radius1_corner_clipped(self):
        v = np.zeros((1, 5, 5), dtype=np.float32)
        paint_circle(v, (0, 0), 1, np.array([1.0]))
        cells = {(j, k) for k in range(5) for j in range(5) if v[0, k, j] != 0}
        assert cells == {(0, 0), (1, 0), (0, 1)}

    def test_out_of_bounds_center(self):
        with pytest.raises(ConditioningError):
            paint_circle(np.zeros((1, 4, 4)), (4, 0), 1, np.array([1.0]))

    def test_matches_enumeration(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            h, w = int(rng.integers(4, 20)), int(rng.integers(4, 20))
            center = (int(rng.integers(0, w)), int(rng.integers(0, h)))
            radius = int(rng.integers(1, 8))
            vec = rng.normal(size=3)
            v = rng.normal(size=(3, h, w)).astype(np.float64)
            before = v.copy()
            paint_circle(v, center, radius, vec)
            expected_cells = brute_disc_cells(center, radius, h, w)
            for k in range(h):
                for j in range(w):
                    if (j, k) in expected_cells:
                        assert np.array_equal(v[:, k, j], vec)
                    else:
                        assert np.array_equal(v[:, k, j], before[:, k, j])


def brute_assemble(z, robot_mask, object_mask, traj, config, gamma=0.5):
    """Independent sequential compositor: copy previous, paint current."""
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
        if t <= traj.f1 or t > traj.f2:
            emb = dom
        else:
            emb = sub
        x, y = int(traj.points[t - 1][0] // c_s), int(traj.points[t - 1][1] // c_s)
        for (j, k) in brute_disc_cells((x, y), emb.radius, h, w):
            cur[:, k, j] = emb.vector
        layers.append(cur)
        prev = cur
    return np.stack(layers)


def make_inputs(rng, frames=15, size=64, c_s=4):
    z = rng.normal(size=(96, size // c_s, size // c_s)).astype(np.float32)
    robot_mask = np.zeros((size, size), dtype=bool)
    object_mask = np.zeros((size, size), dtype=bool)
    rx, ry = rng.integers(4, size - 12, size=2)
    ox, oy = rng.integers(4, size - 16, size=2)
    robot_mask[ry : ry + 6, rx : rx + 6] = True
    object_mask[oy : oy + 12, ox : ox + 12] = True
    pts = np.stack(
        [rng.uniform(0, size - 1, size=frames), rng.uniform(0, size - 1, size=frames)], axis=1
    )
    f1 = int(rng.integers(1, frames + 1))
    f2 = int(rng.integers(f1, frames + 1))
    traj = CollaborativeTrajectory(points=pts, f1=f1, f2=f2)
    return z, robot_mask, object_mask, traj


class TestAssemble:
    def test_no_interaction_paints_only_dominant(self):
        rng = np.random.default_rng(5)
        z, rm, om, _ = make_inputs(rng)
        frames = 15
        pts = np.full((frames, 2), 32.0)
        traj = CollaborativeTrajectory(points=pts, f1=frames, f2=frames)
        out = assemble_collaborative_latent(z, rm, om, traj)
        dom = cond.subject_embedding(z, rm, "dominant", 4)
        sub = cond.subject_embedding(z, om, "submissive", 4)
        assert not np.allclose(dom.vector, sub.vector)
        painted = out.v[:, :, out.v[0].any(axis=0)]
        # Every painted column equals the dominant vector, never the submissive one.
        for l in range(out.v.shape[0]):
            cols = out.v[l][:, np.any(out.v[l] != 0, axis=0)]
            for col in cols.T:
                assert np.allclose(col, dom.vector)
        assert np.all(out.phase_of_latent == int(Phase.PRE))

    def test_post_overwrites_interaction_at_static_point(self):
        rng = np.random.default_rng(6)
        z, rm, om, _ = make_inputs(rng)
        frames = 15
        pts = np.full((frames, 2), 30.0)
        traj = CollaborativeTrajectory(points=pts, f1=4, f2=9)
        out = assemble_collaborative_latent(z, rm, om, traj)
        dom = cond.subject_embedding(z, rm, "dominant", 4)
        center_col = out.v[-1][:, 30 // 4, 30 // 4]
        assert np.allclose(center_col, dom.vector)
        assert out.phase_of_latent[-1] == int(Phase.POST)

    def test_matches_sequential_compositor(self):
        rng = np.random.default_rng(7)
        for _ in range(30):
            z, rm, om, traj = make_inputs(rng)
            got = assemble_collaborative_latent(z, rm, om, traj)
            expected = brute_assemble(z, rm, om, traj, CodecConfig())
            assert np.array_equal(got.v, expected)

    def test_purity(self):
        rng = np.random.default_rng(8)
        z, rm, om, traj = make_inputs(rng)
        a = assemble_collaborative_latent(z, rm, om, traj)
        b = assemble_collaborative_latent(z, rm, om, traj)
        assert np.array_equal(a.v, b.v)
        assert np.array_equal(a.phase_of_latent, b.phase_of_latent)

    def test_causal_monotonicity(self):
        rng = np.random.default_rng(9)
        z, rm, om, traj = make_inputs(rng)
        z = np.abs(z) + 0.1  # strictly positive features so painted cells stay nonzero
        out = assemble_collaborative_latent(z, rm, om, traj)
        nonzero = np.any(out.v != 0, axis=1)
        for l in range(1, nonzero.shape[0]):
            assert np.all(nonzero[l] >= nonzero[l - 1])

    def test_first_timestep_is_exactly_one_circle(self):
        rng = np.random.default_rng(10)
        z, rm, om, traj = make_inputs(rng)
        z = np.abs(z) + 0.1
        out = assemble_collaborative_latent(z, rm, om, traj)
        c_s = 4
        emb = cond.subject_embedding(z, rm, "dominant", c_s)  # frame 1 is always pre-interaction
        x, y = int(traj.points[0, 0] // c_s), int(traj.points[0, 1] // c_s)
        cells = brute_disc_cells((x, y), emb.radius, 16, 16)
        nonzero = {
            (j, k) for k in range(16) for j in range(16) if np.any(out.v[0, :, k, j] != 0)
        }
        assert nonzero == cells

    def test_phase_switch_points(self):
        rng = np.random.default_rng(11)
        c_t = 2
        for _ in range(200):
            frames = 15
            f1 = int(rng.integers(1, frames + 1))
            f2 = int(rng.integers(f1, frames + 1))
            phases = []
            for l in range(1, CodecConfig().latent_frames(frames) + 1):
                t = latent_group_frames(l, c_t, frames)[-1]
                phases.append(0 if t <= f1 else (1 if t <= f2 else 2))
            switches = [
                l + 1 for l in range(1, len(phases)) if phases[l] != phases[l - 1]
            ]
            assert switches == phase_switch_latents(f1, f2, frames, c_t)
            for s in switches:
                assert s in (
                    frame_to_latent_index(min(f1 + 1, frames), c_t),
                    frame_to_latent_index(min(f2 + 1, frames), c_t),
                )


class TestMaskSparsityStability:
    def test_cosine_similarity_at_70pct(self):
        # Subject features modeled as a per-channel mean plus cell noise.
        sims = []
        for seed in range(120):
            rng = np.random.default_rng(seed)
            mean = rng.normal(size=96)
            m = rng.random((16, 16)) < 0.35
            while m.sum() < 32:
                m[rng.integers(0, 16), rng.integers(0, 16)] = True
            z = mean[:, None, None] + rng.normal(scale=0.3, size=(96, 16, 16))
            full = masked_pool(z, m)
            cells = np.argwhere(m)
            keep = rng.choice(len(cells), size=int(round(0.7 * len(cells))), replace=False)
            sub = np.zeros_like(m)
            sub[cells[keep, 0], cells[keep, 1]] = True
            part = masked_pool(z, sub)
            sims.append(
                float(np.dot(full, part) / (np.linalg.norm(full) * np.linalg.norm(part)))
            )
        assert min(sims) >= 0.95
