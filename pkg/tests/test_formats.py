import numpy as np
import pytest

from manipgen import formats


class TestRmvd:
    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(0)
        video = rng.integers(0, 256, size=(5, 12, 16, 3), dtype=np.uint8)
        formats.save_rmvd(tmp_path / "v.raw", video)
        assert np.array_equal(formats.load_rmvd(tmp_path / "v.raw"), video)

    def test_header_layout(self):
        video = np.zeros((2, 3, 4, 3), dtype=np.uint8)
        data = formats.write_rmvd(video)
        assert data[:4] == b"RMVD"
        assert np.frombuffer(data[4:16], dtype="<u4").tolist() == [2, 3, 4]
        assert len(data) == 16 + 2 * 3 * 4 * 3

    def test_rejects_bad_magic_and_truncation(self):
        video = np.zeros((2, 3, 4, 3), dtype=np.uint8)
        data = formats.write_rmvd(video)
        with pytest.raises(formats.FormatError, match="magic"):
            formats.read_rmvd(b"XXXX" + data[4:])
        with pytest.raises(formats.FormatError, match="payload"):
            formats.read_rmvd(data[:-7])
        with pytest.raises(formats.FormatError, match="uint8"):
            formats.write_rmvd(video.astype(np.float32))


class TestVolumes:
    def test_rmlv_roundtrip(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=(8, 6, 4, 4)).astype(np.float32)
        out = formats.read_rmlv(formats.write_rmlv(x))
        assert np.array_equal(out, x)
        assert formats.write_rmlv(x)[:4] == b"RMLV"

    def test_rmtl_roundtrip_with_phases(self):
        rng = np.random.default_rng(2)
        v = rng.normal(size=(8, 6, 4, 4)).astype(np.float32)
        phases = np.array([0, 0, 1, 1, 1, 2, 2, 2], dtype=np.uint8)
        data = formats.write_rmtl(v, phases)
        assert data[:4] == b"RMTL"
        out_v, out_p = formats.read_rmtl(data)
        assert np.array_equal(out_v, v)
        assert np.array_equal(out_p, phases)

    def test_rmtl_from_assembled_volume(self):
        from manipgen.conditioning import CollaborativeTrajectory, assemble_collaborative_latent

        rng = np.random.default_rng(3)
        z = rng.normal(size=(96, 16, 16)).astype(np.float32)
        masks = np.zeros((2, 64, 64), dtype=bool)
        masks[0, 10:16, 10:16] = True
        masks[1, 40:52, 40:52] = True
        traj = CollaborativeTrajectory(
            points=rng.uniform(0, 63, size=(15, 2)), f1=5, f2=11
        )
        latent = assemble_collaborative_latent(z, masks[0], masks[1], traj)
        out_v, out_p = formats.read_rmtl(formats.write_rmtl(latent.v, latent.phase_of_latent))
        assert np.array_equal(out_v, latent.v)
        assert np.array_equal(out_p, latent.phase_of_latent)

    def test_rmtl_rejects_bad_phases(self):
        v = np.zeros((4, 2, 2, 2), dtype=np.float32)
        with pytest.raises(formats.FormatError):
            formats.write_rmtl(v, np.array([0, 1, 2], dtype=np.uint8))
        with pytest.raises(formats.FormatError):
            formats.write_rmtl(v, np.array([0, 1, 2, 7], dtype=np.uint8))


class TestMaskPng:
    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(4)
        mask = rng.random((32, 32)) < 0.3
        formats.save_mask_png(tmp_path / "m.png", mask)
        assert np.array_equal(formats.load_mask_png(tmp_path / "m.png"), mask)

    def test_image_roundtrip(self):
        rng = np.random.default_rng(5)
        image = rng.integers(0, 256, size=(16, 16, 3), dtype=np.uint8)
        assert np.array_equal(formats.decode_image_png(formats.image_png_bytes(image)), image)
