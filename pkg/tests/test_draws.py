import numpy as np
import pytest

from stmix.draws import PosteriorDraws, load_draws, save_draws
from stmix.exceptions import DataValidationError


def sample_draws(R=4, M=2, p=3, N=5, T=4, seed=0):
    rng = np.random.default_rng(seed)
    arrays = {
        "beta": rng.normal(size=(R, p)),
        "sigma2": rng.uniform(0.1, 1.0, R),
        "alpha": rng.normal(size=(R, M, p)),
        "rho": rng.uniform(10, 500, (R, M)),
        "tau2": rng.uniform(0.1, 2.0, (R, M)),
        "gamma": rng.uniform(0.1, 0.9, (R, M)),
        "rho0": rng.uniform(10, 500, R),
        "tau02": rng.uniform(0.1, 2.0, R),
        "delta": rng.normal(size=(R, N)),
        "theta": rng.normal(size=(R, M, N, T)),
    }
    return PosteriorDraws(arrays=arrays, meta={"seed": seed, "n_iter": 10, "kappa": 1.0})


class TestRoundTrip:
    def test_lossless_bitwise(self, tmp_path):
        draws = sample_draws()
        path = tmp_path / "draws.bin"
        save_draws(path, draws)
        loaded = load_draws(path)
        assert set(loaded.arrays) == set(draws.arrays)
        for name in draws.arrays:
            assert np.array_equal(loaded.arrays[name], draws.arrays[name])
            assert loaded.arrays[name].dtype == draws.arrays[name].dtype
        assert loaded.meta == draws.meta

    def test_identical_draws_serialize_to_identical_bytes(self, tmp_path):
        draws = sample_draws()
        p1, p2 = tmp_path / "a.bin", tmp_path / "b.bin"
        save_draws(p1, draws)
        save_draws(p2, draws)
        assert p1.read_bytes() == p2.read_bytes()

    def test_zero_record_file(self, tmp_path):
        draws = sample_draws(R=0)
        path = tmp_path / "empty.bin"
        save_draws(path, draws)
        loaded = load_draws(path)
        assert loaded.n_draws == 0

    def test_state_reconstruction(self, tmp_path):
        draws = sample_draws()
        st = draws.state_at(2)
        assert st.beta.shape == (3,)
        np.testing.assert_array_equal(st.theta, draws.arrays["theta"][2])


class TestCorruption:
    def test_truncated_file_rejected(self, tmp_path):
        path = tmp_path / "draws.bin"
        save_draws(path, sample_draws())
        blob = path.read_bytes()
        path.write_bytes(blob[:-40])
        with pytest.raises(DataValidationError):
            load_draws(path)

    def test_flipped_byte_rejected(self, tmp_path):
        path = tmp_path / "draws.bin"
        save_draws(path, sample_draws())
        blob = bytearray(path.read_bytes())
        blob[len(blob) // 2] ^= 0xFF
        path.write_bytes(bytes(blob))
        with pytest.raises(DataValidationError, match="corrupt"):
            load_draws(path)

    def test_version_mismatch_rejected(self, tmp_path):
        path = tmp_path / "draws.bin"
        save_draws(path, sample_draws())
        blob = bytearray(path.read_bytes())
        blob[:8] = b"STMXDR99"
        path.write_bytes(bytes(blob))
        with pytest.raises(DataValidationError, match="version"):
            load_draws(path)

    def test_tiny_file_rejected(self, tmp_path):
        path = tmp_path / "draws.bin"
        path.write_bytes(b"nope")
        with pytest.raises(DataValidationError, match="truncated"):
            load_draws(path)
