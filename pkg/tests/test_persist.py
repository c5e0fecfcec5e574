import numpy as np
import pytest

from oivarsv import build_priors, generate_section5, run_mcmc
from oivarsv.persist import load_draws, save_draws, write_summary


@pytest.fixture(scope="module")
def sample_and_names():
    ds, _, _ = generate_section5(seed=0, n=2, T=60, p=1)
    Y, X = ds.regression_matrices(1)
    priors = build_priors(ds.transformed, 1, ds.level_flags)
    sample = run_mcmc(Y, X, priors, 1, n_burn=20, n_draws=30, thin=2, seed=9)
    return sample, ds.names


class TestDrawsFile:
    def test_round_trip_bit_identical(self, sample_and_names, tmp_path):
        sample, names = sample_and_names
        path = tmp_path / "draws.bin"
        save_draws(path, sample, names)
        back, back_names = load_draws(path)
        assert back_names == names
        for attr in ("A", "B0", "phi", "omega2", "h", "kappa1", "kappa2",
                     "psi", "z_psi", "z_k1", "z_k2"):
            assert np.array_equal(getattr(back, attr), getattr(sample, attr)), attr
        assert np.array_equal(back.meta.sweep_times, sample.meta.sweep_times)
        assert back.meta.model == sample.meta.model
        assert back.meta.seed == sample.meta.seed
        assert back.meta.n_burn == sample.meta.n_burn
        assert back.meta.thin == sample.meta.thin
        assert back.meta.dims == sample.meta.dims
        assert back.meta.an_accept_rate == sample.meta.an_accept_rate

    def test_resummarization_identical(self, sample_and_names, tmp_path):
        sample, names = sample_and_names
        path = tmp_path / "draws.bin"
        save_draws(path, sample, names)
        back, _ = load_draws(path)
        d1 = write_summary(tmp_path / "s1", sample, names)
        d2 = write_summary(tmp_path / "s2", back, names)
        assert d1 == d2
        assert (tmp_path / "s1" / "sigma_path_mean.csv").read_bytes() == \
            (tmp_path / "s2" / "sigma_path_mean.csv").read_bytes()
        assert (tmp_path / "s1" / "b0_mean.csv").read_bytes() == \
            (tmp_path / "s2" / "b0_mean.csv").read_bytes()

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "bogus.bin"
        path.write_bytes(b"NOTADRAW" + b"\x00" * 64)
        with pytest.raises(ValueError, match="not a draws file"):
            load_draws(path)

    def test_truncation_detected(self, sample_and_names, tmp_path):
        sample, names = sample_and_names
        path = tmp_path / "draws.bin"
        save_draws(path, sample, names)
        data = path.read_bytes()
        path.write_bytes(data + b"\x00")
        with pytest.raises(ValueError, match="trailing"):
            load_draws(path)

    def test_summary_files_exist(self, sample_and_names, tmp_path):
        sample, names = sample_and_names
        digest = write_summary(tmp_path / "sum", sample, names)
        for fname in ("summary.txt", "b0_mean.csv", "kappa.csv", "sigma_path_mean.csv"):
            assert (tmp_path / "sum" / fname).exists()
        assert digest["draws"] == len(sample)
        text = (tmp_path / "sum" / "summary.txt").read_text()
        assert "kappa1 mean" in text
