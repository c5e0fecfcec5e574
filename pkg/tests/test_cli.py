import numpy as np
import pytest

from oivarsv.cli import main
from oivarsv.config import RunConfig


class TestConfig:
    def test_defaults_valid(self):
        RunConfig().validate()

    def test_file_round_trip(self, tmp_path):
        cfg = RunConfig(model="cs", burn=77, horizons=(1, 2), seed=5)
        path = tmp_path / "run.ini"
        cfg.write(path)
        back = RunConfig.from_file(path)
        assert back.model == "cs" and back.burn == 77
        assert back.horizons == (1, 2) and back.seed == 5

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "run.ini"
        path.write_text("[run]\nmodell = oi\n")
        with pytest.raises(ValueError, match="unknown key"):
            RunConfig.from_file(path)

    def test_unknown_section_rejected(self, tmp_path):
        path = tmp_path / "run.ini"
        path.write_text("[sampler]\nburn = 10\n")
        with pytest.raises(ValueError, match="unknown config section"):
            RunConfig.from_file(path)

    def test_invalid_model_rejected(self, tmp_path):
        path = tmp_path / "run.ini"
        path.write_text("[run]\nmodel = wishart\n")
        with pytest.raises(ValueError):
            RunConfig.from_file(path)


class TestCli:
    def test_usage_error_exit_code(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["estimate"])  # missing required --data
        assert exc.value.code == 2

    def test_runtime_error_exit_code(self, capsys):
        rc = main(["estimate", "--data", "does-not-exist.npz"])
        assert rc == 1
        assert "error:" in capsys.readouterr().err

    def test_demo_ordering_prints_doubling(self, capsys, tmp_path):
        out = tmp_path / "demo.csv"
        rc = main(["demo-ordering", "--n", "3", "--reps", "200000",
                   "--seed", "1", "--out", str(out)])
        assert rc == 0
        lines = capsys.readouterr().out.strip().splitlines()
        rows = [line.split() for line in lines[1:]]
        estimates = np.array([float(r[1]) for r in rows])
        assert np.allclose(estimates, [1.0, 2.0, 4.0], rtol=0.07)
        assert out.exists()

    def test_simulate_estimate_summarize_smoke(self, tmp_path, capsys):
        sim_dir = tmp_path / "sim"
        rc = main(["simulate", "--design", "section5", "--seed", "7",
                   "--n", "2", "--T", "120", "--lags", "1",
                   "--out-dir", str(sim_dir)])
        assert rc == 0
        assert (sim_dir / "dataset.npz").exists()
        assert (sim_dir / "truth.npz").exists()
        assert (sim_dir / "series.csv").exists()

        est_dir = tmp_path / "est"
        rc = main(["estimate", "--data", str(sim_dir / "dataset.npz"),
                   "--model", "oi", "--lags", "1", "--burn", "30",
                   "--draws", "40", "--seed", "3", "--out-dir", str(est_dir)])
        assert rc == 0
        assert (est_dir / "draws_chain0.bin").exists()
        assert (est_dir / "summary.txt").exists()
        assert (est_dir / "sigma_path_mean.csv").exists()
        assert (est_dir / "run_config.ini").exists()

        rc = main(["summarize", str(est_dir / "draws_chain0.bin")])
        assert rc == 0
        out = capsys.readouterr().out
        assert "posterior mean of B0" in out

    def test_estimate_reversed_ordering(self, tmp_path):
        sim_dir = tmp_path / "sim"
        main(["simulate", "--seed", "2", "--n", "2", "--T", "100",
              "--lags", "1", "--out-dir", str(sim_dir)])
        est_dir = tmp_path / "est-rev"
        rc = main(["estimate", "--data", str(sim_dir / "dataset.npz"),
                   "--ordering", "reversed", "--lags", "1", "--burn", "20",
                   "--draws", "20", "--seed", "1", "--out-dir", str(est_dir)])
        assert rc == 0
        header = (est_dir / "b0_mean.csv").read_text().splitlines()[0]
        assert header == "row,y2,y1"

    def test_estimate_two_chains(self, tmp_path):
        sim_dir = tmp_path / "sim"
        main(["simulate", "--seed", "6", "--n", "2", "--T", "90",
              "--lags", "1", "--out-dir", str(sim_dir)])
        est_dir = tmp_path / "est2"
        rc = main(["estimate", "--data", str(sim_dir / "dataset.npz"),
                   "--lags", "1", "--burn", "15", "--draws", "20",
                   "--chains", "2", "--seed", "9", "--out-dir", str(est_dir)])
        assert rc == 0
        assert (est_dir / "draws_chain0.bin").exists()
        assert (est_dir / "draws_chain1.bin").exists()
        from oivarsv.persist import load_draws
        s0, _ = load_draws(est_dir / "draws_chain0.bin")
        s1, _ = load_draws(est_dir / "draws_chain1.bin")
        assert len(s0) == len(s1) == 20
        assert not np.array_equal(s0.B0, s1.B0)  # independent streams

    def test_estimate_from_csv_with_codes(self, tmp_path):
        data = tmp_path / "d.csv"
        rng = np.random.default_rng(0)
        rows = ["date,a,b"]
        for t in range(90):
            rows.append(f"m{t:03d},{rng.uniform(1, 2):.6f},{rng.uniform(1, 2):.6f}")
        data.write_text("\n".join(rows) + "\n")
        codes = tmp_path / "codes.csv"
        codes.write_text("mnemonic,code\na,diff_log\nb,none\n")
        est_dir = tmp_path / "est-csv"
        rc = main(["estimate", "--data", str(data), "--codes", str(codes),
                   "--lags", "1", "--burn", "15", "--draws", "15",
                   "--out-dir", str(est_dir)])
        assert rc == 0

    def test_forecast_eval_smoke(self, tmp_path):
        sim_dir = tmp_path / "sim"
        main(["simulate", "--seed", "4", "--n", "2", "--T", "130",
              "--lags", "1", "--out-dir", str(sim_dir)])
        cfg = tmp_path / "run.ini"
        cfg.write_text(
            "[run]\nlags = 1\nburn = 30\ndraws = 40\n"
            "[forecast]\nhorizons = 1\norigin_start = 110\norigin_end = 125\n"
            "refit_every = 8\nn_forecast_draws = 30\n"
        )
        out_dir = tmp_path / "fc"
        rc = main(["forecast-eval", "--data", str(sim_dir / "dataset.npz"),
                   "--config", str(cfg), "--models", "oi:as-given,cs:as-given",
                   "--out-dir", str(out_dir)])
        assert rc == 0
        table = (out_dir / "forecast_table.csv").read_text().splitlines()
        assert len(table) == 1 + 2 * 2  # header + models x variables
        assert (out_dir / "forecast_summary.txt").exists()
