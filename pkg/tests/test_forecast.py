import numpy as np
import pytest
from scipy.stats import kstest, norm

from oivarsv.data_io import Dataset, TransformCode
from oivarsv.forecast import (
    EstimationSettings,
    ForecastConfig,
    ModelRun,
    alpl,
    bartlett_hac_variance,
    dm_test,
    evaluate_posterior,
    log_predictive_density,
    point_forecast_and_rmsfe,
    predictive_path,
    recursive_eval,
    simulate_predictive,
)
from oivarsv.model import ModelDims, PosteriorSample, SampleMeta, VarSvParams

from _oracles import brute_hac


def params_ar1(a=0.0, rho=0.5, b0=1.0, phi=0.0, omega2=1e-12):
    A = np.array([[a], [rho]])
    return VarSvParams(A=A, B0=np.array([[b0]]), phi=np.array([phi]),
                       omega2=np.array([omega2]))


def wrap_dataset(values):
    values = np.asarray(values, dtype=float)
    n = values.shape[1]
    return Dataset(
        names=[f"y{i + 1}" for i in range(n)],
        dates=[f"t{j:04d}" for j in range(values.shape[0])],
        raw=values, transformed=values.copy(),
        codes=[TransformCode.NONE] * n,
        level_flags=np.zeros(n, dtype=bool),
    )


def single_draw_sample(params, h_path, n_burn=0):
    T, n = h_path.shape
    k = params.A.shape[0]
    p = (k - 1) // n
    return PosteriorSample(
        A=params.A[None].copy(), B0=params.B0[None].copy(),
        phi=params.phi[None].copy(), omega2=params.omega2[None].copy(),
        h=h_path[None].copy(),
        kappa1=np.ones(1), kappa2=np.ones(1),
        psi=np.ones((1, k, n)), z_psi=np.ones((1, k, n)),
        z_k1=np.ones(1), z_k2=np.ones(1),
        meta=SampleMeta(model="oi", seed=0, n_burn=n_burn, thin=1,
                        dims=ModelDims(n=n, p=p, T=T),
                        sweep_times=np.zeros(1)),
    )


class TestPredictivePath:
    def test_unit_covariance_when_volatility_off(self):
        params = params_ar1(rho=0.3, omega2=1e-300)
        rng = np.random.default_rng(0)
        path, mu, sigma = predictive_path(params, np.zeros(1), np.zeros((1, 1)),
                                          horizon=4, rng=rng)
        assert sigma[0, 0] == pytest.approx(1.0, rel=1e-6)

    def test_one_step_mean_is_exact(self):
        params = params_ar1(a=0.7, rho=0.4)
        rng = np.random.default_rng(1)
        recent = np.array([[2.0]])
        _, mu, _ = predictive_path(params, np.zeros(1), recent, horizon=1, rng=rng)
        assert mu[0] == pytest.approx(0.7 + 0.4 * 2.0, abs=1e-14)

    def test_iterated_variance_matches_analytic(self):
        rho, sigma2, H, M = 0.6, 1.0, 6, 40_000
        params = params_ar1(rho=rho, omega2=1e-300)
        A = np.repeat(params.A[None], M, axis=0)
        B0inv = np.repeat(np.eye(1)[None], M, axis=0)
        phi = np.zeros((M, 1))
        om = np.full((M, 1), 1e-300)
        h0 = np.zeros((M, 1))
        rng = np.random.default_rng(2)
        ys, mu, var = simulate_predictive(A, B0inv, phi, om, h0,
                                          np.zeros((1, 1)), H, rng)
        target = sigma2 * sum(rho ** (2 * s) for s in range(H))
        var_hat = ys[H - 1, :, 0].var()
        se = target * np.sqrt(2.0 / M)
        assert abs(var_hat - target) < 3 * se

    def test_bad_horizon(self):
        with pytest.raises(ValueError):
            predictive_path(params_ar1(), np.zeros(1), np.zeros((1, 1)),
                            horizon=0, rng=np.random.default_rng(0))


class TestLogPredictiveDensity:
    def test_single_component_exact(self):
        lp = log_predictive_density(0.3, np.array([0.1]), np.array([2.0]))
        assert lp == pytest.approx(norm.logpdf(0.3, 0.1, np.sqrt(2.0)), abs=1e-12)

    def test_mixture_positive_and_finite(self):
        rng = np.random.default_rng(3)
        lp = log_predictive_density(0.0, rng.normal(0, 1, 500),
                                    rng.uniform(0.5, 2.0, 500))
        assert np.isfinite(lp)

    def test_matches_quadrature_for_gaussian_posterior(self):
        # predictive of y ~ N(mu, s2) with mu ~ N(m, v): exact N(m, s2 + v)
        m, v, s2 = 0.4, 0.25, 1.0
        rng = np.random.default_rng(4)
        mus = rng.normal(m, np.sqrt(v), 10_000)
        for y in (-1.0, 0.2, 1.5):
            mc = log_predictive_density(y, mus, np.full(10_000, s2))
            exact = norm.logpdf(y, m, np.sqrt(s2 + v))
            assert abs(mc - exact) < 0.02


class TestDmTest:
    def test_identical_series(self):
        x = np.arange(20.0)
        stat, p = dm_test(x, x, h=1)
        assert stat == 0.0 and p == 1.0

    def test_alternating_differential_zero_mean(self):
        d = np.tile([1.0, -1.0], 50)
        stat, _ = dm_test(d, np.zeros(100), h=1)
        assert stat == pytest.approx(0.0, abs=1e-12)

    def test_matches_brute_force_hac(self):
        rng = np.random.default_rng(5)
        bench = rng.normal(1.0, 0.5, 20)
        alt = rng.normal(0.8, 0.5, 20)
        h = 2
        stat, p = dm_test(bench, alt, h=h)
        d = bench - alt
        oracle = d.mean() / np.sqrt(brute_hac(d, h - 1) / d.size)
        assert stat == pytest.approx(oracle, abs=1e-10)
        assert p == pytest.approx(2 * (1 - norm.cdf(abs(oracle))), abs=1e-10)

    def test_hac_nonnegative_weighting(self):
        rng = np.random.default_rng(6)
        d = rng.normal(0, 1, 50)
        assert bartlett_hac_variance(d, 3) == pytest.approx(brute_hac(d, 3), abs=1e-12)

    def test_uniform_p_values_under_null(self):
        rng = np.random.default_rng(7)
        pvals = np.empty(500)
        for r in range(500):
            bench = rng.normal(0, 1, 100)
            alt = rng.normal(0, 1, 100)
            _, pvals[r] = dm_test(bench, alt, h=1)
        assert kstest(pvals, "uniform").statistic < 0.08

    def test_short_series_rejected(self):
        with pytest.raises(ValueError):
            dm_test(np.ones(5), np.zeros(5), h=1)

    def test_degenerate_nonzero_differential(self):
        stat, p = dm_test(np.ones(20), np.zeros(20), h=1)
        assert np.isnan(stat) and np.isnan(p)


class TestEvaluatePosterior:
    def _deterministic_case(self, T_total=40, p=1):
        params = params_ar1(a=0.5, rho=0.8, phi=0.0, omega2=1e-300)
        y = np.empty((T_total, 1))
        y[0] = 1.0
        for t in range(1, T_total):
            y[t] = 0.5 + 0.8 * y[t - 1]
        ds = wrap_dataset(y)
        return params, ds

    def test_perfect_foresight_zero_rmsfe(self):
        params, ds = self._deterministic_case()
        fit_rows = 30
        sample = single_draw_sample(params, np.zeros((fit_rows - 1, 1)))
        cfg = ForecastConfig(horizons=(1, 3), origin_start=30, origin_end=36,
                             simulate_shocks=False)
        table = evaluate_posterior(sample, ds, cfg, seed=0)
        for key, val in table.rmsfe.items():
            assert val == pytest.approx(0.0, abs=1e-10)

    def test_single_origin_single_draw_absolute_error(self):
        params, ds = self._deterministic_case()
        wrong = params_ar1(a=0.5, rho=0.7, phi=0.0, omega2=1e-300)
        sample = single_draw_sample(wrong, np.zeros((29, 1)))
        cfg = ForecastConfig(horizons=(1,), origin_start=30, origin_end=30,
                             simulate_shocks=False)
        table = evaluate_posterior(sample, ds, cfg, seed=0)
        y_prev = ds.transformed[29, 0]
        expected_err = abs((0.5 + 0.7 * y_prev) - ds.transformed[30, 0])
        key = ("model", "y1", 1)
        assert table.rmsfe[key] == pytest.approx(expected_err, rel=1e-12)

    def test_rmsfe_wrapper_matches_table(self):
        params, ds = self._deterministic_case()
        sample = single_draw_sample(params, np.zeros((29, 1)))
        cfg = ForecastConfig(horizons=(1, 3), origin_start=30, origin_end=36,
                             simulate_shocks=False)
        out = point_forecast_and_rmsfe(sample, ds, cfg, seed=0)
        assert set(out) == {("y1", 1), ("y1", 3)}
        assert all(v == pytest.approx(0.0, abs=1e-10) for v in out.values())

    def test_alpl_wrapper_single_draw_exact_gaussian(self):
        # one retained draw with shocks off: the one-step predictive is the
        # exact Gaussian with variance B0^{-2}, so ALPL is its mean log-density
        params, ds = self._deterministic_case()
        b0 = 2.0
        params = params_ar1(a=0.5, rho=0.8, b0=b0, phi=0.0, omega2=1e-300)
        sample = single_draw_sample(params, np.zeros((29, 1)))
        cfg = ForecastConfig(horizons=(1,), origin_start=30, origin_end=34,
                             simulate_shocks=False)
        out = alpl(sample, ds, cfg, seed=0)
        expected = []
        for t0 in range(30, 35):
            mean = 0.5 + 0.8 * ds.transformed[t0 - 1, 0]
            expected.append(norm.logpdf(ds.transformed[t0, 0], mean, 1.0 / b0))
        assert out[("y1", 1)] == pytest.approx(np.mean(expected), abs=1e-10)

    def test_noise_never_helps_point_forecasts(self):
        rng = np.random.default_rng(8)
        T_total = 300
        y = np.empty((T_total, 1))
        y[0] = 0.0
        for t in range(1, T_total):
            y[t] = 0.9 * y[t - 1] + rng.normal(0, 1)
        ds = wrap_dataset(y)
        params = params_ar1(a=0.0, rho=0.9, b0=1.0, phi=0.0, omega2=1e-300)
        sample = single_draw_sample(params, np.zeros((199, 1)))
        cfg = ForecastConfig(horizons=(1,), origin_start=200, origin_end=290,
                             simulate_shocks=False)
        table = evaluate_posterior(sample, ds, cfg, seed=0)
        clean = table.point[("model", "y1", 1)]
        truth = np.array([ds.transformed[t0, 0] for t0 in table.origins])
        rmse_clean = np.sqrt(np.mean((clean - truth) ** 2))
        noise = rng.normal(0, 1.0, clean.size)
        rmse_noisy = np.sqrt(np.mean((clean + noise - truth) ** 2))
        assert rmse_noisy >= rmse_clean


class TestRecursiveEval:
    def _sim_dataset(self, seed=9, n=2, T=140, p=1):
        from oivarsv import generate_section5
        ds, _, _ = generate_section5(seed=seed, n=n, T=T, p=p)
        return ds

    def test_single_origin_single_model(self):
        ds = self._sim_dataset()
        cfg = ForecastConfig(horizons=(1,), origin_start=120, origin_end=120,
                             n_forecast_draws=50)
        est = EstimationSettings(p=1, n_burn=60, n_draws=80)
        table = recursive_eval(ds, [ModelRun("oi", "oi")], cfg, est, seed=0)
        assert set(table.rmsfe) == {("oi", "y1", 1), ("oi", "y2", 1)}
        assert all(np.isfinite(v) for v in table.rmsfe.values())

    def test_seeded_repeatability(self):
        ds = self._sim_dataset()
        cfg = ForecastConfig(horizons=(1, 2), origin_start=115, origin_end=125,
                             origin_stride=5, n_forecast_draws=40, refit_every=2)
        est = EstimationSettings(p=1, n_burn=40, n_draws=60)
        models = [ModelRun("oi", "oi"), ModelRun("cs", "cs")]
        t1 = recursive_eval(ds, models, cfg, est, seed=3)
        t2 = recursive_eval(ds, models, cfg, est, seed=3)
        assert t1.rmsfe == t2.rmsfe
        assert t1.alpl == t2.alpl

    def test_infeasible_horizons_skipped(self):
        ds = self._sim_dataset(T=120)
        T_total = ds.transformed.shape[0]
        cfg = ForecastConfig(horizons=(1, 50), origin_start=T_total - 5,
                             origin_end=T_total - 5, n_forecast_draws=30)
        est = EstimationSettings(p=1, n_burn=30, n_draws=40)
        table = recursive_eval(ds, [ModelRun("oi", "oi")], cfg, est, seed=0)
        assert np.isfinite(table.rmsfe[("oi", "y1", 1)])
        assert np.isnan(table.rmsfe[("oi", "y1", 50)])

    def test_csv_output(self, tmp_path):
        ds = self._sim_dataset()
        cfg = ForecastConfig(horizons=(1,), origin_start=120, origin_end=124,
                             origin_stride=2, n_forecast_draws=30)
        est = EstimationSettings(p=1, n_burn=30, n_draws=40)
        table = recursive_eval(ds, [ModelRun("oi", "oi")], cfg, est, seed=0)
        out = tmp_path / "table.csv"
        table.to_csv(out)
        text = out.read_text().splitlines()
        assert text[0].startswith("model,variable,horizon,rmsfe,alpl")
        assert len(text) == 1 + 2
