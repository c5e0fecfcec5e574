"""Recursive out-of-sample forecast evaluation: iterated predictive
simulation, point and density accuracy (RMSFE, average log predictive
likelihood), and Diebold-Mariano comparisons against a benchmark model.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import logsumexp, ndtr

from .data_io import Dataset
from .model import PermutationMap, PosteriorSample, VarSvParams
from .priors import build_priors
from .sampler import run_mcmc

logger = logging.getLogger(__name__)

LOG_DENSITY_FLOOR = np.log(1e-300)
_LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass
class ForecastConfig:
    """Evaluation design: origins are transformed-row counts available to the
    estimation window, so origin t0 forecasts rows t0 .. t0 + h - 1."""

    horizons: tuple[int, ...] = (1, 6, 12)
    origin_start: int = 0
    origin_end: int = 0
    origin_stride: int = 1
    target_variables: tuple[int, ...] | None = None
    n_paths: int = 1
    refit_every: int = 1
    n_forecast_draws: int | None = None
    simulate_shocks: bool = True
    benchmark: str | None = None

    def origins(self) -> list[int]:
        if self.origin_end < self.origin_start:
            raise ValueError("origin_end must be >= origin_start")
        return list(range(self.origin_start, self.origin_end + 1, self.origin_stride))


@dataclass
class ModelRun:
    """One entry of the model comparison: a structure plus a variable ordering."""

    name: str
    structure: str = "oi"
    ordering: PermutationMap | None = None


@dataclass
class EstimationSettings:
    """Sampler settings used for every re-estimation inside the recursion."""

    p: int = 4
    n_burn: int = 500
    n_draws: int = 500
    thin: int = 1
    an_backend: str = "mh"
    prior_kwargs: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Predictive simulation


def _subsample_indices(R: int, want: int | None) -> np.ndarray:
    if want is None or want >= R:
        return np.arange(R)
    return np.unique(np.linspace(0, R - 1, want).round().astype(int))


def simulate_predictive(A: np.ndarray, B0inv: np.ndarray, phi: np.ndarray,
                        omega2: np.ndarray, h_term: np.ndarray,
                        recent: np.ndarray, h_max: int,
                        rng: np.random.Generator,
                        simulate_shocks: bool = True
                        ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Iterate M parameter draws forward h_max steps.

    A (M, k, n); B0inv (M, n, n); phi, omega2, h_term (M, n); recent (p, n)
    holds the last p observations, oldest first. Returns (ys, mu, var), each
    (h_max, M, n): the simulated observations, the conditional means given
    the simulated history, and the conditional variances from the
    reduced-form covariance at each step.
    """
    M, k, n = A.shape
    p = recent.shape[0]
    hist = [np.broadcast_to(recent[p - 1 - j], (M, n)) for j in range(p)]  # newest first
    h_prev = h_term
    sd_h = np.sqrt(omega2)
    ys = np.empty((h_max, M, n))
    mu = np.empty((h_max, M, n))
    var = np.empty((h_max, M, n))
    B0inv_sq = B0inv**2
    x = np.empty((M, k))
    x[:, 0] = 1.0
    for s in range(h_max):
        for j in range(p):
            x[:, 1 + j * n: 1 + (j + 1) * n] = hist[j]
        mu_s = np.einsum("mk,mkn->mn", x, A)
        if simulate_shocks:
            h_s = phi * h_prev + sd_h * rng.standard_normal((M, n))
            eps = np.exp(0.5 * h_s) * rng.standard_normal((M, n))
        else:
            h_s = phi * h_prev
            eps = np.zeros((M, n))
        D = np.exp(h_s)
        ys[s] = mu_s + np.einsum("mij,mj->mi", B0inv, eps)
        mu[s] = mu_s
        var[s] = np.einsum("mij,mj->mi", B0inv_sq, D)
        hist = [ys[s]] + hist[:-1]
        h_prev = h_s
    return ys, mu, var


def predictive_path(params: VarSvParams, h_term: np.ndarray, recent: np.ndarray,
                    horizon: int, rng: np.random.Generator,
                    simulate_shocks: bool = True
                    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """One simulated future path for a single parameter draw.

    Log-volatilities and observations are iterated forward from the last p
    observations (recent, oldest first) and the terminal log-volatilities.
    Returns (path, mu, Sigma): the simulated observations (horizon, n), the
    final-step conditional mean, and the final-step reduced-form covariance
    B0^{-1} D B0^{-T} evaluated at the simulated final-step volatilities.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    n, p = params.n, params.p
    B0inv = np.linalg.inv(params.B0)
    lags = [params.lag_matrix(lag) for lag in range(1, p + 1)]
    hist = [np.asarray(recent[p - 1 - j], dtype=float) for j in range(p)]  # newest first
    h_prev = np.asarray(h_term, dtype=float).copy()
    sd_h = np.sqrt(params.omega2)
    path = np.empty((horizon, n))
    for s in range(horizon):
        mean = params.a.copy()
        for j in range(p):
            mean += lags[j] @ hist[j]
        if simulate_shocks:
            h_s = params.phi * h_prev + sd_h * rng.standard_normal(n)
            eps = np.exp(0.5 * h_s) * rng.standard_normal(n)
        else:
            h_s = params.phi * h_prev
            eps = np.zeros(n)
        path[s] = mean + B0inv @ eps
        if s == horizon - 1:
            mu_final = mean
            sigma_final = (B0inv * np.exp(h_s)[None, :]) @ B0inv.T
        hist = [path[s]] + hist[:-1]
        h_prev = h_s
    return path, mu_final, sigma_final


def log_predictive_density(y: float, means: np.ndarray, variances: np.ndarray) -> float:
    """Log of the equal-weight normal mixture density at y (Rao-Blackwellized)."""
    means = np.asarray(means, dtype=float).ravel()
    variances = np.asarray(variances, dtype=float).ravel()
    comp = -0.5 * (_LOG_2PI + np.log(variances)) - 0.5 * (y - means) ** 2 / variances
    return float(logsumexp(comp) - np.log(comp.size))


# ---------------------------------------------------------------------------
# Diebold-Mariano test


def bartlett_hac_variance(d: np.ndarray, lag: int) -> float:
    """HAC long-run variance with Bartlett weights 1 - j/(lag + 1)."""
    d = np.asarray(d, dtype=float)
    M = d.size
    dc = d - d.mean()
    gamma0 = float(dc @ dc) / M
    acc = gamma0
    for j in range(1, min(lag, M - 1) + 1):
        gamma_j = float(dc[j:] @ dc[:-j]) / M
        acc += 2.0 * (1.0 - j / (lag + 1.0)) * gamma_j
    return acc


def dm_test(loss_benchmark: np.ndarray, loss_alt: np.ndarray, h: int
            ) -> tuple[float, float]:
    """Diebold-Mariano statistic and two-sided p-value.

    The loss differential d = benchmark - alternative is positive when the
    alternative is more accurate. The variance is HAC with Bartlett kernel
    and lag h - 1. Identical loss series give (0, 1); a degenerate non-zero
    differential returns (nan, nan).
    """
    a = np.asarray(loss_benchmark, dtype=float)
    b = np.asarray(loss_alt, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("loss series must be equal-length vectors")
    if a.size < 10:
        raise ValueError(f"need at least 10 losses, got {a.size}")
    d = a - b
    dbar = float(d.mean())
    hac = bartlett_hac_variance(d, h - 1)
    if hac <= 0.0:
        if abs(dbar) < 1e-15:
            return 0.0, 1.0
        return float("nan"), float("nan")
    stat = dbar / np.sqrt(hac / d.size)
    p = float(2.0 * (1.0 - ndtr(abs(stat))))
    return float(stat), p


# ---------------------------------------------------------------------------
# Per-origin evaluation and the recursive harness


@dataclass
class ForecastTable:
    """Accumulated losses and summary metrics per (model, variable, horizon)."""

    variables: list[str]
    horizons: list[int]
    models: list[str]
    origins: list[int]
    point: dict = field(default_factory=dict)       # (model, var, h) -> forecasts (O,)
    sq_loss: dict = field(default_factory=dict)     # (model, var, h) -> (O,)
    log_score: dict = field(default_factory=dict)   # (model, var, h) -> (O,)
    rmsfe: dict = field(default_factory=dict)
    alpl: dict = field(default_factory=dict)
    dm_rmsfe: dict = field(default_factory=dict)    # (model, var, h) -> (stat, p)
    dm_alpl: dict = field(default_factory=dict)
    benchmark: str | None = None
    floored_densities: int = 0

    def finalize(self, benchmark: str | None) -> None:
        self.benchmark = benchmark
        for key, sq in self.sq_loss.items():
            ok = np.isfinite(sq)
            self.rmsfe[key] = float(np.sqrt(np.mean(sq[ok]))) if ok.any() else float("nan")
        for key, ls in self.log_score.items():
            ok = np.isfinite(ls)
            self.alpl[key] = float(np.mean(ls[ok])) if ok.any() else float("nan")
        if benchmark is None:
            return
        for model in self.models:
            for v in self.variables:
                for h in self.horizons:
                    key = (model, v, h)
                    bkey = (benchmark, v, h)
                    if model == benchmark or bkey not in self.sq_loss:
                        continue
                    pair_ok = np.isfinite(self.sq_loss[bkey]) & np.isfinite(self.sq_loss[key])
                    if pair_ok.sum() >= 10:
                        self.dm_rmsfe[key] = dm_test(
                            self.sq_loss[bkey][pair_ok], self.sq_loss[key][pair_ok], h)
                        self.dm_alpl[key] = dm_test(
                            -self.log_score[bkey][pair_ok], -self.log_score[key][pair_ok], h)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["model", "variable", "horizon", "rmsfe", "alpl",
                        "dm_rmsfe_stat", "dm_rmsfe_p", "dm_alpl_stat", "dm_alpl_p"])
            for model in self.models:
                for v in self.variables:
                    for h in self.horizons:
                        key = (model, v, h)
                        if key not in self.rmsfe:
                            continue
                        dm_r = self.dm_rmsfe.get(key, (float("nan"), float("nan")))
                        dm_a = self.dm_alpl.get(key, (float("nan"), float("nan")))
                        w.writerow([model, v, h,
                                    f"{self.rmsfe[key]:.8g}", f"{self.alpl[key]:.8g}",
                                    f"{dm_r[0]:.8g}", f"{dm_r[1]:.8g}",
                                    f"{dm_a[0]:.8g}", f"{dm_a[1]:.8g}"])


def _propagate_h_term(h_term: np.ndarray, phi: np.ndarray, omega2: np.ndarray,
                      steps: int, rng: np.random.Generator,
                      simulate_shocks: bool = True) -> np.ndarray:
    """Advance terminal log-volatilities when a fit is carried across origins."""
    out = h_term.copy()
    sd = np.sqrt(omega2)
    for _ in range(steps):
        if simulate_shocks:
            out = phi * out + sd * rng.standard_normal(out.shape)
        else:
            out = phi * out
    return out


def _forecast_one_origin(sample: PosteriorSample, dataset: Dataset, t0: int,
                         fit_t0: int, cfg: ForecastConfig, p: int,
                         rng: np.random.Generator, table: ForecastTable,
                         model_name: str, var_names: list[str],
                         var_positions: list[int], origin_idx: int) -> None:
    idx = _subsample_indices(len(sample), cfg.n_forecast_draws)
    reps = np.repeat(idx, cfg.n_paths)
    A = sample.A[reps]
    B0inv = np.linalg.inv(sample.B0[reps])
    phi = sample.phi[reps]
    omega2 = sample.omega2[reps]
    h_term = sample.h[reps, -1, :]
    if t0 > fit_t0:
        h_term = _propagate_h_term(h_term, phi, omega2, t0 - fit_t0, rng,
                                   cfg.simulate_shocks)
    recent = dataset.transformed[t0 - p: t0]
    T_total = dataset.transformed.shape[0]
    feasible = [h for h in cfg.horizons if t0 + h - 1 < T_total]
    skipped = [h for h in cfg.horizons if h not in feasible]
    if skipped:
        logger.warning("origin %d: insufficient future data for horizons %s", t0, skipped)
    if not feasible:
        return
    h_max = max(feasible)
    ys, mu, var = simulate_predictive(A, B0inv, phi, omega2, h_term, recent,
                                      h_max, rng, cfg.simulate_shocks)
    for h in feasible:
        y_true = dataset.transformed[t0 + h - 1]
        point = ys[h - 1].mean(axis=0)
        for v_label, v_pos in zip(var_names, var_positions):
            key = (model_name, v_label, h)
            err = point[v_pos] - y_true[v_pos]
            table.point[key][origin_idx] = point[v_pos]
            table.sq_loss[key][origin_idx] = err * err
            lp = log_predictive_density(y_true[v_pos], mu[h - 1, :, v_pos],
                                        var[h - 1, :, v_pos])
            if not np.isfinite(lp) or lp < LOG_DENSITY_FLOOR:
                lp = LOG_DENSITY_FLOOR
                table.floored_densities += 1
            table.log_score[key][origin_idx] = lp


def evaluate_posterior(sample: PosteriorSample, dataset: Dataset,
                       cfg: ForecastConfig, seed: int = 0,
                       model_name: str = "model") -> ForecastTable:
    """Forecast metrics for one fixed posterior across all origins.

    The posterior is reused at every origin (terminal volatilities are
    propagated forward), so this measures forecast accuracy without
    re-estimation.
    """
    p = sample.meta.dims.p
    fit_t0 = sample.meta.dims.T + p
    targets = list(cfg.target_variables) if cfg.target_variables is not None \
        else list(range(dataset.n))
    var_names = [dataset.names[v] for v in targets]
    origins = [t0 for t0 in cfg.origins() if t0 >= fit_t0]
    table = _new_table(var_names, list(cfg.horizons), [model_name], origins)
    for oi, t0 in enumerate(origins):
        rng = np.random.default_rng(np.random.SeedSequence([seed, 0, t0]))
        _forecast_one_origin(sample, dataset, t0, fit_t0, cfg, p, rng, table,
                             model_name, var_names, targets, oi)
    table.finalize(benchmark=None)
    return table


def point_forecast_and_rmsfe(sample: PosteriorSample, dataset: Dataset,
                             cfg: ForecastConfig, seed: int = 0) -> dict:
    """RMSFE per (variable, horizon) for a fixed posterior."""
    table = evaluate_posterior(sample, dataset, cfg, seed)
    return {(v, h): r for (m, v, h), r in table.rmsfe.items()}


def alpl(sample: PosteriorSample, dataset: Dataset, cfg: ForecastConfig,
         seed: int = 0) -> dict:
    """Average log predictive likelihood per (variable, horizon) for a fixed posterior."""
    table = evaluate_posterior(sample, dataset, cfg, seed)
    return {(v, h): a for (m, v, h), a in table.alpl.items()}


def _new_table(var_names: list[str], horizons: list[int], models: list[str],
               origins: list[int]) -> ForecastTable:
    table = ForecastTable(variables=var_names, horizons=horizons,
                          models=models, origins=origins)
    O = len(origins)
    for m in models:
        for v in var_names:
            for h in horizons:
                table.point[(m, v, h)] = np.full(O, np.nan)
                table.sq_loss[(m, v, h)] = np.full(O, np.nan)
                table.log_score[(m, v, h)] = np.full(O, np.nan)
    return table


def recursive_eval(dataset: Dataset, models: list[ModelRun], cfg: ForecastConfig,
                   est: EstimationSettings, seed: int = 0) -> ForecastTable:
    """Expanding-window evaluation with periodic re-estimation.

    Each model is re-estimated every cfg.refit_every origins on the data up to
    the origin; between refits the last posterior is carried forward with its
    terminal volatilities propagated. Estimation failures skip the origin for
    that model and are logged. Metrics are reported per original variable
    name, so orderings are compared on the same labels.
    """
    origins = cfg.origins()
    if not origins:
        raise ValueError("no evaluation origins")
    targets = list(cfg.target_variables) if cfg.target_variables is not None \
        else list(range(dataset.n))
    var_names = [dataset.names[v] for v in targets]
    table = _new_table(var_names, list(cfg.horizons), [m.name for m in models], origins)
    for m_idx, m in enumerate(models):
        ds_m = dataset.permuted(m.ordering.perm) if m.ordering is not None else dataset
        if m.ordering is not None:
            inv = m.ordering.inverse().perm
            positions = [inv[v] for v in targets]
        else:
            positions = targets
        sample = None
        fit_t0 = -1
        for oi, t0 in enumerate(origins):
            if sample is None or oi % cfg.refit_every == 0:
                try:
                    Y, X = ds_m.regression_matrices(est.p, upto=t0)
                    priors = build_priors(ds_m.transformed[:t0], est.p,
                                          ds_m.level_flags, structure=m.structure,
                                          **est.prior_kwargs)
                    sample = run_mcmc(
                        Y, X, priors, est.p, est.n_burn, est.n_draws, est.thin,
                        seed=np.random.SeedSequence([seed, m_idx, t0]),
                        structure=m.structure, an_backend=est.an_backend,
                    )
                    fit_t0 = t0
                except Exception as e:
                    logger.warning("model %s: estimation failed at origin %d: %s",
                                   m.name, t0, e)
                    sample = None
                    continue
            if sample is None:
                continue
            rng = np.random.default_rng(np.random.SeedSequence([seed, m_idx, t0, 1]))
            _forecast_one_origin(sample, ds_m, t0, fit_t0, cfg, est.p, rng, table,
                                 m.name, var_names, positions, oi)
    table.finalize(cfg.benchmark or (models[0].name if models else None))
    return table
