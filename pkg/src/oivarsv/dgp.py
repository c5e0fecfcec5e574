"""Synthetic data designs for the simulation experiments, plus the
Monte Carlo demonstration of the ordering bias built into triangular
stochastic-volatility specifications.
"""

from __future__ import annotations

import numpy as np

from .data_io import Dataset, TransformCode
from .model import VarSvParams

SIM_BURN_IN = 100
MAX_REDRAWS = 100

SECTION61_B0 = np.array([
    [1.0, -0.8, -0.8],
    [0.8, 1.0, -0.8],
    [0.8, 0.8, 1.0],
])


def companion_spectral_radius(params: VarSvParams) -> float:
    """Spectral radius of the VAR companion matrix."""
    n, p = params.n, params.p
    comp = np.zeros((n * p, n * p))
    for lag in range(1, p + 1):
        comp[:n, (lag - 1) * n: lag * n] = params.lag_matrix(lag)
    if p > 1:
        comp[n:, :-n] = np.eye(n * (p - 1))
    return float(np.max(np.abs(np.linalg.eigvals(comp))))


def simulate_log_vol(rng: np.random.Generator, phi: np.ndarray, omega2: np.ndarray,
                     T: int) -> np.ndarray:
    """Stationary AR(1) log-volatility paths, (T, n)."""
    n = phi.size
    h = np.empty((T, n))
    h[0] = rng.standard_normal(n) * np.sqrt(omega2 / (1.0 - phi**2))
    sd = np.sqrt(omega2)
    for t in range(1, T):
        h[t] = phi * h[t - 1] + sd * rng.standard_normal(n)
    return h


def simulate_var_path(rng: np.random.Generator, params: VarSvParams, h: np.ndarray,
                      y_init: np.ndarray) -> np.ndarray:
    """Simulate len(h) observations given p initial rows, oldest first."""
    n, p = params.n, params.p
    T = h.shape[0]
    B0inv = np.linalg.inv(params.B0)
    lags = [params.lag_matrix(lag) for lag in range(1, p + 1)]
    hist = [np.asarray(y_init[p - 1 - j], dtype=float) for j in range(p)]  # newest first
    out = np.empty((T, n))
    a = params.a
    for t in range(T):
        mean = a.copy()
        for lag in range(p):
            mean += lags[lag] @ hist[lag]
        eps = np.exp(0.5 * h[t]) * rng.standard_normal(n)
        out[t] = mean + B0inv @ eps
        hist = [out[t]] + hist[:-1]
    return out


def _draw_section5_params(rng: np.random.Generator, n: int, p: int) -> VarSvParams:
    k = n * p + 1
    A = np.empty((k, n))
    A[0] = rng.uniform(-10.0, 10.0, size=n)
    A1 = rng.uniform(-0.2, 0.2, size=(n, n))
    A1[np.diag_indices(n)] = rng.uniform(0.0, 0.5, size=n)
    A[1: 1 + n, :] = A1.T
    for lag in range(2, p + 1):
        block = rng.normal(0.0, 0.1 / lag, size=(n, n))
        A[1 + (lag - 1) * n: 1 + lag * n, :] = block.T
    B0 = rng.normal(0.0, 1.0, size=(n, n))
    B0[np.diag_indices(n)] = rng.uniform(0.5, 2.0, size=n)
    return VarSvParams(A=A, B0=B0, phi=np.full(n, 0.95), omega2=np.full(n, 0.05))


def _simulate_dataset(rng: np.random.Generator, params: VarSvParams, T: int,
                      sv_on: bool) -> tuple[Dataset, np.ndarray]:
    """Burned-in simulation wrapped as a Dataset of T + p rows.

    The log-volatility truth returned covers the last T rows, aligned with
    the estimation sample after lag trimming.
    """
    n, p = params.n, params.p
    total = SIM_BURN_IN + p + T
    if sv_on:
        h_full = simulate_log_vol(rng, params.phi, params.omega2, total)
    else:
        h_full = np.zeros((total, n))
    mu = np.linalg.solve(
        np.eye(n) - sum(params.lag_matrix(lag) for lag in range(1, p + 1)), params.a
    )
    y_init = np.tile(mu, (p, 1))
    y_full = simulate_var_path(rng, params, h_full, y_init)
    raw = y_full[SIM_BURN_IN:]
    names = [f"y{i + 1}" for i in range(n)]
    dates = [f"t{j + 1:04d}" for j in range(raw.shape[0])]
    ds = Dataset(
        names=names, dates=dates, raw=raw, transformed=raw.copy(),
        codes=[TransformCode.NONE] * n,
        level_flags=np.zeros(n, dtype=bool),
        start_index=0,
    )
    return ds, h_full[SIM_BURN_IN + p:]


def generate_section5(seed: int, n: int = 3, T: int = 500, p: int = 4,
                      sv_on: bool = True) -> tuple[Dataset, VarSvParams, np.ndarray]:
    """First simulation design: random coefficients, persistent volatility.

    Intercepts are U(-10, 10); the first lag matrix has U(0, 0.5) diagonal and
    U(-0.2, 0.2) off-diagonal entries; lag j > 1 entries are N(0, 0.1^2/j^2);
    B0 has U(0.5, 2) diagonal and N(0, 1) off-diagonal entries; phi = 0.95 and
    omega^2 = 0.05. Explosive draws (companion spectral radius >= 1) are
    redrawn up to 100 times. sv_on = False zeroes the volatility paths.
    """
    rng = np.random.default_rng(seed)
    for _ in range(MAX_REDRAWS):
        params = _draw_section5_params(rng, n, p)
        if companion_spectral_radius(params) < 1.0:
            break
    else:
        raise RuntimeError(f"no stationary draw in {MAX_REDRAWS} attempts")
    ds, h_truth = _simulate_dataset(rng, params, T, sv_on)
    return ds, params, h_truth


def generate_section61(seed: int, T: int = 500) -> tuple[Dataset, VarSvParams, np.ndarray]:
    """Fixed non-triangular impact matrix design with n = 3, p = 4."""
    n, p = 3, 4
    rng = np.random.default_rng(seed)
    for _ in range(MAX_REDRAWS):
        params = _draw_section5_params(rng, n, p)
        params.B0 = SECTION61_B0.copy()
        if companion_spectral_radius(params) < 1.0:
            break
    else:
        raise RuntimeError(f"no stationary draw in {MAX_REDRAWS} attempts")
    ds, h_truth = _simulate_dataset(rng, params, T, sv_on=True)
    return ds, params, h_truth


def ordering_variance_demo(n: int, reps: int, rng: np.random.Generator) -> np.ndarray:
    """Monte Carlo estimate of E u_i^2 under a unit-triangular prior.

    With standard-normal free lower-triangular elements and unit shock
    variances, the reduced-form error variance doubles with each position:
    E u_i^2 = 2^(i-1). Returns the n-vector of estimates.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    u = np.empty((reps, n))
    u[:, 0] = rng.standard_normal(reps)
    for i in range(1, n):
        eps = rng.standard_normal(reps)
        b = rng.standard_normal((reps, i))
        u[:, i] = eps - np.einsum("rj,rj->r", b, u[:, :i])
    return np.mean(u * u, axis=0)
