"""Independent oracles used by the test suite: quadrature over the absolute
normal density, dense multivariate-normal likelihood evaluation, brute-force
HAC variances and batch-means Monte Carlo standard errors.
"""

from __future__ import annotations

import numpy as np
from scipy.stats import multivariate_normal

from oivarsv.absnormal import log_kernel, modes


def an_grid(mu: float, rho: float, points: int = 200_001,
            width_sigmas: float = 14.0) -> tuple[np.ndarray, np.ndarray]:
    """Dense grid and normalized density of AN(mu, rho)."""
    z_plus, z_minus = modes(mu)
    sd = np.sqrt(rho / (1.0 + 1.0 / np.array([z_plus, z_minus]) ** 2))
    lo = z_minus - width_sigmas * sd[1]
    hi = z_plus + width_sigmas * sd[0]
    grid = np.linspace(lo, hi, points)
    logf = log_kernel(grid, mu, rho)
    logf -= logf.max()
    f = np.exp(logf)
    area = np.trapezoid(f, grid)
    return grid, f / area


def an_cdf(mu: float, rho: float, points: int = 200_001):
    """Callable CDF of AN(mu, rho) from cumulative quadrature."""
    grid, f = an_grid(mu, rho, points)
    dx = grid[1] - grid[0]
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (f[1:] + f[:-1]) * dx)])
    cdf /= cdf[-1]

    def evaluate(x):
        return np.interp(x, grid, cdf, left=0.0, right=1.0)

    return evaluate


def an_moments(mu: float, rho: float, points: int = 200_001) -> tuple[float, float]:
    """Mean and variance of AN(mu, rho) by quadrature."""
    grid, f = an_grid(mu, rho, points)
    mean = np.trapezoid(grid * f, grid)
    second = np.trapezoid(grid**2 * f, grid)
    return float(mean), float(second - mean**2)


def dense_mvn_loglik(Y: np.ndarray, X: np.ndarray | None, A: np.ndarray | None,
                     B0: np.ndarray, h: np.ndarray) -> float:
    """Per-period dense multivariate-normal evaluation of the model likelihood."""
    T, n = Y.shape
    Binv = np.linalg.inv(B0)
    total = 0.0
    for t in range(T):
        mean = np.zeros(n) if A is None else A.T @ X[t]
        cov = (Binv * np.exp(h[t])[None, :]) @ Binv.T
        total += multivariate_normal.logpdf(Y[t], mean=mean, cov=cov)
    return float(total)


def brute_hac(d: np.ndarray, lag: int) -> float:
    """Direct double-sum Bartlett HAC long-run variance."""
    d = np.asarray(d, dtype=float)
    M = d.size
    dc = d - d.mean()
    total = 0.0
    for t in range(M):
        for s in range(M):
            j = abs(t - s)
            if j <= lag:
                total += (1.0 - j / (lag + 1.0)) * dc[t] * dc[s]
    return total / M


def batch_means_se(x: np.ndarray, n_batches: int = 40) -> float:
    """Monte Carlo standard error of the mean of a correlated chain."""
    x = np.asarray(x, dtype=float)
    size = x.size // n_batches
    if size < 1:
        raise ValueError("chain too short for the requested batches")
    means = x[: size * n_batches].reshape(n_batches, size).mean(axis=1)
    return float(means.std(ddof=1) / np.sqrt(n_batches))


def half_cauchy_cdf(x):
    return 2.0 / np.pi * np.arctan(np.asarray(x, dtype=float))
