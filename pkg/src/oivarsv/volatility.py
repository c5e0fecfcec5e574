"""Log-volatility sampling: the seven-component normal mixture approximation
to the log chi-squared(1) distribution (Kim, Shephard and Chib, 1998) combined
with a banded-Cholesky precision sampler for the AR(1) state path.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded, solve_banded
from scipy.special import ndtr

# Mixture constants transcribed from Kim, Shephard and Chib (1998), Table 4.
# Component means carry the -1.2704 offset so the mixture approximates the
# distribution of log(chi2_1) directly.
KSC_PROBS = np.array([0.00730, 0.10556, 0.00002, 0.04395, 0.34001, 0.24566, 0.25750])
KSC_MEANS = np.array([-10.12999, -3.97281, -8.56686, 2.77786, 0.61942, 1.79518, -1.08819]) - 1.2704
KSC_VARS = np.array([5.79596, 2.61369, 5.17950, 0.16735, 0.64009, 0.34023, 1.26261])

_KSC_LOGP = np.log(KSC_PROBS)
_KSC_SD = np.sqrt(KSC_VARS)
_KSC_HALF_LOGVAR = 0.5 * np.log(KSC_VARS)


def log_chi2_mixture_cdf(x) -> np.ndarray:
    """CDF of the seven-component approximation to log(chi2_1)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return ndtr((x[..., None] - KSC_MEANS) / _KSC_SD) @ KSC_PROBS


def sample_mixture_indicators(rng: np.random.Generator, ystar: np.ndarray,
                              h: np.ndarray) -> np.ndarray:
    """Component indicators given y* = log(e^2 + c) and the current h column."""
    resid = ystar[:, None] - h[:, None] - KSC_MEANS[None, :]
    logp = _KSC_LOGP - _KSC_HALF_LOGVAR - 0.5 * resid**2 / KSC_VARS
    logp -= logp.max(axis=1, keepdims=True)
    prob = np.exp(logp)
    prob /= prob.sum(axis=1, keepdims=True)
    u = rng.uniform(size=ystar.shape[0])
    s = (prob.cumsum(axis=1) < u[:, None]).sum(axis=1)
    return np.minimum(s, KSC_PROBS.size - 1).astype(np.int8)


def ar1_prior_precision_banded(phi: float, omega2: float, T: int) -> np.ndarray:
    """Tridiagonal precision of a stationary AR(1) path, upper banded storage.

    The initial state has the stationary variance omega2 / (1 - phi^2).
    Row 0 of the result is the superdiagonal (entry [0, 0] unused), row 1 the
    diagonal; this is the layout expected by scipy's banded Cholesky.
    """
    if omega2 <= 0.0:
        raise ValueError("omega2 must be positive")
    ab = np.zeros((2, T))
    if T == 1:
        ab[1, 0] = (1.0 - phi * phi) / omega2
        return ab
    ab[1, :] = (1.0 + phi * phi) / omega2
    ab[1, 0] = 1.0 / omega2
    ab[1, -1] = 1.0 / omega2
    ab[0, 1:] = -phi / omega2
    return ab


def ar1_gaussian_posterior(phi: float, omega2: float, obs_prec: np.ndarray,
                           obs_rhs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Banded Cholesky factor and mean of the conditional Gaussian path.

    The posterior precision is the AR(1) prior precision plus diag(obs_prec),
    and the mean solves K m = obs_rhs. obs_prec = 0 gives the prior.
    """
    obs_prec = np.asarray(obs_prec, dtype=float)
    obs_rhs = np.asarray(obs_rhs, dtype=float)
    T = obs_prec.shape[0]
    ab = ar1_prior_precision_banded(phi, omega2, T)
    ab[1, :] += obs_prec
    cb = cholesky_banded(ab, lower=False, check_finite=False)
    mean = cho_solve_banded((cb, False), obs_rhs, check_finite=False)
    return cb, mean


def sample_ar1_gaussian(rng: np.random.Generator, phi: float, omega2: float,
                        obs_prec: np.ndarray, obs_rhs: np.ndarray) -> np.ndarray:
    """Draw the Gaussian path by one banded Cholesky plus a back-substitution."""
    cb, mean = ar1_gaussian_posterior(phi, omega2, obs_prec, obs_rhs)
    z = rng.standard_normal(mean.shape[0])
    # K = U'U with U the upper-banded factor; U^{-1} z has covariance K^{-1}
    dev = solve_banded((0, 1), cb, z, check_finite=False)
    return mean + dev


def sample_log_vol_column(rng: np.random.Generator, ystar: np.ndarray,
                          h: np.ndarray, phi: float, omega2: float
                          ) -> tuple[np.ndarray, np.ndarray]:
    """One auxiliary-mixture update of a single equation's log-volatility path.

    Draws mixture indicators given the current path, then the path given the
    indicators. Returns (new path, indicators).
    """
    if not np.all(np.isfinite(ystar)):
        raise ValueError("ystar contains non-finite entries")
    s = sample_mixture_indicators(rng, ystar, h)
    obs_prec = 1.0 / KSC_VARS[s]
    obs_rhs = (ystar - KSC_MEANS[s]) * obs_prec
    h_new = sample_ar1_gaussian(rng, phi, omega2, obs_prec, obs_rhs)
    return h_new, s
