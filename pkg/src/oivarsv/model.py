"""State types, exact likelihood, permutation machinery, and covariance
identities for the VAR with multivariate stochastic volatility.

The impact matrix B0 maps reduced-form errors to structural shocks,
eps_t = B0 (y_t - A' x_t) with eps_t ~ N(0, diag(exp(h_t))), and is either
unrestricted non-singular ("oi") or unit lower triangular ("cs").
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .priors import HorseshoeState

LOG_2PI = float(np.log(2.0 * np.pi))
PIVOT_TOL = 1e-12


class SingularMatrixError(ValueError):
    """Impact matrix is numerically singular."""


class DegeneratePivotError(ValueError):
    """A diagonal element is too close to zero for sign normalization."""


@dataclass(frozen=True)
class ModelDims:
    """Problem dimensions; k = n*p + 1 regressors per equation."""

    n: int
    p: int
    T: int

    def __post_init__(self) -> None:
        if self.n < 1 or self.p < 1 or self.T < 1:
            raise ValueError(f"invalid dimensions: n={self.n}, p={self.p}, T={self.T}")
        if self.T <= self.k:
            warnings.warn(
                f"T={self.T} <= k={self.k}: too short for a well-behaved estimation run",
                stacklevel=2,
            )

    @property
    def k(self) -> int:
        return self.n * self.p + 1


@dataclass
class VarSvParams:
    """One full parameter point.

    A : (k, n) stacked coefficients; row 0 holds the intercepts and rows
        1+(l-1)*n ... l*n hold the transpose of lag matrix l. Column i is
        equation i, so the conditional mean of y_t is A' x_t with
        x_t = (1, y_{t-1}', ..., y_{t-p}')'.
    B0 : (n, n) impact matrix, non-singular.
    phi, omega2 : (n,) AR(1) log-volatility persistence and innovation
        variances, |phi_i| < 1 and omega2_i > 0.
    """

    A: np.ndarray
    B0: np.ndarray
    phi: np.ndarray
    omega2: np.ndarray

    @property
    def a(self) -> np.ndarray:
        """Intercept vector (row 0 of A)."""
        return self.A[0]

    @property
    def n(self) -> int:
        return self.B0.shape[0]

    @property
    def k(self) -> int:
        return self.A.shape[0]

    @property
    def p(self) -> int:
        return (self.k - 1) // self.n

    def lag_matrix(self, lag: int) -> np.ndarray:
        """The n x n coefficient matrix on lag `lag` (1-based)."""
        n = self.n
        block = self.A[1 + (lag - 1) * n: 1 + lag * n, :]
        return block.T

    def copy(self) -> "VarSvParams":
        return VarSvParams(self.A.copy(), self.B0.copy(), self.phi.copy(), self.omega2.copy())

    def validate(self) -> None:
        n, k = self.n, self.k
        if self.A.shape != (k, n) or self.B0.shape != (n, n):
            raise ValueError("inconsistent parameter shapes")
        if self.phi.shape != (n,) or self.omega2.shape != (n,):
            raise ValueError("inconsistent SV parameter shapes")
        if np.any(np.abs(self.phi) >= 1.0):
            raise ValueError("phi must lie strictly inside (-1, 1)")
        if np.any(self.omega2 <= 0.0):
            raise ValueError("omega2 must be strictly positive")
        log_abs_det(self.B0)  # raises SingularMatrixError when degenerate


@dataclass(frozen=True)
class PermutationMap:
    """A bijection on variable indices; (P y)_i = y[perm[i]]."""

    perm: tuple[int, ...]

    def __post_init__(self) -> None:
        if sorted(self.perm) != list(range(len(self.perm))):
            raise ValueError(f"not a permutation of 0..{len(self.perm) - 1}: {self.perm}")

    @property
    def n(self) -> int:
        return len(self.perm)

    @classmethod
    def identity(cls, n: int) -> "PermutationMap":
        return cls(tuple(range(n)))

    @classmethod
    def reversal(cls, n: int) -> "PermutationMap":
        return cls(tuple(reversed(range(n))))

    def matrix(self) -> np.ndarray:
        P = np.zeros((self.n, self.n))
        P[np.arange(self.n), list(self.perm)] = 1.0
        return P

    def inverse(self) -> "PermutationMap":
        return PermutationMap(tuple(np.argsort(self.perm).tolist()))

    def apply_vector(self, v: np.ndarray) -> np.ndarray:
        return np.asarray(v)[list(self.perm)]

    def conjugate(self, M: np.ndarray) -> np.ndarray:
        """P M P' for a square matrix M."""
        idx = list(self.perm)
        return np.asarray(M)[np.ix_(idx, idx)]


def log_abs_det(B0: np.ndarray) -> float:
    """log |det B0| via a pivoted LU factorization.

    Raises SingularMatrixError when the smallest pivot magnitude is below 1e-12.
    """
    B0 = np.asarray(B0, dtype=float)
    if B0.ndim != 2 or B0.shape[0] != B0.shape[1]:
        raise ValueError("B0 must be square")
    if not np.all(np.isfinite(B0)):
        raise ValueError("B0 contains non-finite entries")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # scipy warns on exactly singular input
        lu, _ = lu_factor(B0, check_finite=False)
    piv = np.abs(np.diag(lu))
    if piv.min() < PIVOT_TOL:
        raise SingularMatrixError(f"smallest pivot {piv.min():.3e} below {PIVOT_TOL:g}")
    return float(np.sum(np.log(piv)))


def _check_finite(name: str, arr: np.ndarray) -> np.ndarray:
    arr = np.asarray(arr, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def log_likelihood(Y: np.ndarray, A: np.ndarray | None, B0: np.ndarray,
                   h: np.ndarray, X: np.ndarray | None = None) -> float:
    """Exact log-likelihood of the VAR-SV model given a log-volatility path.

    Y : (T, n) observations; X : (T, k) regressors; A : (k, n) coefficients.
    Pass A = X = None for a zero conditional mean. h : (T, n) log-variances
    of the structural shocks.

    Returns
        -(n T / 2) log 2 pi + T log|det B0| - (1/2) sum h
        - (1/2) sum_t eps_t' D_t^{-1} eps_t,   eps_t = B0 (y_t - A' x_t).
    """
    Y = _check_finite("Y", Y)
    h = _check_finite("h", h)
    T, n = Y.shape
    if h.shape != (T, n):
        raise ValueError(f"h must be (T, n) = {(T, n)}, got {h.shape}")
    if (A is None) != (X is None):
        raise ValueError("A and X must be supplied together")
    if A is None:
        E = Y
    else:
        A = _check_finite("A", A)
        X = _check_finite("X", X)
        if X.shape != (T, A.shape[0]):
            raise ValueError("X rows must match Y and X columns must match A")
        E = Y - X @ A
    ld = log_abs_det(B0)  # also validates B0
    eps = E @ np.asarray(B0, dtype=float).T
    quad = float(np.sum(np.exp(-h) * eps**2))
    return -0.5 * n * T * LOG_2PI + T * ld - 0.5 * float(h.sum()) - 0.5 * quad


def permute_model(params: VarSvParams, h: np.ndarray,
                  pmap: PermutationMap) -> tuple[VarSvParams, np.ndarray]:
    """Relabel the variables: B0 -> P B0 P', lag blocks conjugated, h columns permuted.

    The returned pair describes exactly the same data-generating process for
    the permuted observations y~_t = P y_t.
    """
    n = params.n
    if pmap.n != n:
        raise ValueError(f"permutation size {pmap.n} != n = {n}")
    idx = list(pmap.perm)
    A_new = np.empty_like(params.A)
    A_new[0] = params.A[0][idx]
    for lag in range(1, params.p + 1):
        lo = 1 + (lag - 1) * n
        block = params.A[lo: lo + n, :]
        A_new[lo: lo + n, :] = block[np.ix_(idx, idx)]
    out = VarSvParams(
        A=A_new,
        B0=pmap.conjugate(params.B0),
        phi=params.phi[idx],
        omega2=params.omega2[idx],
    )
    return out, np.asarray(h)[:, idx]


def unconditional_covariance(B0: np.ndarray, phi: np.ndarray, omega2: np.ndarray) -> np.ndarray:
    """Stationary covariance of the error term implied by the SV processes.

    Row i of B0 is scaled by exp(-omega2_i / (4 (1 - phi_i^2))), giving
    Bbar; the covariance is (Bbar' Bbar)^{-1}, symmetric positive definite.
    """
    B0 = _check_finite("B0", B0)
    phi = _check_finite("phi", phi)
    omega2 = _check_finite("omega2", omega2)
    if np.any(np.abs(phi) >= 1.0):
        raise ValueError("phi must lie strictly inside (-1, 1)")
    if np.any(omega2 < 0.0):
        raise ValueError("omega2 must be non-negative")
    scale = np.exp(-omega2 / (4.0 * (1.0 - phi**2)))
    Bbar = B0 * scale[:, None]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        lu_piv = lu_factor(Bbar, check_finite=False)
    piv = np.abs(np.diag(lu_piv[0]))
    if piv.min() < PIVOT_TOL:
        raise SingularMatrixError("scaled impact matrix is numerically singular")
    Binv = lu_solve(lu_piv, np.eye(B0.shape[0]))
    sigma = Binv @ Binv.T
    return 0.5 * (sigma + sigma.T)


def reduced_form_cov_path(B0: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Time-varying reduced-form covariances Sigma_t = B0^{-1} D_t B0^{-T}.

    One factorization of B0 is reused across the whole path. Returns (T, n, n).
    """
    B0 = _check_finite("B0", B0)
    h = _check_finite("h", h)
    n = B0.shape[0]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        lu_piv = lu_factor(B0, check_finite=False)
    piv = np.abs(np.diag(lu_piv[0]))
    if piv.min() < PIVOT_TOL:
        raise SingularMatrixError("B0 is numerically singular")
    Binv = lu_solve(lu_piv, np.eye(n))
    out = np.einsum("ij,tj,kj->tik", Binv, np.exp(h), Binv)
    return 0.5 * (out + out.transpose(0, 2, 1))


def normalize_sign(B0: np.ndarray) -> np.ndarray:
    """Flip rows of B0 so that the diagonal is positive.

    Row flips negate the corresponding structural shocks, which leaves the
    likelihood unchanged. Raises DegeneratePivotError when a diagonal entry
    is smaller than 1e-12 in magnitude.
    """
    B0 = np.array(B0, dtype=float, copy=True)
    d = np.diag(B0)
    if np.any(np.abs(d) < PIVOT_TOL):
        raise DegeneratePivotError("a diagonal element of B0 is numerically zero")
    B0[d < 0] *= -1.0
    return B0


@dataclass
class SampleMeta:
    """Reproducibility and diagnostic metadata attached to a posterior sample."""

    model: str
    seed: int
    n_burn: int
    thin: int
    dims: ModelDims
    sweep_times: np.ndarray
    an_accept_rate: float = float("nan")
    phi_accept_rate: float = float("nan")


@dataclass
class PosteriorSample:
    """Retained draws stored as stacked arrays; draw(r) rebuilds the r-th state."""

    A: np.ndarray        # (R, k, n)
    B0: np.ndarray       # (R, n, n)
    phi: np.ndarray      # (R, n)
    omega2: np.ndarray   # (R, n)
    h: np.ndarray        # (R, T, n)
    kappa1: np.ndarray   # (R,)
    kappa2: np.ndarray   # (R,)
    psi: np.ndarray      # (R, k, n)
    z_psi: np.ndarray    # (R, k, n)
    z_k1: np.ndarray     # (R,)
    z_k2: np.ndarray     # (R,)
    meta: SampleMeta

    def __len__(self) -> int:
        return self.A.shape[0]

    def draw(self, r: int) -> tuple[VarSvParams, np.ndarray, HorseshoeState]:
        params = VarSvParams(A=self.A[r], B0=self.B0[r], phi=self.phi[r], omega2=self.omega2[r])
        hs = HorseshoeState(
            psi=self.psi[r], kappa1=float(self.kappa1[r]), kappa2=float(self.kappa2[r]),
            z_psi=self.z_psi[r], z_k1=float(self.z_k1[r]), z_k2=float(self.z_k2[r]),
        )
        return params, self.h[r], hs

    def __iter__(self):
        return (self.draw(r) for r in range(len(self)))


def posterior_mean_sigma_path(sample: PosteriorSample, chunk: int = 256) -> np.ndarray:
    """Posterior mean of the reduced-form covariance path, (T, n, n)."""
    R = len(sample)
    if R == 0:
        raise ValueError("empty posterior sample")
    T, n = sample.h.shape[1], sample.h.shape[2]
    acc = np.zeros((T, n, n))
    for lo in range(0, R, chunk):
        hi = min(lo + chunk, R)
        Binv = np.linalg.inv(sample.B0[lo:hi])
        acc += np.einsum("rij,rtj,rkj->tik", Binv, np.exp(sample.h[lo:hi]), Binv)
    acc /= R
    return 0.5 * (acc + acc.transpose(0, 2, 1))


def sigma_path_draws(sample: PosteriorSample, entries: list[tuple[int, int]],
                     time_average: bool = True) -> np.ndarray:
    """Per-draw reduced-form covariance entries, optionally averaged over time.

    Returns (R, len(entries)) when time_average, else (R, T, len(entries)).
    Used for Monte Carlo standard errors of covariance-path summaries.
    """
    R = len(sample)
    Binv = np.linalg.inv(sample.B0)
    eh = np.exp(sample.h)  # (R, T, n)
    cols = []
    for (i, j) in entries:
        vals = np.einsum("rj,rtj->rt", Binv[:, i, :] * Binv[:, j, :], eh)
        cols.append(vals.mean(axis=1) if time_average else vals)
    return np.stack(cols, axis=-1)
