"""Minnesota-type horseshoe prior construction and priors on the impact matrix
and stochastic-volatility parameters.

Coefficient matrices follow a fixed (k, n) layout with k = n*p + 1: row 0 is
the intercept, rows 1 + (l-1)*n ... l*n hold the coefficients on lag l of
variables 1..n. Column i collects the coefficients of equation i.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DegenerateSeriesError(ValueError):
    """Raised when a series is too short or too flat to calibrate the prior."""


def coef_row(lag: int, variable: int, n: int) -> int:
    """Row index of the coefficient on `lag` of `variable` (0-based variable)."""
    return 1 + (lag - 1) * n + variable


@dataclass
class MinnesotaHsConfig:
    """Constants and masks defining the Minnesota-type horseshoe prior.

    m : (k, n) prior means of the VAR coefficients.
    C : (k, n) Minnesota scaling constants; row 0 is a placeholder, the
        intercept variance is `intercept_var`.
    s2 : (n,) AR(4) residual variances used to build the cross-variable ratios.
    own_lag_mask : (k, n) boolean, True where the coefficient is an own lag.
    """

    m: np.ndarray
    C: np.ndarray
    s2: np.ndarray
    own_lag_mask: np.ndarray
    intercept_var: float = 100.0

    @property
    def k(self) -> int:
        return self.C.shape[0]

    @property
    def n(self) -> int:
        return self.C.shape[1]

    @property
    def p(self) -> int:
        return (self.k - 1) // self.n


@dataclass
class HorseshoeState:
    """Local/global shrinkage variances with their inverse-gamma latents.

    psi and z_psi are (k, n); row 0 belongs to the intercept, carries no
    shrinkage, and is pinned at 1.
    """

    psi: np.ndarray
    kappa1: float
    kappa2: float
    z_psi: np.ndarray
    z_k1: float
    z_k2: float

    def copy(self) -> "HorseshoeState":
        return HorseshoeState(
            psi=self.psi.copy(),
            kappa1=self.kappa1,
            kappa2=self.kappa2,
            z_psi=self.z_psi.copy(),
            z_k1=self.z_k1,
            z_k2=self.z_k2,
        )

    def validate(self) -> None:
        if np.any(self.psi <= 0) or np.any(self.z_psi <= 0):
            raise ValueError("horseshoe local variances must be strictly positive")
        for name in ("kappa1", "kappa2", "z_k1", "z_k2"):
            if getattr(self, name) <= 0:
                raise ValueError(f"horseshoe {name} must be strictly positive")


@dataclass
class B0Prior:
    """Independent Gaussian priors on the rows of the impact matrix.

    b0 : (n, n), row i is the prior mean of row i of B0.
    Vb : (n, n), row i holds the diagonal of the prior covariance of row i.
    """

    b0: np.ndarray
    Vb: np.ndarray

    def validate(self) -> None:
        if np.any(self.Vb <= 0):
            raise ValueError("B0 prior variances must be strictly positive")


@dataclass
class SvPrior:
    """Truncated-normal prior on phi and inverse-gamma prior on omega^2."""

    phi0: np.ndarray
    Vphi: np.ndarray
    nu: np.ndarray
    S: np.ndarray

    def validate(self) -> None:
        if np.any(self.Vphi <= 0) or np.any(self.nu <= 0) or np.any(self.S <= 0):
            raise ValueError("SV prior hyperparameters must be strictly positive")


@dataclass
class PriorSet:
    """Everything the Gibbs sampler conditions on."""

    coef: MinnesotaHsConfig
    b0: B0Prior
    sv: SvPrior


def ar_residual_variance(y: np.ndarray, order: int = 4) -> float:
    """Sample variance of the residuals of an AR(order) fit with intercept.

    Least squares; series shorter than 12 observations are rejected, as are
    series whose residuals have (numerically) zero variance.
    """
    y = np.asarray(y, dtype=float)
    if y.ndim != 1:
        raise ValueError("expected a single series")
    if y.size < 12:
        raise DegenerateSeriesError(f"series too short for AR({order}) fit: {y.size} < 12")
    if np.var(y) < 1e-14:
        raise DegenerateSeriesError("series has zero variance")
    rows = y.size - order
    X = np.empty((rows, order + 1))
    X[:, 0] = 1.0
    for lag in range(1, order + 1):
        X[:, lag] = y[order - lag: y.size - lag]
    target = y[order:]
    beta, *_ = np.linalg.lstsq(X, target, rcond=None)
    resid = target - X @ beta
    s2 = float(np.var(resid, ddof=1))
    if s2 < 1e-14:
        raise DegenerateSeriesError("AR residuals have zero variance")
    return s2


def compute_c_constants(Y_full: np.ndarray, p: int, ar_order: int = 4) -> tuple[np.ndarray, np.ndarray]:
    """Minnesota constants C and AR residual variances s2 from the raw series.

    C[j, i] is 1/l^2 for the own lag l of equation i and s2_i / (l^2 s2_v)
    for lag l of another variable v. Row 0 (intercept) is set to 1 and is
    not used by the conditional prior variance.
    """
    Y_full = np.asarray(Y_full, dtype=float)
    if Y_full.ndim != 2:
        raise ValueError("Y_full must be (T, n)")
    n = Y_full.shape[1]
    k = n * p + 1
    s2 = np.array([ar_residual_variance(Y_full[:, r], ar_order) for r in range(n)])
    C = np.ones((k, n))
    for lag in range(1, p + 1):
        for v in range(n):
            row = coef_row(lag, v, n)
            for i in range(n):
                if v == i:
                    C[row, i] = 1.0 / lag**2
                else:
                    C[row, i] = s2[i] / (lag**2 * s2[v])
    return C, s2


def prior_mean_m(level_flags: np.ndarray, p: int) -> np.ndarray:
    """Prior mean matrix: zero except a unit first own lag for level variables."""
    level_flags = np.asarray(level_flags, dtype=bool)
    n = level_flags.size
    m = np.zeros((n * p + 1, n))
    for i in range(n):
        if level_flags[i]:
            m[coef_row(1, i, n), i] = 1.0
    return m


def own_lag_mask(n: int, p: int) -> np.ndarray:
    """Boolean (k, n) mask of own-lag coefficients; exactly p per equation."""
    mask = np.zeros((n * p + 1, n), dtype=bool)
    for lag in range(1, p + 1):
        for i in range(n):
            mask[coef_row(lag, i, n), i] = True
    return mask


def conditional_coef_variance(cfg: MinnesotaHsConfig, hs: HorseshoeState, i: int) -> np.ndarray:
    """Diagonal of the conditional Gaussian prior variance of equation i."""
    k = cfg.k
    v = np.empty(k)
    v[0] = cfg.intercept_var
    kap = np.where(cfg.own_lag_mask[1:, i], hs.kappa1, hs.kappa2)
    v[1:] = kap * hs.psi[1:, i] * cfg.C[1:, i]
    return v


def sample_inverse_gamma(rng: np.random.Generator, shape, scale):
    """Draw from IG(shape, scale) with density proportional to x^-(a+1) exp(-scale/x)."""
    out_shape = np.broadcast_shapes(np.shape(shape), np.shape(scale))
    g = rng.gamma(shape, 1.0, size=out_shape if out_shape else None)
    return scale / g


def init_horseshoe(n: int, p: int, rng: np.random.Generator | None = None,
                   randomized: bool = False) -> HorseshoeState:
    """All-ones deterministic state, or a draw from the half-Cauchy hierarchy.

    The randomized mode draws z ~ IG(1/2, 1) and then psi | z ~ IG(1/2, 1/z),
    which makes sqrt(psi) marginally standard half-Cauchy.
    """
    k = n * p + 1
    if not randomized:
        return HorseshoeState(
            psi=np.ones((k, n)), kappa1=1.0, kappa2=1.0,
            z_psi=np.ones((k, n)), z_k1=1.0, z_k2=1.0,
        )
    if rng is None:
        raise ValueError("randomized initialization needs an rng")
    z_psi = np.ones((k, n))
    psi = np.ones((k, n))
    z_psi[1:] = sample_inverse_gamma(rng, 0.5, np.ones((k - 1, n)))
    psi[1:] = sample_inverse_gamma(rng, 0.5, 1.0 / z_psi[1:])
    z_k1 = float(sample_inverse_gamma(rng, 0.5, 1.0))
    z_k2 = float(sample_inverse_gamma(rng, 0.5, 1.0))
    kappa1 = float(sample_inverse_gamma(rng, 0.5, 1.0 / z_k1))
    kappa2 = float(sample_inverse_gamma(rng, 0.5, 1.0 / z_k2))
    return HorseshoeState(psi=psi, kappa1=kappa1, kappa2=kappa2,
                          z_psi=z_psi, z_k1=z_k1, z_k2=z_k2)


def default_b0_prior(n: int, structure: str = "oi",
                     diag_mean: float = 1.0, diag_var: float = 1.0,
                     offdiag_mean: float = 0.0, offdiag_var: float = 1.0) -> B0Prior:
    """Unrestricted case: N(1, 1) diagonal and N(0, 1) off-diagonal elements.

    The triangular case keeps N(0, 1) on the free lower-triangular elements;
    its diagonal is fixed at one and the upper triangle at zero, so those
    entries of the prior arrays are never read.
    """
    if structure not in ("oi", "cs"):
        raise ValueError(f"unknown B0 structure: {structure!r}")
    b0 = np.full((n, n), offdiag_mean)
    Vb = np.full((n, n), offdiag_var)
    if structure == "oi":
        np.fill_diagonal(b0, diag_mean)
        np.fill_diagonal(Vb, diag_var)
    return B0Prior(b0=b0, Vb=Vb)


def default_sv_prior(n: int, phi0: float = 0.95, vphi: float = 0.01,
                     nu: float = 3.0, s: float = 0.2) -> SvPrior:
    """Persistent-volatility center: phi ~ N(0.95, 0.1^2) on (-1, 1), omega^2 ~ IG(3, 0.2)."""
    return SvPrior(
        phi0=np.full(n, phi0), Vphi=np.full(n, vphi),
        nu=np.full(n, nu), S=np.full(n, s),
    )


def build_priors(Y_full: np.ndarray, p: int, level_flags: np.ndarray | None = None,
                 structure: str = "oi", intercept_var: float = 100.0,
                 b0_diag_mean: float = 1.0, b0_diag_var: float = 1.0,
                 b0_offdiag_mean: float = 0.0, b0_offdiag_var: float = 1.0,
                 phi0: float = 0.95, vphi: float = 0.01,
                 nu: float = 3.0, s: float = 0.2) -> PriorSet:
    """Assemble the full prior set from the raw (pre-lag-trim) series."""
    Y_full = np.asarray(Y_full, dtype=float)
    n = Y_full.shape[1]
    if level_flags is None:
        level_flags = np.zeros(n, dtype=bool)
    C, s2 = compute_c_constants(Y_full, p)
    cfg = MinnesotaHsConfig(
        m=prior_mean_m(level_flags, p),
        C=C,
        s2=s2,
        own_lag_mask=own_lag_mask(n, p),
        intercept_var=intercept_var,
    )
    b0 = default_b0_prior(n, structure, b0_diag_mean, b0_diag_var,
                          b0_offdiag_mean, b0_offdiag_var)
    sv = default_sv_prior(n, phi0, vphi, nu, s)
    b0.validate()
    sv.validate()
    return PriorSet(coef=cfg, b0=b0, sv=sv)
