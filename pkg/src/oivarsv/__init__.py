"""Order-invariant Bayesian VARs with multivariate stochastic volatility."""

from .absnormal import AbsNormalParams, sample_absolute_normal
from .data_io import Dataset, TransformCode, apply_transform, load_code_map, load_csv
from .dgp import generate_section5, generate_section61, ordering_variance_demo
from .forecast import (
    EstimationSettings,
    ForecastConfig,
    ForecastTable,
    ModelRun,
    dm_test,
    predictive_path,
    recursive_eval,
)
from .model import (
    ModelDims,
    PermutationMap,
    PosteriorSample,
    VarSvParams,
    log_likelihood,
    normalize_sign,
    permute_model,
    posterior_mean_sigma_path,
    reduced_form_cov_path,
    unconditional_covariance,
)
from .priors import (
    B0Prior,
    HorseshoeState,
    MinnesotaHsConfig,
    PriorSet,
    SvPrior,
    build_priors,
    compute_c_constants,
    conditional_coef_variance,
    init_horseshoe,
    prior_mean_m,
)
from .sampler import ChainState, gibbs_sweep, run_mcmc

__all__ = [
    "AbsNormalParams",
    "B0Prior",
    "ChainState",
    "Dataset",
    "EstimationSettings",
    "ForecastConfig",
    "ForecastTable",
    "HorseshoeState",
    "MinnesotaHsConfig",
    "ModelDims",
    "ModelRun",
    "PermutationMap",
    "PosteriorSample",
    "PriorSet",
    "SvPrior",
    "TransformCode",
    "VarSvParams",
    "apply_transform",
    "build_priors",
    "compute_c_constants",
    "conditional_coef_variance",
    "dm_test",
    "generate_section5",
    "generate_section61",
    "gibbs_sweep",
    "init_horseshoe",
    "load_code_map",
    "load_csv",
    "log_likelihood",
    "normalize_sign",
    "ordering_variance_demo",
    "permute_model",
    "posterior_mean_sigma_path",
    "predictive_path",
    "prior_mean_m",
    "recursive_eval",
    "reduced_form_cov_path",
    "run_mcmc",
    "sample_absolute_normal",
    "unconditional_covariance",
]
