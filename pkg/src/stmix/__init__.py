"""Covariate-dependent nonstationary space-time covariance modeling.

A Gaussian process whose correlation structure varies with local covariates:
the latent effect is a sum of independent stationary space-time fields with
covariate-driven mixture weights, giving a covariance between two points
that depends on the covariates at both.  The package covers simulation from
the model, Bayesian MCMC fitting, posterior-predictive kriging, empirical
variogram diagnostics, and posterior summaries of covariate effects on
variance and correlation.
"""

from .covariance import (
    CovModel,
    SpaceTimePoint,
    chol_psd,
    cov_matrix,
    mixture_cov,
    monte_carlo_cov,
)
from .data import Dataset, load_dataset, mercator_project, save_dataset
from .draws import PosteriorDraws, load_draws, save_draws
from .effects import (
    correlation_ratio,
    covariance_ratio,
    summarize_beta,
    summarize_effects,
)
from .exceptions import ConfigError, DataValidationError, NumericalError, StmixError
from .kernels import (
    SpaceTimeKernel,
    SpatialKernel,
    check_monotone_sufficient,
    eval_spacetime,
    eval_spatial,
)
from .predict import (
    MetricReport,
    PredictionResult,
    cv_split,
    holdout_targets,
    predict_points,
    validation_metrics,
)
from .sampler import (
    GibbsSampler,
    Hyperpriors,
    MonitorTrace,
    ParamState,
    SamplerConfig,
    permute_state,
    run_chain,
    state_to_model,
)
from .simulate import (
    BenchmarkSpec,
    benchmark_model,
    demo_curves,
    gp_covariate_fields,
    simulate_dataset,
    two_component_benchmark,
)
from .variogram import VariogramResult, empirical_variogram, ols_residuals
from .weights import (
    MultinomialLogisticWeights,
    PartitionWeights,
    SimpleLogitWeights,
    eval_weights,
    weight_gradient,
)

__version__ = "0.1.0"
