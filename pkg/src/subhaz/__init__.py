"""Recurrent-event hazard regression with dense sensor covariates via
probabilistic subsampling.

The pipeline: simulate (or load) per-day sensor trajectories and recurrent
events, draw non-event times from a Poisson sampling design, expand windowed
covariate histories in a data-driven eigenbasis, and fit the hazard model as
a penalized logistic regression with a known offset.
"""

from .gp_sim import (
    MaternParams,
    SensorPath,
    TrueBeta,
    EventSet,
    matern_cov,
    matern_cov_matrix,
    sample_gp,
    true_beta_eval,
    hazard_eval,
    hazard_profile,
    generate_events,
)
from .subsample import (
    SamplingDesign,
    SampleSet,
    draw_samples,
    thin,
    weight,
    ht_estimator,
    wp_estimator,
)
from .fpca import (
    WindowedHistory,
    MarginalCov,
    EigenSystem,
    extract_windows,
    estimate_mean,
    pooled_cov,
    smooth_and_project,
    eigensystem,
    scores,
    scores_all,
    marginal_cov_from_kernel,
    ZeroMean,
)
from .design import (
    SplineBasis,
    CrossMatrix,
    DesignRow,
    DesignMatrix,
    build_basis,
    cross_matrix,
    build_design,
    stack_rows,
)
from .fit import (
    FitResult,
    BetaCurve,
    logistic_score,
    approx_score,
    penalized_loglik,
    irls_fit,
    update_sigma2,
    fit_alternating,
    fisher_info,
    beta_curve,
    ht_fit,
)
from .mixed import (
    RandomEffectSpec,
    QuadratureRule,
    gauss_hermite,
    newton_blup,
    agq_marginal_loglik,
    fit_multilevel,
)
from .impute import (
    ConditionalLaw,
    BootMIResult,
    conditional_law,
    impute_sequential,
    boot_mi,
)
from .evaluation import (
    MiseReport,
    mise,
    mise_from_fits,
    subsampling_variance,
    partial_mise,
    efficiency_table,
    ExperimentConfig,
    replicate_experiment,
)

__version__ = "0.1.0"
