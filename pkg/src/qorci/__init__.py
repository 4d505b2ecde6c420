"""Distribution-informed confidence intervals for quantiles.

Kernel quantile-density estimation with curvature-ratio (QOR) optimal
bandwidths, generalized lambda distribution fitting, eight interval
constructions, two-sample difference intervals, and a reproducible Monte
Carlo harness.
"""

__version__ = "0.1.0"

from .distributions import DistributionModel, QorEvaluation, parse_model
from .errors import (
    DataError,
    DegenerateDataError,
    DomainError,
    FitError,
    NumericalError,
    QorciError,
    ZeroDensityError,
)
from .estimators import (
    EPANECHNIKOV,
    TRIANGULAR,
    AdaptivePareto,
    BandwidthRule,
    KernelSpec,
    QuantileDensityEstimate,
    bandwidth_constant,
    kernel_quantile_estimate,
    kernel_by_name,
    optimal_bandwidth,
    qdens_direct,
    qdens_reciprocal,
    qdens_soni,
    sample_quantile_type8,
)
from .gld import GldFit, GldParams, fit_gld_mle, gld_cdf, gld_pdf, gld_qor, gld_quantile, gld_quantile_density
from .intervals import (
    MethodConfig,
    QuantileCI,
    TwoSampleCI,
    ci_method_a,
    ci_method_b_pareto,
    ci_method_c,
    ci_method_d,
    ci_method_e,
    ci_methods_fgh,
    ci_two_sample,
    compute_ci,
)
from .numerics import (
    NelderMeadOptions,
    NelderMeadResult,
    RngStream,
    RootBracket,
    beta_quantile,
    brent_root,
    nelder_mead,
    regularized_incomplete_beta,
    regularized_incomplete_gamma,
    rng_uniform,
    std_normal_cdf,
    std_normal_pdf,
    std_normal_quantile,
)
from .simulation import (
    CoverageReport,
    EstimatorConfig,
    ExperimentSpec,
    GldBiasReport,
    MseReport,
    run_coverage,
    run_gld_bias,
    run_mse,
    run_two_sample_coverage,
)
