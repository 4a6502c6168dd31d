"""Deviation-regime analysis for sums with a random number of terms.

The package covers the full pipeline for the scaled pair (sum over a random
count, count) / n: extended-real rate functions in the large- and
moderate-deviation regimes, the variational engine behind them, exact and
Monte Carlo probability estimates with exponential tilting, scaling sweeps,
moment and CLT diagnostics, and a config-driven CLI (``compdev``).
"""

from .config import (
    DEFAULTS,
    ResultTable,
    build_models,
    config_hash,
    normalize_config,
    parse_config,
    serialize_config,
)
from .counting import (
    BernoulliSumCounting,
    CountingDerivatives,
    CountingModel,
    ExponentialInterarrival,
    FractionalPoissonCounting,
    GammaInterarrival,
    IidSumCounting,
    InterarrivalLaw,
    PoissonCounting,
    RenewalCounting,
    TabulatedInterarrival,
    invert_interarrival_cgf,
)
from .dualpair import (
    NEG_INF,
    POS_INF,
    CovarianceOperator,
    ExtendedReal,
    as_vector,
    pair,
)
from .errors import (
    CompoundDeviationsError,
    ConfigError,
    DimensionMismatchError,
    EnumerationTooLargeError,
    ExtendedRealArithmeticError,
    InconclusiveOptimizationError,
    NoRootError,
    UnsupportedModelError,
    ValidationError,
    ZeroRateEventError,
)
from .experiments import run_experiment
from .mittag_leffler import (
    log_mittag_leffler,
    log_mittag_leffler_ratio,
    mittag_leffler,
    switch_point,
)
from .montecarlo import (
    CheckRow,
    CltCheckResult,
    CompoundSamples,
    DecayEstimate,
    EventProbability,
    HalfSpaceEvent,
    MdSweepResult,
    MdSweepRow,
    MomentCheckResult,
    ScalingFamily,
    TiltParameters,
    clt_regime_check,
    decay_rate_scan,
    enumerate_exact,
    estimate_event_prob,
    event_rate_infimum,
    md_scaling_sweep,
    moment_limits_check,
    simulate_compound,
    tilt_parameters,
)
from .summands import (
    FiniteSupportSummands,
    GaussianSummands,
    GridFunctionSummands,
    SummandModel,
    cramer_rate_finite_support,
)
from .variational import (
    DEFAULT_SETTINGS,
    FiniteNMoments,
    LegendreResult,
    LimitMoments,
    OptimizerSettings,
    analytic_limit_moments,
    count_rate,
    finite_n_moment_identities,
    joint_cgf,
    legendre_transform,
    md_quadratic_finite_support,
    probe_convexity,
    psi_sn,
    psi_sn_mean_shifted,
    rate_ld_explicit,
    rate_ld_variational,
    rate_md_centered_sum,
    rate_md_centered_sum_variational,
    rate_md_centered_summands,
    rate_md_centered_summands_variational,
)
from .version import __version__

__all__ = [
    "__version__",
    "BernoulliSumCounting",
    "CheckRow",
    "CltCheckResult",
    "CompoundDeviationsError",
    "CompoundSamples",
    "ConfigError",
    "CountingDerivatives",
    "CountingModel",
    "CovarianceOperator",
    "DecayEstimate",
    "DEFAULTS",
    "DEFAULT_SETTINGS",
    "DimensionMismatchError",
    "EnumerationTooLargeError",
    "EventProbability",
    "ExponentialInterarrival",
    "ExtendedReal",
    "ExtendedRealArithmeticError",
    "FiniteNMoments",
    "FiniteSupportSummands",
    "FractionalPoissonCounting",
    "GammaInterarrival",
    "GaussianSummands",
    "GridFunctionSummands",
    "HalfSpaceEvent",
    "IidSumCounting",
    "InconclusiveOptimizationError",
    "InterarrivalLaw",
    "LegendreResult",
    "LimitMoments",
    "MdSweepResult",
    "MdSweepRow",
    "MomentCheckResult",
    "NEG_INF",
    "NoRootError",
    "OptimizerSettings",
    "POS_INF",
    "PoissonCounting",
    "RenewalCounting",
    "ResultTable",
    "ScalingFamily",
    "SummandModel",
    "TabulatedInterarrival",
    "TiltParameters",
    "UnsupportedModelError",
    "ValidationError",
    "ZeroRateEventError",
    "analytic_limit_moments",
    "as_vector",
    "build_models",
    "clt_regime_check",
    "config_hash",
    "count_rate",
    "cramer_rate_finite_support",
    "decay_rate_scan",
    "enumerate_exact",
    "estimate_event_prob",
    "event_rate_infimum",
    "finite_n_moment_identities",
    "invert_interarrival_cgf",
    "joint_cgf",
    "legendre_transform",
    "log_mittag_leffler",
    "log_mittag_leffler_ratio",
    "md_quadratic_finite_support",
    "md_scaling_sweep",
    "mittag_leffler",
    "moment_limits_check",
    "normalize_config",
    "pair",
    "parse_config",
    "probe_convexity",
    "psi_sn",
    "psi_sn_mean_shifted",
    "rate_ld_explicit",
    "rate_ld_variational",
    "rate_md_centered_sum",
    "rate_md_centered_sum_variational",
    "rate_md_centered_summands",
    "rate_md_centered_summands_variational",
    "run_experiment",
    "serialize_config",
    "simulate_compound",
    "tilt_parameters",
]
