"""Bayesian prognostic covariate adjustment for two-arm randomized trials."""

from .data import HistoricalSubjects, TrialData, load_historical_csv, load_trial_csv, summarize
from .elicitation import PriorEstimate, study_level_lambda, subject_level_lambda
from .errors import (
    ConfigError,
    ConsistencyError,
    DataError,
    DomainError,
    ProgBayesError,
    SingularDesignError,
)
from .estimators import (
    AnalysisReport,
    ols_fit,
    prog_adjust_analysis,
    single_arm_analysis,
    unadjusted_analysis,
)
from .posterior import (
    ExtendedPriorSpec,
    Posterior,
    PriorSpec,
    bayes_analysis,
    bayes_beta2_analysis,
    compute_posterior,
    compute_posterior_beta2,
    decide,
)
from .simulate import GenerativeSpec, SweepConfig, estimate_rejection_rate, generate_trial, run_sweep
from .stats import RandomStream
from .theory import (
    OperatingPoint,
    asymptotic_rejection_rate,
    prog_adjust_power,
    single_arm_power,
    variance_factor,
    zero_limit_rate,
)

__version__ = "0.1.0"
