"""Sparse (l1-regularized) recursive least-squares filtering, its transient
mean / mean-square models, and a Monte Carlo verification harness."""

__version__ = "0.1.0"

from .errors import (ConfigurationError, DegenerateCovarianceError,
                     DegenerateSampleError, LinearSolveError,
                     NumericalFailureError)
from .filters import (FilterState, StepOutput, init_filter, phi_recursion_check,
                      step_compact, step_original)
from .gauss import (GaussPairMoment, bivariate_normal_cdf, expected_sign,
                    expected_sign_product, expected_value_times_sign,
                    std_normal_cdf)
from .normality import HenzeZirklerResult, henze_zirkler_statistic
from .records import TrajectoryRecord
from .sim import (ExperimentConfig, NormalityDecision, PairSampleSet,
                  ar1_stream, normality_audit, run_ensemble, rx_toeplitz,
                  simulate_run, sparse32_config, sparse32_weights)
from .theory import (SystemSpec, TheoryState, covariance_step,
                     expected_phi_step, init_theory, mean_step, msd_readout,
                     mse_readout, q1_matrix, q2_matrix, run_theory)

__all__ = [
    "__version__",
    "ConfigurationError",
    "DegenerateCovarianceError",
    "DegenerateSampleError",
    "LinearSolveError",
    "NumericalFailureError",
    "FilterState",
    "StepOutput",
    "init_filter",
    "step_original",
    "step_compact",
    "phi_recursion_check",
    "GaussPairMoment",
    "std_normal_cdf",
    "bivariate_normal_cdf",
    "expected_sign",
    "expected_sign_product",
    "expected_value_times_sign",
    "HenzeZirklerResult",
    "henze_zirkler_statistic",
    "TrajectoryRecord",
    "ExperimentConfig",
    "PairSampleSet",
    "NormalityDecision",
    "ar1_stream",
    "rx_toeplitz",
    "simulate_run",
    "run_ensemble",
    "normality_audit",
    "sparse32_config",
    "sparse32_weights",
    "SystemSpec",
    "TheoryState",
    "init_theory",
    "expected_phi_step",
    "mean_step",
    "q1_matrix",
    "q2_matrix",
    "covariance_step",
    "mse_readout",
    "msd_readout",
    "run_theory",
]
