"""Kernel ridge regression conformal predictive distributions."""
from krrpm._backend import BACKEND
from krrpm.cps import (
    ConformalDistribution,
    Variant,
    eval_distribution,
    krrpm_predict,
    lemma2_terms,
    quantile,
    slow_oracle_Q,
)
from krrpm.errors import InputError, NonMonotoneError, NumericError
from krrpm.gpr import GaussianPrediction, bayes_predict, gaussian_cdf
from krrpm.kernels import KernelSpec, eval_kernel, kernel_matrix, kernel_vector, parse_kernel, validate_psd
from krrpm.ridge import FitState, LeverageTerms, fit, hat_matrix_full, leverage_terms, partitioned_hat

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ConformalDistribution",
    "FitState",
    "GaussianPrediction",
    "InputError",
    "KernelSpec",
    "LeverageTerms",
    "NonMonotoneError",
    "NumericError",
    "Variant",
    "bayes_predict",
    "eval_distribution",
    "eval_kernel",
    "fit",
    "gaussian_cdf",
    "hat_matrix_full",
    "kernel_matrix",
    "kernel_vector",
    "krrpm_predict",
    "lemma2_terms",
    "leverage_terms",
    "parse_kernel",
    "partitioned_hat",
    "quantile",
    "slow_oracle_Q",
    "validate_psd",
]
