"""Polynomial (Hermite) cointegration for long-memory Gaussian-subordinated series.

Modules
-------
longmem
    Fractional moving-average simulation and exact covariances.
hermite
    Hermite polynomials with explicit variance and basis conversion.
diagram
    Diagram-formula moments and cumulants of Hermite products.
spectral
    Sample covariances, lag windows and frequency-zero spectral estimates.
coint
    Weighted Covariance Estimator and its assumption checks.
estimators
    scikit-learn style wrappers.
montecarlo
    Replicated consistency experiments.
"""

from .coint import (
    CointModelSpec,
    SingularSystemError,
    WceEstimate,
    build_regressors,
    check_assumption_a3,
    check_bandwidth,
    estimate_beta,
    estimate_memory_wce,
    max_identifiable_order,
    ols_beta,
    rate_limits,
)
from .diagram import connected_signatures, enumerate_diagrams, hermite_cumulant, hermite_moment, is_connected
from .estimators import HermiteFeatures, MemoryEstimator, WCERegressor
from .hermite import HermiteExpansion, hermite_eval, hermite_rank, memory_of_transform, monomial_to_hermite
from .longmem import BivariateProcessSpec, autocovariance, cross_covariance, ma_weights, simulate
from .spectral import LagWindowKernel, builtin_kernels, get_kernel, wce_f0

__version__ = "0.1.0"

__all__ = [
    "BivariateProcessSpec",
    "CointModelSpec",
    "HermiteExpansion",
    "HermiteFeatures",
    "LagWindowKernel",
    "MemoryEstimator",
    "SingularSystemError",
    "WCERegressor",
    "WceEstimate",
    "autocovariance",
    "build_regressors",
    "builtin_kernels",
    "check_assumption_a3",
    "check_bandwidth",
    "connected_signatures",
    "cross_covariance",
    "enumerate_diagrams",
    "estimate_beta",
    "estimate_memory_wce",
    "get_kernel",
    "hermite_cumulant",
    "hermite_eval",
    "hermite_moment",
    "hermite_rank",
    "is_connected",
    "ma_weights",
    "max_identifiable_order",
    "memory_of_transform",
    "monomial_to_hermite",
    "ols_beta",
    "rate_limits",
    "simulate",
    "wce_f0",
]
