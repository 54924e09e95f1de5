"""scikit-learn style front ends for the Hermite regression tools.

``X`` is the single regressor series, shaped ``(n,)`` or ``(n, 1)``. Rows are
time points, so these estimators must not be used with shuffling
cross-validation splitters.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import as_pair, as_series, bandwidth_from_rule, positive_int
from .coint import CONDITION_LIMIT, build_regressors, check_bandwidth, estimate_beta, estimate_memory_wce
from .spectral import get_kernel

__all__ = ["HermiteFeatures", "WCERegressor", "MemoryEstimator"]


def _resolve_sigma2(sigma2, x: np.ndarray) -> float:
    if sigma2 is None:
        return float(np.var(x))
    sigma2 = float(sigma2)
    if not sigma2 > 0:
        raise ValueError("sigma2 must be positive")
    return sigma2


class HermiteFeatures(TransformerMixin, BaseEstimator):
    """Map ``x_t`` to ``(H_1(x_t), ..., H_K(x_t))`` with variance parameter ``sigma2``.

    Parameters
    ----------
    K : int
        Highest Hermite order.
    sigma2 : float or None
        Variance of ``x``. ``None`` uses the sample variance seen in ``fit``.
    """

    def __init__(self, K: int = 2, sigma2: float | None = None):
        self.K = K
        self.sigma2 = sigma2

    def fit(self, X, y=None):
        x = as_series(X, "X")
        positive_int(self.K, "K")
        self.sigma2_ = _resolve_sigma2(self.sigma2, x)
        self.n_features_in_ = 1
        return self

    def transform(self, X):
        check_is_fitted(self, "sigma2_")
        x = as_series(X, "X")
        return build_regressors(x, self.K, self.sigma2_).T

    def get_feature_names_out(self, input_features=None):
        return np.array([f"H{a}" for a in range(1, self.K + 1)], dtype=object)


class WCERegressor(RegressorMixin, BaseEstimator):
    """Weighted Covariance Estimator of ``y_t = sum_a beta_a H_a(x_t) + e_t``.

    Parameters
    ----------
    K : int
        Number of Hermite regressors.
    sigma2 : float or None
        Variance of ``x`` used in the polynomials; ``None`` plugs in the
        sample variance.
    kernel : str or LagWindowKernel
    bandwidth : int or None
        Lag-window bandwidth ``M``. ``None`` applies ``floor(n**bandwidth_exponent)``.
    bandwidth_exponent : float
    condition_limit : float
        Largest accepted condition number of ``f_HH(0)``.

    Attributes
    ----------
    coef_ : ndarray of shape (K,)
    estimate_ : WceEstimate
    bandwidth_ : int
    sigma2_ : float
    bandwidth_check_ : BandwidthCheck
    """

    def __init__(
        self,
        K: int = 2,
        sigma2: float | None = None,
        kernel="bartlett",
        bandwidth: int | None = None,
        bandwidth_exponent: float = 0.3,
        condition_limit: float = CONDITION_LIMIT,
    ):
        self.K = K
        self.sigma2 = sigma2
        self.kernel = kernel
        self.bandwidth = bandwidth
        self.bandwidth_exponent = bandwidth_exponent
        self.condition_limit = condition_limit

    def fit(self, X, y):
        y, x = as_pair(y, X, min_length=2)
        K = positive_int(self.K, "K")
        self.sigma2_ = _resolve_sigma2(self.sigma2, x)
        if self.bandwidth is None:
            M = bandwidth_from_rule(x.size, self.bandwidth_exponent)
        else:
            M = positive_int(self.bandwidth, "bandwidth")
        self.estimate_ = estimate_beta(
            y, x, K, self.sigma2_, get_kernel(self.kernel), M, condition_limit=self.condition_limit
        )
        self.bandwidth_ = M
        self.bandwidth_check_ = check_bandwidth(M, x.size, K)
        self.coef_ = self.estimate_.beta_hat
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        x = as_series(X, "X")
        return self.coef_ @ build_regressors(x, self.coef_.size, self.sigma2_)

    def residuals(self, X, y):
        """``y - beta_hat' H(x)``."""
        y, _ = as_pair(y, X)
        return y - self.predict(X)


class MemoryEstimator(BaseEstimator):
    """Log-ratio memory estimate ``log|sum k(tau/M) c_ww(tau)| / (2 log M)`` of a series.

    Parameters
    ----------
    kernel : str or LagWindowKernel
    bandwidth : int or None
        ``None`` applies ``floor(n**bandwidth_exponent)``.
    bandwidth_exponent : float

    Attributes
    ----------
    d_ : float
    bandwidth_ : int
    """

    def __init__(self, kernel="bartlett", bandwidth: int | None = None, bandwidth_exponent: float = 0.4):
        self.kernel = kernel
        self.bandwidth = bandwidth
        self.bandwidth_exponent = bandwidth_exponent

    def fit(self, X, y=None):
        w = as_series(X, "X", min_length=3)
        if self.bandwidth is None:
            M = bandwidth_from_rule(w.size, self.bandwidth_exponent)
        else:
            M = positive_int(self.bandwidth, "bandwidth")
        self.d_ = estimate_memory_wce(w, get_kernel(self.kernel), M)
        self.bandwidth_ = M
        return self
