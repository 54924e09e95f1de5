"""Weighted Covariance Estimation of Hermite cointegrating coefficients.

For ``y_t = sum_{a=1}^K beta_a H_a(x_t) + e_t`` the estimator solves

    f_HH(0) beta = f_Hy(0)

where both sides are lag-window estimates at frequency zero. Correlation
between ``x_t`` and ``e_t`` is allowed; identification comes from ``H_K(x_t)``
having stronger memory than ``e_t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import integrate, linalg

from ._validation import as_pair, as_series, positive_int
from .hermite import HermiteExpansion, memory_of_transform
from .longmem import BivariateProcessSpec
from .spectral import LagWindowKernel, get_kernel, sample_covariance_matrices, wce_f0_matrix

__all__ = [
    "SingularSystemError",
    "AssumptionViolation",
    "CointModelSpec",
    "WceEstimate",
    "RateLimits",
    "AssumptionCheck",
    "BandwidthCheck",
    "build_regressors",
    "estimate_beta",
    "ols_beta",
    "check_assumption_a3",
    "check_assumption_A3",
    "check_bandwidth",
    "max_identifiable_order",
    "estimate_memory_wce",
    "rate_limits",
    "residual_memory",
]

CONDITION_LIMIT = 1e12
# ties in the strict identification inequalities are decided up to rounding
_TIE = 1e-12


class SingularSystemError(np.linalg.LinAlgError):
    pass


class AssumptionViolation(ValueError):
    pass


class AssumptionCheck(NamedTuple):
    ok: bool
    lhs: float
    rhs: float
    message: str

    def __bool__(self):
        return self.ok


class BandwidthCheck(NamedTuple):
    ok: bool
    eta: int
    exponent: int
    ratio: float
    message: str

    def __bool__(self):
        return self.ok


def residual_memory(k0_tilde: int, d_eps: float) -> float:
    """``d_e = max(k0_tilde (d_eps - 1/2) + 1/2, 0)``."""
    return memory_of_transform(k0_tilde, d_eps)


def check_assumption_a3(K, d_x: float | None = None, k0_tilde: int = 1, d_eps: float | None = None) -> AssumptionCheck:
    """``K (2 d_x - 1) > max(-1, k0_tilde (2 d_eps - 1))`` (strict).

    ``K`` may also be a :class:`CointModelSpec`, whose own parameters are used.
    """
    if isinstance(K, CointModelSpec):
        return K.check_a3()
    if d_x is None or d_eps is None:
        raise TypeError("d_x and d_eps are required")
    lhs = K * (2 * d_x - 1)
    rhs = max(-1.0, k0_tilde * (2 * d_eps - 1))
    ok = lhs > rhs + _TIE
    rel = ">" if ok else "<="
    msg = f"K(2d_x-1) = {lhs:.6g} {rel} max(-1, k0~(2d_eps-1)) = {rhs:.6g}"
    return AssumptionCheck(ok, lhs, rhs, msg)


check_assumption_A3 = check_assumption_a3


def check_bandwidth(M: int, n: int, K: int, k0_tilde: int = 1) -> BandwidthCheck:
    """Finite-sample face of ``1/M + M**max(3, eta-2) / n -> 0`` with ``eta = max(K, k0_tilde)``.

    The ratio ``M**exponent / n`` above one is flagged as a violation.
    """
    eta = max(K, k0_tilde)
    exponent = max(3, eta - 2)
    ratio = M**exponent / n
    ok = M >= 1 and M < n and ratio <= 1.0
    msg = f"M^{exponent}/n = {ratio:.4g} (M={M}, n={n}, eta={eta})"
    if M >= n:
        msg = f"bandwidth M={M} must be smaller than n={n} (Assumption C); " + msg
    return BandwidthCheck(ok, eta, exponent, ratio, msg)


def max_identifiable_order(d_x: float, d_e: float) -> int | None:
    """Largest ``k`` with ``k (2 d_x - 1) > 2 d_e - 1``; ``None`` when no ``k >= 1`` qualifies."""
    slope = 2 * d_x - 1
    rhs = 2 * d_e - 1
    if not slope < 0:
        raise ValueError("d_x must be below 1/2")
    k = 0
    while (k + 1) * slope > rhs + _TIE:
        k += 1
    return k or None


@dataclass(frozen=True)
class CointModelSpec:
    """``y_t = g(x_t) + e_t`` with ``g`` expanded in ``H_k(.; var x)`` and ``e`` in ``H_k(.; var eps)``."""

    g: HermiteExpansion
    residual: HermiteExpansion
    process: BivariateProcessSpec

    def __post_init__(self):
        a3 = self.check_a3()
        if not a3:
            raise AssumptionViolation(f"identification condition (Assumption A3) fails: {a3.message}")

    @classmethod
    def from_coefficients(cls, process: BivariateProcessSpec, beta, xi=None) -> "CointModelSpec":
        """Build with ``sigma2`` set to the exact variances of the simulated process."""
        if not isinstance(beta, dict):
            beta = {k + 1: float(b) for k, b in enumerate(beta)}
        xi = {1: 1.0} if xi is None else xi
        if not isinstance(xi, dict):
            xi = {k + 1: float(b) for k, b in enumerate(xi)}
        g = HermiteExpansion(process.var_x, beta)
        e = HermiteExpansion(process.var_eps, xi)
        return cls(g, e, process)

    @property
    def K(self) -> int:
        return self.g.max_order

    @property
    def k0(self) -> int:
        return self.g.rank

    @property
    def k0_tilde(self) -> int:
        return self.residual.rank

    @property
    def beta(self) -> np.ndarray:
        return self.g.coefficient_vector()

    @property
    def d_e(self) -> float:
        return residual_memory(self.k0_tilde, float(self.process.d_eps))

    def d_a(self, a: int) -> float:
        return a * (float(self.process.d_x) - 0.5) + 0.5

    def rate_exponents(self) -> np.ndarray:
        return np.array([self.d_a(a) - self.d_e for a in range(1, self.K + 1)])

    def check_a3(self) -> AssumptionCheck:
        return check_assumption_a3(self.K, float(self.process.d_x), self.k0_tilde, float(self.process.d_eps))

    def response(self, x, eps) -> tuple[np.ndarray, np.ndarray]:
        """``(e, y)`` with ``e = residual(eps)`` and ``y = g(x) + e``."""
        e = np.asarray(self.residual(eps))
        return e, np.asarray(self.g(x)) + e

    def to_dict(self) -> dict:
        return {"g": self.g.to_dict(), "residual": self.residual.to_dict(), "process": self.process.to_dict()}


@dataclass(frozen=True)
class WceEstimate:
    beta_hat: np.ndarray
    f_hh: np.ndarray
    f_hy: np.ndarray
    M: int
    kernel: str
    condition_number: float
    sigma2: float
    rate_exponents: np.ndarray | None = None

    @property
    def K(self) -> int:
        return self.beta_hat.size

    def scaled_error(self, beta) -> np.ndarray:
        """``M**(d_a - d_e) |beta_hat_a - beta_a|``; needs ``rate_exponents``."""
        if self.rate_exponents is None:
            raise ValueError("rate exponents unknown for this estimate")
        return self.M**self.rate_exponents * np.abs(self.beta_hat - np.asarray(beta, dtype=float))

    def to_dict(self) -> dict:
        out = {
            "beta_hat": self.beta_hat.tolist(),
            "f_hh": self.f_hh.tolist(),
            "f_hy": self.f_hy.tolist(),
            "M": self.M,
            "kernel": self.kernel,
            "condition_number": self.condition_number,
            "sigma2": self.sigma2,
        }
        if self.rate_exponents is not None:
            out["rate_exponents"] = self.rate_exponents.tolist()
        return out


def build_regressors(x, K: int, sigma2: float) -> np.ndarray:
    """Rows ``H_1(x; sigma2), ..., H_K(x; sigma2)`` as a ``(K, n)`` array."""
    x = as_series(x, "x")
    K = positive_int(K, "K")
    out = np.empty((K, x.size))
    prev = np.ones_like(x)
    cur = x.copy()
    out[0] = cur
    for j in range(1, K):
        prev, cur = cur, x * cur - j * sigma2 * prev
        out[j] = cur
    return out


def _solve(f_hh: np.ndarray, f_hy: np.ndarray, limit: float) -> tuple[np.ndarray, float]:
    cond = float(np.linalg.cond(f_hh))
    if not np.isfinite(cond) or cond > limit:
        raise SingularSystemError(f"f_HH(0) is singular or ill-conditioned (condition number {cond:.3g} > {limit:.0e})")
    lu, piv = linalg.lu_factor(f_hh)
    return linalg.lu_solve((lu, piv), f_hy), cond


def estimate_beta(
    y,
    x,
    K: int,
    sigma2: float,
    kernel="bartlett",
    M: int | None = None,
    *,
    rate_exponents=None,
    condition_limit: float = CONDITION_LIMIT,
) -> WceEstimate:
    """Weighted Covariance Estimator ``beta_hat = f_HH(0)^-1 f_Hy(0)``.

    ``f_HH`` and ``f_Hy`` are lag-window estimates (bandwidth ``M``) built from
    ``H_a(x_t; sigma2)``, ``a = 1..K``. The system is solved by pivoted LU;
    a condition number above ``condition_limit`` raises
    :class:`SingularSystemError`.
    """
    y, x = as_pair(y, x, min_length=2)
    kern = get_kernel(kernel)
    if M is None:
        raise ValueError("bandwidth M is required")
    M = positive_int(M, "M")
    if M >= x.size:
        raise ValueError(f"bandwidth M={M} must be smaller than n={x.size} (Assumption C)")
    H = build_regressors(x, K, sigma2)
    f = wce_f0_matrix(np.vstack([H, y]), kern, M)
    f_hh, f_hy = f[:K, :K], f[:K, K]
    beta, cond = _solve(f_hh, f_hy, condition_limit)
    rates = None if rate_exponents is None else np.asarray(rate_exponents, dtype=float)
    return WceEstimate(beta, f_hh, f_hy, M, kern.name, cond, float(sigma2), rates)


def ols_beta(y, x, K: int, sigma2: float) -> np.ndarray:
    """Least squares of ``y`` on ``H_1..H_K`` without intercept (inconsistent when ``x`` and ``e`` correlate)."""
    y, x = as_pair(y, x, min_length=2)
    H = build_regressors(x, K, sigma2)
    return np.linalg.lstsq(H.T, y, rcond=None)[0]


def estimate_memory_wce(w, kernel="bartlett", M: int = 2) -> float:
    """Memory estimate ``log|sum_{|tau|<=M} k(tau/M) c_ww(tau)| / (2 log M)``.

    No ``1/(2 pi)`` factor is applied to the lag sum. Converges only at a
    logarithmic rate and carries an ``O(1/log M)`` offset.
    """
    w = as_series(w, "w", min_length=2)
    M = positive_int(M, "M")
    if M < 2:
        raise ValueError("M must be at least 2")
    if M >= w.size:
        raise ValueError(f"bandwidth M={M} must be smaller than n={w.size}")
    kern = get_kernel(kernel)
    C = sample_covariance_matrices(w[None, :], M)[:, 0, 0]
    k = kern(np.arange(M + 1) / M)
    total = k[0] * C[0] + 2 * np.sum(k[1:] * C[1:])
    if total == 0:
        raise ValueError("weighted covariance sum is zero; memory estimate undefined")
    return float(np.log(abs(total)) / (2 * np.log(M)))


@dataclass(frozen=True)
class RateLimits:
    """Limit constants ``B_ab`` (diagonal ``K x K``) and ``B_ae`` (length ``K``).

    Both omit the ``1/(2 pi)`` of the spectral estimates: they are limits of
    ``M**-(d_a+d_b) sum k(tau/M) gamma_ab(tau)``.
    """

    B_ab: np.ndarray
    B_ae: np.ndarray
    rate_exponents: np.ndarray = field(repr=False)

    def limit(self) -> np.ndarray:
        """``B_HH^-1 B_He``, the limit of ``M**(d_a - d_e) (beta_hat - beta)``."""
        return self.B_ae / np.diag(self.B_ab)

    def leading_bias(self, M: int) -> np.ndarray:
        return self.limit() * float(M) ** (-self.rate_exponents)


def _kernel_moment(kernel: LagWindowKernel, power: float) -> float:
    """``int_{-1}^{1} k(u) |u|**power du`` for ``power > -1``."""
    if power <= -1:
        raise ValueError(f"|u|^{power} is not integrable at zero")
    f = lambda u: float(kernel(u))
    val, err = integrate.quad(f, 0.0, 1.0, weight="alg", wvar=(power, 0.0), limit=200, epsabs=1e-13, epsrel=1e-12)
    if not np.isfinite(val) or err > 1e-8 * max(1.0, abs(val)):
        raise RuntimeError(f"kernel moment quadrature did not converge (error {err:.2g})")
    return 2 * val


def rate_limits(spec: CointModelSpec, kernel="bartlett") -> RateLimits:
    """Limit constants for the model's kernel-weighted covariance sums.

    ``B_aa = a! G_xx**a int k(u) |u|**(a(2d_x-1)) du`` and
    ``B_ae = a! xi_a Gbar_a int k(u) |u|**(a(d_x+d_eps-1)) du`` where
    ``Gbar_a = (G_+**a + G_-**a) / 2`` averages the two one-sided cross
    constants of ``E[x_t eps_{t+tau}]`` (they differ when ``d_x != d_eps``).
    Orders beyond the residual's top order get ``B_ae = 0``.
    """
    kern = get_kernel(kernel)
    proc = spec.process
    dx, de = float(proc.d_x), float(proc.d_eps)
    K = spec.K
    G_xx = proc.G_xx
    g_plus, g_minus = proc.G_xeps
    B_ab = np.zeros((K, K))
    B_ae = np.zeros(K)
    for a in range(1, K + 1):
        B_ab[a - 1, a - 1] = math.factorial(a) * G_xx**a * _kernel_moment(kern, a * (2 * dx - 1))
        xi_a = spec.residual.coeffs.get(a, 0.0)
        if a <= spec.residual.max_order and xi_a != 0.0:
            gbar = 0.5 * (g_plus**a + g_minus**a)
            B_ae[a - 1] = math.factorial(a) * xi_a * gbar * _kernel_moment(kern, a * (dx + de - 1))
    return RateLimits(B_ab, B_ae, spec.rate_exponents())
