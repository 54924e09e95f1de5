"""Sample covariances, lag windows and spectral estimates at frequency zero."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from .hermite import HermiteExpansion

__all__ = [
    "KernelValidationError",
    "LagWindowKernel",
    "builtin_kernels",
    "get_kernel",
    "sample_cross_covariance",
    "sample_covariance_matrices",
    "wce_f0",
    "wce_f0_matrix",
    "weighted_lag_sum",
    "frequency_grid",
    "fractional_spectral_density",
    "k_fold_convolution",
    "transformed_spectrum",
    "grid_integral",
    "read_spectrum_csv",
    "write_spectrum_csv",
]


class KernelValidationError(ValueError):
    pass


@dataclass(frozen=True)
class LagWindowKernel:
    """A lag window ``k`` on ``[-1, 1]``: symmetric, nonnegative, finite, unit integral.

    ``weight`` must accept numpy arrays. The conditions are checked at
    construction; the integral by adaptive quadrature to within ``1e-8``.
    """

    name: str
    weight: Callable[[np.ndarray], np.ndarray]

    def __post_init__(self):
        self.validate()

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        out = np.where(np.abs(u) <= 1.0, self.weight(np.clip(u, -1.0, 1.0)), 0.0)
        return out if out.ndim else float(out)

    def integral(self) -> float:
        f = lambda u: float(self.weight(np.array(u)))
        left = integrate.quad(f, -1.0, 0.0, limit=200, epsabs=1e-12, epsrel=1e-12)[0]
        right = integrate.quad(f, 0.0, 1.0, limit=200, epsabs=1e-12, epsrel=1e-12)[0]
        return left + right

    def validate(self) -> None:
        u = np.linspace(0.0, 1.0, 2001)
        w_pos = np.asarray(self.weight(u), dtype=float)
        w_neg = np.asarray(self.weight(-u), dtype=float)
        if not (np.all(np.isfinite(w_pos)) and np.all(np.isfinite(w_neg))):
            raise KernelValidationError(f"kernel {self.name!r} is not finite on [-1, 1]")
        if np.any(w_pos < 0) or np.any(w_neg < 0):
            raise KernelValidationError(f"kernel {self.name!r} takes negative values")
        if not np.allclose(w_pos, w_neg, rtol=1e-12, atol=1e-14):
            raise KernelValidationError(f"kernel {self.name!r} is not symmetric")
        total = self.integral()
        if abs(total - 1.0) > 1e-8:
            raise KernelValidationError(f"kernel {self.name!r} integrates to {total:.10g} on [-1, 1], not 1")


def _parzen(u):
    a = np.abs(u)
    inner = 1 - 6 * a**2 + 6 * a**3
    outer = 2 * (1 - a) ** 3
    return (4.0 / 3.0) * np.where(a <= 0.5, inner, outer)


_BUILTINS = {
    "rectangular": lambda u: np.full_like(np.asarray(u, dtype=float), 0.5),
    "bartlett": lambda u: 1.0 - np.abs(u),
    "tukey_hanning": lambda u: 0.5 * (1.0 + np.cos(np.pi * np.asarray(u))),
    "parzen": _parzen,
}


def builtin_kernels() -> dict[str, LagWindowKernel]:
    """Lag windows normalised to unit integral on ``[-1, 1]``.

    Parzen is rescaled by 4/3; rectangular is 1/2 on ``[-1, 1]``.
    """
    return {name: LagWindowKernel(name, w) for name, w in _BUILTINS.items()}


_KERNEL_CACHE: dict[str, LagWindowKernel] = {}


def get_kernel(kernel) -> LagWindowKernel:
    if isinstance(kernel, LagWindowKernel):
        return kernel
    name = str(kernel).lower()
    if name not in _BUILTINS:
        raise KeyError(f"unknown kernel {kernel!r}; choose from {sorted(_BUILTINS)}")
    if name not in _KERNEL_CACHE:
        _KERNEL_CACHE[name] = LagWindowKernel(name, _BUILTINS[name])
    return _KERNEL_CACHE[name]


def sample_cross_covariance(a, b, lag: int) -> float:
    """``c_ab(lag)``: ``n^-1 sum_t a_t b_{t+lag}`` (divisor ``n`` for every lag)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("sequences must be 1-d and of equal length")
    n = a.size
    if abs(lag) >= n:
        raise ValueError(f"|lag| must be below n={n}")
    if lag >= 0:
        return float(a[: n - lag] @ b[lag:]) / n
    return float(a[-lag:] @ b[: n + lag]) / n


def sample_covariance_matrices(Z, max_lag: int) -> np.ndarray:
    """``C[tau][i, j] = c_{z_i z_j}(tau)`` for ``tau = 0..max_lag``; rows of ``Z`` are series."""
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    n = Z.shape[1]
    if max_lag >= n:
        raise ValueError(f"max_lag must be below n={n}")
    return np.stack([Z[:, : n - t] @ Z[:, t:].T for t in range(max_lag + 1)]) / n


def _check_bandwidth(M: int, n: int):
    if int(M) != M or M < 1:
        raise ValueError("bandwidth M must be a positive integer")
    if M >= n:
        raise ValueError(f"bandwidth M={M} must be smaller than the sample size n={n} (Assumption C)")


def wce_f0(a, b, kernel, M: int) -> float:
    """Lag-window estimate ``(2 pi)^-1 sum_{|tau| <= M} k(tau/M) c_ab(tau)``.

    Lags are summed in increasing order from ``-M`` to ``M``.
    """
    kernel = get_kernel(kernel)
    a = np.asarray(a, dtype=float)
    _check_bandwidth(M, a.size)
    total = 0.0
    for tau in range(-M, M + 1):
        w = kernel(tau / M)
        if w:
            total += w * sample_cross_covariance(a, b, tau)
    return total / (2 * math.pi)


def wce_f0_matrix(Z, kernel, M: int) -> np.ndarray:
    """All pairwise ``wce_f0`` values for the rows of ``Z`` at once."""
    kernel = get_kernel(kernel)
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    _check_bandwidth(M, Z.shape[1])
    C = sample_covariance_matrices(Z, M)
    w = kernel(np.arange(M + 1) / M)
    f = w[0] * C[0]
    for t in range(1, M + 1):
        if w[t]:
            f = f + w[t] * (C[t] + C[t].T)
    return f / (2 * math.pi)


def weighted_lag_sum(gamma, kernel, M: int) -> float:
    """``sum_{|tau| <= M} k(tau/M) gamma(tau)`` for a callable or symmetric table ``gamma``."""
    kernel = get_kernel(kernel)
    taus = np.arange(-M, M + 1)
    if callable(gamma):
        vals = np.asarray(gamma(taus), dtype=float)
    else:
        g = np.asarray(gamma, dtype=float)
        vals = g[np.abs(taus)]
    return float(np.sum(kernel(taus / M) * vals))


# -- tabulated spectra on [-pi, pi) -----------------------------------------


def frequency_grid(size: int) -> np.ndarray:
    """``-pi + 2 pi j / size`` for ``j = 0..size-1``; index ``size/2`` is frequency zero."""
    if size < 2 or size & (size - 1):
        raise ValueError("grid size must be a power of two")
    return -np.pi + 2 * np.pi * np.arange(size) / size


def grid_integral(f) -> float:
    f = np.asarray(f, dtype=float)
    return float(f.sum() * 2 * np.pi / f.size)


def fractional_spectral_density(d: float, size: int = 2**12, variance: float = 1.0) -> np.ndarray:
    """Cell averages of ``v/(2 pi) |2 sin(lambda/2)|^(-2d)`` on :func:`frequency_grid`.

    Each grid value is the mean of the density over its cell, so the pole at
    zero gets the integral-preserving value and the grid integral equals the
    process variance up to quadrature error.
    """
    lam = frequency_grid(size)
    h = 2 * np.pi / size
    c = variance / (2 * np.pi)
    if d == 0:
        return np.full(size, c)

    f = lambda x: c * abs(2 * math.sin(x / 2)) ** (-2 * d)
    # smooth factor of the density near the pole: f(x) = g(x) |x|^(-2d)
    g = lambda x: c * (abs(2 * math.sin(x / 2)) / abs(x)) ** (-2 * d) if x else c
    out = np.empty(size)
    zero = size // 2
    for j, centre in enumerate(lam):
        lo, hi = centre - h / 2, centre + h / 2
        if j == zero:
            half = integrate.quad(g, 0.0, h / 2, weight="alg", wvar=(-2 * d, 0.0))[0]
            out[j] = 2 * half / h
        elif j == 0:
            # cell straddles -pi/pi; the density is even and 2 pi periodic
            out[j] = 2 * integrate.quad(f, np.pi - h / 2, np.pi)[0] / h
        else:
            out[j] = integrate.quad(f, lo, hi)[0] / h
    return out


def _check_symmetric(f: np.ndarray):
    size = f.size
    if size < 2 or size & (size - 1):
        raise ValueError("grid size must be a power of two")
    mirror = f[(-np.arange(size)) % size]
    if not np.allclose(f, mirror, rtol=1e-10, atol=1e-14):
        raise ValueError("spectral density must be symmetric about frequency zero")


def k_fold_convolution(f, k: int) -> np.ndarray:
    """``f^(*k)``: ``k``-fold periodic convolution of a tabulated density.

    ``(f * g)(lambda) = int f(lambda - w) g(w) dw`` over one period, evaluated on
    the grid by circular convolution with spacing ``2 pi / size``.
    """
    f = np.asarray(f, dtype=float)
    _check_symmetric(f)
    if k < 1:
        raise ValueError("k must be a positive integer")
    if k == 1:
        return f.copy()
    size = f.size
    h = 2 * np.pi / size
    F = np.fft.rfft(f)
    # each extra factor shifts the index origin by size/2 (grid starts at -pi)
    out = np.fft.irfft(F**k, n=size) * h ** (k - 1)
    out = np.roll(out, (k - 1) * (size // 2))
    return 0.5 * (out + out[(-np.arange(size)) % size])


def transformed_spectrum(exp: HermiteExpansion, f) -> np.ndarray:
    """``f_g = sum_k b_k**2 k! f^(*k)`` for ``g = sum_k b_k H_k``."""
    f = np.asarray(f, dtype=float)
    out = np.zeros_like(f)
    for k, b in exp.coeffs.items():
        out += b * b * math.factorial(k) * k_fold_convolution(f, k)
    return out


def write_spectrum_csv(path, frequencies, values) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["frequency", "value"])
        for lam, v in zip(frequencies, values):
            w.writerow([repr(float(lam)), repr(float(v))])


def read_spectrum_csv(path) -> tuple[np.ndarray, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip().lower() for c in rows[0]] != ["frequency", "value"]:
        raise ValueError("spectrum CSV must have header 'frequency,value'")
    data = np.array([[float(a), float(b)] for a, b in rows[1:]])
    return data[:, 0], data[:, 1]
