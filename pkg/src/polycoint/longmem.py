"""Jointly Gaussian long-memory pairs built from fractional moving averages.

The pair ``(x_t, eps_t)`` is generated as

    x_t   = sum_{j < N} psi_j(d_x)   eta_{t-j}
    eps_t = sum_{j < N} psi_j(d_eps) zeta_{t-j}

with ``(eta_t, zeta_t)`` i.i.d. bivariate Gaussian with correlation ``rho``
and ``psi_j(d)`` the fractional integration weights. Auto-covariances decay
like ``tau**(2d - 1)`` and the cross-covariance like ``tau**(d_x + d_eps - 1)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import signal, special

__all__ = [
    "MemoryParam",
    "BivariateProcessSpec",
    "SamplePath",
    "ma_weights",
    "autocovariance",
    "truncated_autocovariance",
    "cross_covariance",
    "cross_covariance_exact",
    "asymptotic_constant",
    "cross_asymptotic_constants",
    "process_variance",
    "make_rng",
    "simulate",
]

DEFAULT_TRUNCATION = 2**17


class MemoryParam(float):
    """A memory exponent ``d`` restricted to the stationary range ``[0, 1/2)``."""

    def __new__(cls, d):
        d = float(d)
        if not (0.0 <= d < 0.5):
            raise ValueError(f"memory parameter must lie in [0, 0.5), got {d!r}")
        return super().__new__(cls, d)


@dataclass(frozen=True)
class BivariateProcessSpec:
    d_x: float
    d_eps: float
    rho: float = 0.0
    ma_truncation: int = DEFAULT_TRUNCATION
    innovation_variance: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "d_x", MemoryParam(self.d_x))
        object.__setattr__(self, "d_eps", MemoryParam(self.d_eps))
        if not (-1.0 <= self.rho <= 1.0):
            raise ValueError(f"rho must lie in [-1, 1], got {self.rho!r}")
        if int(self.ma_truncation) != self.ma_truncation or self.ma_truncation < 1:
            raise ValueError("ma_truncation must be a positive integer")
        object.__setattr__(self, "ma_truncation", int(self.ma_truncation))
        if not self.innovation_variance > 0:
            raise ValueError("innovation_variance must be positive")

    @property
    def G_xx(self) -> float:
        return asymptotic_constant(self.d_x, self.innovation_variance)

    @property
    def G_epseps(self) -> float:
        return asymptotic_constant(self.d_eps, self.innovation_variance)

    @property
    def G_xeps(self) -> tuple[float, float]:
        """Cross constants for ``tau -> +inf`` and ``tau -> -inf``."""
        return cross_asymptotic_constants(self)

    @property
    def var_x(self) -> float:
        """Exact variance of the simulated (truncated) ``x`` process."""
        return process_variance(self.d_x, self.ma_truncation, self.innovation_variance)

    @property
    def var_eps(self) -> float:
        return process_variance(self.d_eps, self.ma_truncation, self.innovation_variance)

    def to_dict(self) -> dict:
        return {
            "d_x": float(self.d_x),
            "d_eps": float(self.d_eps),
            "rho": float(self.rho),
            "ma_truncation": self.ma_truncation,
            "innovation_variance": float(self.innovation_variance),
        }


@dataclass(frozen=True)
class SamplePath:
    x: np.ndarray
    eps: np.ndarray
    seed: int | tuple
    spec: BivariateProcessSpec = field(repr=False)

    def __post_init__(self):
        if self.x.shape != self.eps.shape or self.x.ndim != 1 or self.x.size < 1:
            raise ValueError("x and eps must be 1-d arrays of identical length")

    @property
    def n(self) -> int:
        return self.x.size


def ma_weights(d: float, count: int) -> np.ndarray:
    """Fractional integration weights ``psi_0, ..., psi_{count-1}``.

    ``psi_0 = 1`` and ``psi_j = psi_{j-1} (j - 1 + d) / j``.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    j = np.arange(1, count, dtype=float)
    psi = np.empty(count)
    psi[0] = 1.0
    psi[1:] = np.cumprod((j - 1.0 + d) / j)
    return psi


def autocovariance(d: float, lag, variance: float = 1.0):
    """Closed-form autocovariance of fractionally integrated noise.

    ``gamma(tau) = v G(1-2d) G(tau+d) / (G(d) G(1-d) G(tau+1-d))``, symmetric in
    ``tau``; white noise for ``d == 0``. Accepts scalar or array lags.
    """
    d = float(MemoryParam(d))
    tau = np.abs(np.asarray(lag, dtype=float))
    if d == 0.0:
        out = np.where(tau == 0, float(variance), 0.0)
    else:
        logs = (
            special.gammaln(1 - 2 * d)
            + special.gammaln(tau + d)
            - special.gammaln(d)
            - special.gammaln(1 - d)
            - special.gammaln(tau + 1 - d)
        )
        out = variance * np.exp(logs)
    return out if out.ndim else float(out)


def _lagged_products(a: np.ndarray, b: np.ndarray, max_lag: int) -> np.ndarray:
    """``sum_j a_j b_{j+tau}`` for ``tau = 0..max_lag`` (finite sequences)."""
    corr = signal.correlate(b, a, mode="full", method="fft")
    mid = a.size - 1
    return corr[mid : mid + max_lag + 1]


def truncated_autocovariance(d: float, lags, truncation: int = DEFAULT_TRUNCATION, variance: float = 1.0):
    """Exact autocovariance of the truncated moving average used by :func:`simulate`."""
    lags = np.abs(np.atleast_1d(np.asarray(lags, dtype=int)))
    psi = ma_weights(d, truncation)
    top = min(int(lags.max()), truncation - 1)
    vals = np.zeros(int(lags.max()) + 1)
    if top < 256:
        vals[: top + 1] = [psi[: truncation - t] @ psi[t:] for t in range(top + 1)]
    else:
        vals[: top + 1] = _lagged_products(psi, psi, top)
    return variance * vals[lags]


def cross_covariance(spec: BivariateProcessSpec, lag):
    """``E[x_t eps_{t+lag}]`` of the simulated (truncated) pair.

    For ``lag >= 0`` this is ``rho sum_j psi_j(d_x) psi_{j+lag}(d_eps)``; for negative
    lags the roles of the two weight sequences swap.
    """
    lags = np.atleast_1d(np.asarray(lag, dtype=int))
    scalar = np.ndim(lag) == 0
    if spec.rho == 0.0:
        out = np.zeros(lags.shape)
        return float(out[0]) if scalar else out
    N = spec.ma_truncation
    px = ma_weights(spec.d_x, N)
    pe = ma_weights(spec.d_eps, N)
    out = np.empty(lags.shape, dtype=float)
    for i, t in enumerate(lags):
        t = int(t)
        if abs(t) >= N:
            out[i] = 0.0
        elif t >= 0:
            out[i] = px[: N - t] @ pe[t:]
        else:
            out[i] = pe[: N + t] @ px[-t:]
    out *= spec.rho * spec.innovation_variance
    return float(out[0]) if scalar else out


def _rising_over_gamma(a: float, s: np.ndarray, b: float) -> np.ndarray:
    """``G(s + a) / (G(a) G(s + 1 - b))`` with the ``a == 0`` limit ``[s == 0] / G(1 - b)``."""
    if a == 0:
        return np.where(s == 0, 1.0 / special.gamma(1 - b), 0.0)
    return np.exp(special.gammaln(s + a) - special.gammaln(a) - special.gammaln(s + 1 - b))


def cross_covariance_exact(d_x: float, d_eps: float, lag, rho: float = 1.0, variance: float = 1.0):
    """Untruncated cross-covariance ``E[x_t eps_{t+lag}]`` in closed form.

    For ``lag >= 0``:
    ``rho v G(1-d_x-d_eps) G(lag+d_eps) / (G(1-d_eps) G(d_eps) G(lag+1-d_x))``,
    and the two exponents swap for negative lags.
    """
    tau = np.asarray(lag, dtype=float)
    s = np.abs(tau)
    c = special.gamma(1 - d_x - d_eps)
    pos = c / special.gamma(1 - d_eps) * _rising_over_gamma(d_eps, s, d_x)
    neg = c / special.gamma(1 - d_x) * _rising_over_gamma(d_x, s, d_eps)
    out = rho * variance * np.where(tau >= 0, pos, neg)
    return out if out.ndim else float(out)


def asymptotic_constant(d: float, variance: float = 1.0) -> float:
    """``G`` in ``gamma(tau) ~ G tau**(2d-1)``; zero for white noise."""
    if d == 0:
        return 0.0
    return float(variance * special.gamma(1 - 2 * d) / (special.gamma(d) * special.gamma(1 - d)))


def cross_asymptotic_constants(spec: BivariateProcessSpec) -> tuple[float, float]:
    """``(G_plus, G_minus)``: ``E[x_t eps_{t+tau}] ~ G_pm |tau|**(d_x+d_eps-1)``."""
    dx, de = float(spec.d_x), float(spec.d_eps)
    scale = spec.rho * spec.innovation_variance

    def side(d_lead):
        if d_lead == 0:
            return 0.0
        return float(special.gamma(1 - dx - de) / (special.gamma(1 - d_lead) * special.gamma(d_lead)))

    return scale * side(de), scale * side(dx)


def process_variance(d: float, truncation: int = DEFAULT_TRUNCATION, variance: float = 1.0) -> float:
    """Variance ``v sum_{j<N} psi_j**2`` of the truncated moving average."""
    psi = ma_weights(d, truncation)
    return float(variance * (psi @ psi))


def make_rng(*key: int) -> np.random.Generator:
    """Counter-based generator keyed by an integer tuple, e.g. ``(seed, n, r)``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(k) for k in key])))


def _filter(psi: np.ndarray, innov: np.ndarray, n: int) -> np.ndarray:
    if psi.size == 1 or np.all(psi[1:] == 0):  # white noise: exact copy
        return innov[-n:].copy()
    return signal.fftconvolve(innov, psi, mode="valid")[-n:]


def simulate(spec: BivariateProcessSpec, n: int, seed) -> SamplePath:
    """Draw a sample path of length ``n``.

    ``seed`` is an integer or a tuple of integers (used as the generator key).
    Regenerating with the same ``(spec, n, seed)`` is bit-identical.
    """
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    n = int(n)
    key = tuple(seed) if isinstance(seed, (tuple, list)) else (seed,)
    rng = make_rng(*key)
    N = spec.ma_truncation
    # burn-in of N draws ahead of the n retained ones
    total = n + N
    eta = rng.standard_normal(total)
    xi = rng.standard_normal(total)
    rho = float(spec.rho)
    zeta = rho * eta + np.sqrt(1.0 - rho * rho) * xi
    sd = np.sqrt(spec.innovation_variance)
    if sd != 1.0:
        eta = sd * eta
        zeta = sd * zeta
    psi_x = np.array([1.0]) if spec.d_x == 0 else ma_weights(spec.d_x, N)
    psi_e = np.array([1.0]) if spec.d_eps == 0 else ma_weights(spec.d_eps, N)
    x = _filter(psi_x, eta, n)
    eps = _filter(psi_e, zeta, n)
    return SamplePath(x=x, eps=eps, seed=seed, spec=spec)
