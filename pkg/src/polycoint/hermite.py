"""Hermite polynomials ``H_k(z; sigma2)`` orthogonal under ``N(0, sigma2)``.

``H_0 = 1``, ``H_1 = z`` and ``H_{j+1} = z H_j - j sigma2 H_{j-1}``, so that
``E[H_p(u) H_q(v)] = p! E(uv)**p`` when ``p == q`` and zero otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

__all__ = [
    "HermiteExpansion",
    "hermite_eval",
    "hermite_monomial_coeffs",
    "monomial_to_hermite",
    "hermite_to_monomial",
    "hermite_rank",
    "memory_of_transform",
    "expected_product",
]

MAX_DEGREE = 20


def hermite_eval(order: int, z, sigma2: float = 1.0):
    """Evaluate ``H_order(z; sigma2)`` by the three-term recurrence."""
    if order < 0:
        raise ValueError("order must be nonnegative")
    z = np.asarray(z, dtype=float)
    prev = np.ones_like(z)
    if order == 0:
        return prev if prev.ndim else float(prev)
    cur = z.copy()
    for j in range(1, order):
        prev, cur = cur, z * cur - j * sigma2 * prev
    return cur if cur.ndim else float(cur)


def hermite_monomial_coeffs(order: int, sigma2: float = 1.0) -> np.ndarray:
    """Monomial coefficients ``c[m]`` of ``H_order(z) = sum_m c[m] z**m``."""
    prev = np.zeros(order + 1)
    prev[0] = 1.0
    if order == 0:
        return prev
    cur = np.zeros(order + 1)
    cur[1] = 1.0
    for j in range(1, order):
        nxt = np.zeros(order + 1)
        nxt[1:] = cur[:-1]
        nxt -= j * sigma2 * prev
        prev, cur = cur, nxt
    return cur


@dataclass(frozen=True)
class HermiteExpansion:
    """A zero-mean function ``g(z) = sum_k b_k H_k(z; sigma2)``, ``k >= 1``.

    Orders with a zero coefficient are dropped; the Hermite rank is the
    smallest stored order.
    """

    sigma2: float
    coeffs: Mapping[int, float]

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise ValueError("sigma2 must be positive")
        clean = {}
        for k, b in self.coeffs.items():
            k = int(k)
            if k < 1:
                raise ValueError("Hermite expansions carry no order-0 term (g must have zero mean)")
            if k > MAX_DEGREE:
                raise ValueError(f"orders above {MAX_DEGREE} are not supported")
            if b != 0:
                clean[k] = float(b)
        if not clean:
            raise ValueError("zero function has no Hermite rank")
        object.__setattr__(self, "coeffs", dict(sorted(clean.items())))

    @property
    def rank(self) -> int:
        return next(iter(self.coeffs))

    @property
    def max_order(self) -> int:
        return next(reversed(self.coeffs))

    def coefficient_vector(self, K: int | None = None) -> np.ndarray:
        """``(b_1, ..., b_K)`` with zeros for absent orders."""
        K = self.max_order if K is None else K
        return np.array([self.coeffs.get(k, 0.0) for k in range(1, K + 1)])

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        out = np.zeros_like(z)
        for k, b in self.coeffs.items():
            out = out + b * hermite_eval(k, z, self.sigma2)
        return out if out.ndim else float(out)

    def variance(self) -> float:
        """``Var g(Z) = sum_k b_k**2 k! sigma2**k``."""
        return sum(b * b * math.factorial(k) * self.sigma2**k for k, b in self.coeffs.items())

    def to_dict(self) -> dict:
        return {"sigma2": self.sigma2, "coeffs": {str(k): b for k, b in self.coeffs.items()}}


def monomial_to_hermite(poly: Mapping[int, float], sigma2: float = 1.0) -> tuple[HermiteExpansion, float]:
    """Rewrite ``sum_k a_k z**k`` in the Hermite basis.

    Returns ``(expansion, constant)`` where ``constant`` is the order-0 Hermite
    coefficient, i.e. ``E[g(Z)]``; it is reported rather than stored so callers
    can enforce a zero mean explicitly.
    """
    if not poly:
        raise ValueError("polynomial must have at least one term")
    degree = max(int(k) for k in poly)
    if degree > MAX_DEGREE:
        raise ValueError(f"degree above {MAX_DEGREE} is not supported")
    a = np.zeros(degree + 1)
    for k, v in poly.items():
        a[int(k)] += v
    if not np.any(a[1:]) and a[0] == 0:
        raise ValueError("zero function has no Hermite rank")
    # columns are the monomial expansions of H_0..H_degree: upper triangular, unit diagonal
    basis = np.zeros((degree + 1, degree + 1))
    for k in range(degree + 1):
        basis[: k + 1, k] = hermite_monomial_coeffs(k, sigma2)
    b = np.zeros(degree + 1)
    for k in range(degree, -1, -1):
        b[k] = a[k] - basis[k, k + 1 :] @ b[k + 1 :]
    coeffs = {k: float(b[k]) for k in range(1, degree + 1) if b[k] != 0}
    if not coeffs:
        raise ValueError("zero function has no Hermite rank")
    return HermiteExpansion(sigma2, coeffs), float(b[0])


def hermite_to_monomial(exp: HermiteExpansion, constant: float = 0.0) -> dict[int, float]:
    """Inverse of :func:`monomial_to_hermite`."""
    a = np.zeros(exp.max_order + 1)
    a[0] = constant
    for k, b in exp.coeffs.items():
        a[: k + 1] += b * hermite_monomial_coeffs(k, exp.sigma2)
    return {k: float(v) for k, v in enumerate(a) if v != 0}


def hermite_rank(exp: HermiteExpansion) -> int:
    return min(k for k, b in exp.coeffs.items() if b != 0)


def memory_of_transform(k: int, d: float) -> float:
    """Memory of ``H_k(z_t)`` for ``z_t ~ I(d)``: ``max(k (d - 1/2) + 1/2, 0)``."""
    return max(k * (d - 0.5) + 0.5, 0.0)


def expected_product(p: int, q: int, cov: float, var_u: float = 1.0, var_v: float = 1.0) -> float:
    """``E[H_p(u; var_u) H_q(v; var_v)]`` for a centred Gaussian pair."""
    if cov * cov > var_u * var_v * (1 + 1e-12):
        raise ValueError("covariance violates the Cauchy-Schwarz bound")
    if p != q:
        return 0.0
    return math.factorial(p) * cov**p
