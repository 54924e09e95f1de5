"""Diagrams for moments and cumulants of products of Hermite polynomials.

A diagram of order ``(l_1, ..., l_p)`` pairs up ``l_1 + ... + l_p`` vertexes laid
out in ``p`` rows, never joining two vertexes of the same row. Only the
matrix ``alpha[i, j]`` of edge counts between rows matters for the weight
``prod_{i<j} gamma_ij**alpha_ij``, so diagrams are stored as edge-count
matrices together with the number of labelled matchings sharing them::

    count(alpha) = prod_i l_i! / prod_{i<j} alpha_ij!

``E[prod_j H_{l_j}(z_j)]`` is the count-weighted sum over all diagrams and the
joint cumulant the same sum over connected diagrams.

:func:`oracle_moment` and :func:`oracle_cumulant` compute the same
quantities without diagrams (monomial expansion, Wick pairings including
same-row pairs, and moment-to-cumulant inversion over subsets); they exist to
check the diagram engine.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np

from .hermite import hermite_monomial_coeffs

__all__ = [
    "DiagramOrder",
    "Diagram",
    "EnumerationTooLarge",
    "enumerate_diagrams",
    "is_connected",
    "hermite_moment",
    "hermite_cumulant",
    "oracle_moment",
    "oracle_cumulant",
    "connected_signatures",
    "signature_string",
]

DEFAULT_CAP = 16


class EnumerationTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class DiagramOrder:
    orders: tuple[int, ...]

    def __post_init__(self):
        orders = tuple(int(v) for v in self.orders)
        if len(orders) < 2:
            raise ValueError("a diagram order needs at least two rows")
        if any(v < 1 for v in orders):
            raise ValueError("row orders must be positive integers")
        object.__setattr__(self, "orders", orders)

    @property
    def p(self) -> int:
        return len(self.orders)

    @property
    def total(self) -> int:
        return sum(self.orders)

    def __iter__(self):
        return iter(self.orders)

    def __len__(self):
        return len(self.orders)


def _as_order(order) -> DiagramOrder:
    return order if isinstance(order, DiagramOrder) else DiagramOrder(tuple(order))


@dataclass(frozen=True)
class Diagram:
    """Edge counts ``alpha[i][j]`` (symmetric, zero diagonal) and labelled multiplicity."""

    order: DiagramOrder
    alpha: tuple[tuple[int, ...], ...]
    count: int

    def __post_init__(self):
        p = self.order.p
        a = self.alpha
        if len(a) != p or any(len(r) != p for r in a):
            raise ValueError("alpha must be p x p")
        for i in range(p):
            if a[i][i] != 0:
                raise ValueError("flat edges (within a row) are not allowed")
            if sum(a[i]) != self.order.orders[i]:
                raise ValueError(f"row {i} has degree {sum(a[i])}, expected {self.order.orders[i]}")
            for j in range(p):
                if a[i][j] != a[j][i] or a[i][j] < 0:
                    raise ValueError("alpha must be symmetric and nonnegative")

    @property
    def edges(self) -> dict[tuple[int, int], int]:
        p = self.order.p
        return {(i, j): self.alpha[i][j] for i in range(p) for j in range(i + 1, p) if self.alpha[i][j]}

    @classmethod
    def from_edges(cls, order, edges: dict[tuple[int, int], int]) -> "Diagram":
        order = _as_order(order)
        p = order.p
        a = [[0] * p for _ in range(p)]
        for (i, j), m in edges.items():
            a[i][j] = a[j][i] = int(m)
        return cls(order, tuple(map(tuple, a)), _labelled_count(order.orders, edges))


def _labelled_count(orders: Sequence[int], edges: dict[tuple[int, int], int]) -> int:
    num = math.prod(math.factorial(v) for v in orders)
    den = math.prod(math.factorial(m) for m in edges.values())
    return num // den


def _alpha_matrices(orders: tuple[int, ...]) -> Iterator[dict[tuple[int, int], int]]:
    """Edge-count assignments by lexicographic backtracking over row pairs."""
    p = len(orders)
    pairs = [(i, j) for i in range(p) for j in range(i + 1, p)]
    remaining = list(orders)
    current: dict[tuple[int, int], int] = {}

    def rec(k: int):
        if k == len(pairs):
            if not any(remaining):
                yield dict(current)
            return
        i, j = pairs[k]
        # the last partner of row i must absorb whatever degree row i has left
        last_for_i = j == p - 1
        hi = min(remaining[i], remaining[j])
        lo = remaining[i] if last_for_i else 0
        if lo > hi:
            return
        for m in range(hi, lo - 1, -1):
            remaining[i] -= m
            remaining[j] -= m
            if m:
                current[(i, j)] = m
            yield from rec(k + 1)
            current.pop((i, j), None)
            remaining[i] += m
            remaining[j] += m

    yield from rec(0)


def _check_cap(order: DiagramOrder, cap: int | None):
    cap = DEFAULT_CAP if cap is None else cap
    if order.total > cap:
        raise EnumerationTooLarge(f"enumeration too large: {order.total} vertexes exceed the cap of {cap}")


def enumerate_diagrams(order, cap: int | None = None) -> list[Diagram]:
    """All diagrams of ``order`` grouped by edge-count matrix, in canonical order.

    Odd total order gives an empty list.
    """
    order = _as_order(order)
    _check_cap(order, cap)
    if order.total % 2:
        return []
    return [Diagram.from_edges(order, e) for e in _alpha_matrices(order.orders)]


def is_connected(d: Diagram) -> bool:
    """True iff the row multigraph with an edge wherever ``alpha_ij > 0`` is connected."""
    p = d.order.p
    seen = {0}
    stack = [0]
    while stack:
        i = stack.pop()
        for j in range(p):
            if d.alpha[i][j] and j not in seen:
                seen.add(j)
                stack.append(j)
    return len(seen) == p


def _edges_connected(p: int, edges) -> bool:
    seen = {0}
    stack = [0]
    while stack:
        i = stack.pop()
        for (a, b) in edges:
            j = b if a == i else a if b == i else None
            if j is not None and j not in seen:
                seen.add(j)
                stack.append(j)
    return len(seen) == p


@lru_cache(maxsize=4096)
def _tables(orders: tuple[int, ...], cap: int):
    order = DiagramOrder(orders)
    _check_cap(order, cap)
    p = len(orders)
    iu = np.triu_indices(p, 1)
    col = {(int(i), int(j)): k for k, (i, j) in enumerate(zip(*iu))}
    rows, counts, connected = [], [], []
    if order.total % 2 == 0:
        for edges in _alpha_matrices(orders):
            r = [0] * len(col)
            for e, m in edges.items():
                r[col[e]] = m
            rows.append(r)
            counts.append(float(_labelled_count(orders, edges)))
            connected.append(_edges_connected(p, edges))
    alpha = np.array(rows, dtype=int).reshape(len(rows), len(col))
    return iu, alpha, np.array(counts), np.array(connected, dtype=bool)


def _as_gamma(gamma, p: int) -> np.ndarray:
    g = np.asarray(gamma, dtype=float)
    if g.shape[-2:] != (p, p):
        raise ValueError(f"covariance table must be {p} x {p}")
    if not np.allclose(g, np.swapaxes(g, -1, -2)):
        raise ValueError("covariance table must be symmetric")
    return g


def _diagram_sum(order, gamma, cap, connected_only: bool):
    order = _as_order(order)
    cap = DEFAULT_CAP if cap is None else cap
    _check_cap(order, cap)
    g = _as_gamma(gamma, order.p)
    iu, alpha, counts, connected = _tables(order.orders, cap)
    if connected_only:
        alpha, counts = alpha[connected], counts[connected]
    stacked = g.ndim == 3
    gp = g[..., iu[0], iu[1]]  # (..., n_pairs)
    if alpha.shape[0] == 0:
        return np.zeros(g.shape[0]) if stacked else 0.0
    terms = counts * np.prod(gp[..., None, :] ** alpha, axis=-1)
    if stacked:
        return terms.sum(axis=-1)
    return math.fsum(terms)


def hermite_moment(order, gamma, cap: int | None = None):
    """``E[prod_j H_{l_j}(z_j; gamma_jj)]`` by the diagram formula.

    ``gamma`` is a symmetric ``p x p`` covariance table, or a stack
    ``(T, p, p)`` of them, in which case an array of ``T`` values is returned.
    """
    return _diagram_sum(order, gamma, cap, connected_only=False)


def hermite_cumulant(order, gamma, cap: int | None = None):
    """Joint cumulant ``cum(H_{l_1}(z_1), ..., H_{l_p}(z_p))``: connected diagrams only."""
    return _diagram_sum(order, gamma, cap, connected_only=True)


# -- independent oracle -------------------------------------------------------


class _WickMoments:
    """``E[prod_j z_j**m_j]`` by pairing the first remaining vertex with every other one.

    Same-row pairs are included. Values are arrays over a stack of tables.
    """

    def __init__(self, gamma: np.ndarray):
        self.g = gamma  # (T, p, p)
        self.memo: dict[tuple[int, ...], np.ndarray] = {(0,) * gamma.shape[-1]: np.ones(gamma.shape[0])}

    def __call__(self, m: tuple[int, ...]) -> np.ndarray:
        hit = self.memo.get(m)
        if hit is not None:
            return hit
        if sum(m) % 2:
            val = np.zeros(self.g.shape[0])
        else:
            j = next(i for i, v in enumerate(m) if v)
            base = list(m)
            base[j] -= 1
            val = np.zeros(self.g.shape[0])
            for i, mi in enumerate(base):
                if mi:
                    rest = list(base)
                    rest[i] -= 1
                    val = val + mi * self.g[:, j, i] * self(tuple(rest))
        self.memo[m] = val
        return val


def _expansions(orders: Sequence[int], s2: np.ndarray):
    """Per row, a list of ``(power, coefficient array)`` for ``H_l(z; s2)``."""
    rows = []
    for j, l in enumerate(orders):
        unit = hermite_monomial_coeffs(l, 1.0)
        rows.append([(m, unit[m] * s2[:, j] ** ((l - m) // 2)) for m in range(l + 1) if unit[m] != 0])
    return rows


def _subset_moment(rows, subset: Sequence[int], p: int, wick: _WickMoments, T: int) -> np.ndarray:
    total = np.zeros(T)

    def rec(k: int, powers: list[int], coef: np.ndarray):
        nonlocal total
        if k == len(subset):
            total = total + coef * wick(tuple(powers))
            return
        j = subset[k]
        for m, c in rows[j]:
            powers[j] = m
            rec(k + 1, powers, coef * c)
        powers[j] = 0

    rec(0, [0] * p, np.ones(T))
    return total


def _oracle_setup(order, gamma, cap: int):
    orders = tuple(int(v) for v in order)
    if sum(orders) > cap:
        raise EnumerationTooLarge(f"enumeration too large: {sum(orders)} vertexes exceed the cap of {cap}")
    p = len(orders)
    g = _as_gamma(gamma, p)
    stacked = g.ndim == 3
    g3 = g if stacked else g[None]
    s2 = np.diagonal(g3, axis1=1, axis2=2)
    return orders, p, g3, s2, stacked


def oracle_moment(order, gamma, cap: int = DEFAULT_CAP):
    """Hermite product moment via monomials and Wick pairings (diagram-free)."""
    orders, p, g3, s2, stacked = _oracle_setup(order, gamma, cap)
    wick = _WickMoments(g3)
    rows = _expansions(orders, s2)
    val = _subset_moment(rows, list(range(p)), p, wick, g3.shape[0])
    return val if stacked else float(val[0])


def oracle_cumulant(order, gamma, cap: int = DEFAULT_CAP):
    """Joint cumulant from oracle moments by moment-to-cumulant inversion.

    Uses ``m(S) = sum_{B: min S in B, B subset S} kappa(B) m(S minus B)``,
    equivalent to Moebius inversion over set partitions of the rows.
    """
    orders, p, g3, s2, stacked = _oracle_setup(order, gamma, cap)
    T = g3.shape[0]
    wick = _WickMoments(g3)
    rows = _expansions(orders, s2)
    moments: dict[int, np.ndarray] = {0: np.ones(T)}

    def moment(mask: int) -> np.ndarray:
        if mask not in moments:
            subset = [j for j in range(p) if mask >> j & 1]
            moments[mask] = _subset_moment(rows, subset, p, wick, T)
        return moments[mask]

    kappas: dict[int, np.ndarray] = {}

    def kappa(mask: int) -> np.ndarray:
        if mask in kappas:
            return kappas[mask]
        low = mask & -mask
        rest = mask ^ low
        val = moment(mask).copy()
        # proper sub-blocks B = low | sub, sub a proper submask of rest
        sub = (rest - 1) & rest
        while True:
            if sub != rest:
                block = low | sub
                val -= kappa(block) * moment(mask ^ block)
            if sub == 0:
                break
            sub = (sub - 1) & rest
        kappas[mask] = val
        return val

    val = kappa((1 << p) - 1)
    return val if stacked else float(val[0])


# -- signatures ---------------------------------------------------------------


def _parse_labels(row_labels: Sequence[str] | None, p: int):
    import sympy

    if row_labels is None:
        row_labels = [f"z{i + 1}" for i in range(p)]
    if len(row_labels) != p:
        raise ValueError(f"expected {p} row labels, got {len(row_labels)}")
    parsed = []
    for i, lab in enumerate(row_labels):
        name, _, offset = str(lab).partition("@")
        name = name.strip()
        if not name:
            raise ValueError(f"empty label for row {i + 1}")
        off = sympy.sympify(offset) if offset.strip() else sympy.Symbol(f"t{i + 1}")
        parsed.append((name, off))
    return parsed


def connected_signatures(order, row_labels: Sequence[str] | None = None, cap: int | None = None):
    """Group connected diagrams by their covariance-product pattern.

    Row labels are ``"name"`` or ``"name@offset"`` (e.g. ``"e@r+q"``). A row
    pair ``i < j`` contributes the factor ``gamma_{name_i name_j}(offset_j -
    offset_i)`` raised to ``alpha_ij``; rows without an offset get a distinct
    time symbol ``t<i>``. Returns ``{signature: labelled count}`` where a
    signature is a sorted tuple of ``((name_i, name_j, lag), power)``.
    """
    order = _as_order(order)
    labels = _parse_labels(row_labels, order.p)
    groups: dict[tuple, int] = defaultdict(int)
    for d in enumerate_diagrams(order, cap):
        if not is_connected(d):
            continue
        factors: dict[tuple[str, str, str], int] = defaultdict(int)
        for (i, j), m in d.edges.items():
            lag = str(labels[j][1] - labels[i][1])
            factors[(labels[i][0], labels[j][0], lag)] += m
        groups[tuple(sorted(factors.items()))] += d.count
    return dict(sorted(groups.items()))


def signature_string(signature) -> str:
    parts = []
    for (a, b, lag), power in signature:
        parts.append(f"gamma_{a}{b}({lag})" + (f"^{power}" if power != 1 else ""))
    return " ".join(parts)
