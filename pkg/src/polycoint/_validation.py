"""Input checks shared by the functional API and the estimators."""

from __future__ import annotations

import numpy as np


def as_series(values, name: str = "series", min_length: int = 1) -> np.ndarray:
    """Return ``values`` as a finite 1-d float array.

    A single-column 2-d input is flattened, as sklearn's ``X`` usually is.
    """
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr[:, 0]
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size < min_length:
        raise ValueError(f"{name} needs at least {min_length} observations, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or infinite values")
    return arr


def as_pair(y, x, min_length: int = 1) -> tuple[np.ndarray, np.ndarray]:
    y = as_series(y, "y", min_length)
    x = as_series(x, "x", min_length)
    if y.size != x.size:
        raise ValueError(f"y and x differ in length ({y.size} != {x.size})")
    return y, x


def positive_int(value, name: str) -> int:
    if isinstance(value, bool) or int(value) != value or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return int(value)


def bandwidth_from_rule(n: int, exponent: float) -> int:
    """``M = floor(n ** exponent)`` with ``exponent`` in ``(0, 1)``."""
    if not 0 < exponent < 1:
        raise ValueError("bandwidth exponent must lie in (0, 1)")
    M = int(np.floor(n**exponent + 1e-9))
    return max(M, 1)
