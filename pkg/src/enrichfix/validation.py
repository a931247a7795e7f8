"""Input validation helpers, in the spirit of ``sklearn.utils.validation``."""

from __future__ import annotations

import numbers

import numpy as np
from sklearn.utils.validation import check_array

from .errors import InputError


def as_point(x, dim: int | None = None) -> np.ndarray:
    """Return ``x`` as a finite 1-D float array, optionally of a fixed dimension."""
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.ndim != 1:
        raise InputError(f"expected a single point, got array of shape {arr.shape}")
    if arr.size == 0:
        raise InputError("points need at least one coordinate")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"non-finite coordinate in {arr!r}")
    if dim is not None and arr.size != dim:
        raise InputError(f"expected dimension {dim}, got {arr.size}")
    return arr


def as_points(X, dim: int | None = None) -> np.ndarray:
    """Return ``X`` as a finite ``(n, d)`` float array.

    A 1-D input is read as a single point when ``dim`` matches its length,
    otherwise as ``n`` one-dimensional points.
    """
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(1, -1) if dim is not None and dim == arr.size and dim != 1 else arr.reshape(-1, 1)
    try:
        arr = check_array(arr, ensure_all_finite=True, ensure_min_samples=1)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    if dim is not None and arr.shape[1] != dim:
        raise InputError(f"expected dimension {dim}, got {arr.shape[1]}")
    return arr


def check_scalar_in(name: str, value, low=None, high=None, low_open=False, high_open=False) -> float:
    """Validate a real scalar against an (optionally half-open) interval."""
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        raise InputError(f"{name} must be a real number, got {value!r}")
    value = float(value)
    if not np.isfinite(value):
        raise InputError(f"{name} must be finite, got {value}")
    if low is not None and (value < low or (low_open and value == low)):
        raise InputError(f"{name}={value} below allowed range")
    if high is not None and (value > high or (high_open and value == high)):
        raise InputError(f"{name}={value} above allowed range")
    return value
