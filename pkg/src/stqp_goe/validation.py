"""Input validation helpers used across the package."""

import numbers

import numpy as np


def check_finite(x, name="x"):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite, got {x!r}")
    return arr


def check_open_unit(p, name="p"):
    """Reject anything outside the open interval (0, 1)."""
    arr = np.asarray(p, dtype=float)
    if not np.all((arr > 0.0) & (arr < 1.0)):
        raise ValueError(f"{name} must lie in the open interval (0, 1), got {p!r}")
    return arr


def check_int(value, name, minimum=None, maximum=None):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise TypeError(f"{name} must be an integer, got {type(value).__name__}")
    value = int(value)
    if minimum is not None and value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    if maximum is not None and value > maximum:
        raise ValueError(f"{name} must be <= {maximum}, got {value}")
    return value


def check_uint64(value, name):
    return check_int(value, name, minimum=0, maximum=2**64 - 1)


def check_symmetric_matrix(q, tol=1e-12, name="Q"):
    """Return ``q`` as a float array after checking it is square and symmetric.

    Asymmetry up to ``tol`` (relative to the largest entry) is averaged away.
    """
    arr = np.array(q, dtype=float, copy=True)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {arr.shape}")
    if arr.shape[0] == 0:
        raise ValueError(f"{name} must be at least 1x1")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(arr))))
    if np.max(np.abs(arr - arr.T)) > tol * scale:
        raise ValueError(f"{name} is not symmetric to within {tol:g}")
    return 0.5 * (arr + arr.T)


def check_ordered(values, names, strict=False):
    """Check ``values[0] <= values[1] <= ...`` (or strict)."""
    for lo, hi, a, b in zip(values, values[1:], names, names[1:]):
        if (lo >= hi) if strict else (lo > hi):
            op = "<" if strict else "<="
            raise ValueError(f"expected {a} {op} {b}, got {lo!r} and {hi!r}")
