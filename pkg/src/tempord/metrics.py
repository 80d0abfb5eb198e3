"""Per-cell scores: adjusted R-squared and time-series distances.

These are the reference implementations, written for clarity on a single
pair of segments. The engine evaluates the same quantities in a compiled
kernel and is tested against these functions.
"""

from __future__ import annotations

import numpy as np

from tempord.errors import DegenerateX, DegenerateY, LengthMismatch

# a segment whose range is below this fraction of its magnitude counts as constant
FLAT_RTOL = 1e-12


def is_flat(values: np.ndarray) -> bool:
    values = np.asarray(values, dtype=float)
    lo, hi = values.min(), values.max()
    return bool(hi - lo <= FLAT_RTOL * max(abs(lo), abs(hi)))


def _pair(x, y, min_len: int) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise LengthMismatch(f"segments must be 1-D and equally long, got {x.shape} and {y.shape}")
    if x.size < min_len:
        raise LengthMismatch(f"segments need at least {min_len} samples, got {x.size}")
    return x, y


def adjusted_r_squared(x, y) -> float:
    """Adjusted R-squared of the simple regression ``y = a + b*x``.

    Parameters
    ----------
    x, y : array_like
        Equal-length segments with at least three samples.

    Returns
    -------
    float
        ``1 - (1 - R^2) (n - 1) / (n - 2)``, at most 1.

    Raises
    ------
    DegenerateX
        If ``x`` is constant (slope not identifiable).
    DegenerateY
        If ``y`` is constant (total sum of squares is zero).
    """
    x, y = _pair(x, y, 3)
    if is_flat(x):
        raise DegenerateX("regressor segment is constant")
    if is_flat(y):
        raise DegenerateY("response segment is constant")
    n = x.size
    xc = x - x.mean()
    ym = y.mean()
    slope = np.dot(xc, y - ym) / np.dot(xc, xc)
    intercept = ym - slope * x.mean()
    resid = y - (intercept + slope * x)
    sse = np.dot(resid, resid)
    sst = np.dot(y - ym, y - ym)
    r2 = 1.0 - sse / sst
    return float(1.0 - (1.0 - r2) * (n - 1) / (n - 2))


def manhattan_distance(x, y) -> float:
    """Sum of absolute elementwise differences."""
    x, y = _pair(x, y, 1)
    return float(np.abs(x - y).sum())


def fourier_distance(x, y) -> float:
    """Euclidean distance between the non-redundant half spectra.

    Keeps DFT coefficients ``0 .. n // 2`` of each segment (no padding) and
    returns the norm of their complex difference.
    """
    x, y = _pair(x, y, 2)
    diff = np.fft.rfft(x) - np.fft.rfft(y)
    return float(np.sqrt(np.sum(diff.real**2 + diff.imag**2)))


DISTANCES = {
    "manhattan": manhattan_distance,
    "fourier": fourier_distance,
}
