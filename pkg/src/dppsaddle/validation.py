"""Input validation helpers used at the public API boundary."""
from __future__ import annotations

import numpy as np


def check_points(points) -> np.ndarray:
    """Coerce to an (n, d) float array of point coordinates.

    A 1-D input is treated as n points on the real line.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2:
        raise ValueError(f"points must be an (n, d) array, got shape {pts.shape}")
    if pts.shape[0] < 1 or pts.shape[1] < 1:
        raise ValueError(f"need at least one point and one dimension, got shape {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise ValueError("point coordinates must be finite")
    return pts


def check_spectrum_values(values) -> np.ndarray:
    """Coerce to a 1-D float vector of nonnegative weights."""
    v = np.asarray(values, dtype=float)
    if v.ndim != 1:
        raise ValueError(f"spectrum must be a 1-D vector, got shape {v.shape}")
    if v.size < 1:
        raise ValueError("spectrum must contain at least one value")
    if not np.all(np.isfinite(v)):
        raise ValueError("spectrum values must be finite")
    if np.any(v < 0):
        raise ValueError(f"spectrum values must be nonnegative, min is {v.min()!r}")
    return v


def check_symmetric(matrix, rtol: float = 1e-12) -> np.ndarray:
    """Validate a square, finite, symmetric (within ``rtol``) matrix."""
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"matrix must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix entries must be finite")
    scale = np.abs(m).max()
    if scale > 0 and np.abs(m - m.T).max() > rtol * scale:
        raise ValueError("matrix is not symmetric within tolerance")
    return m


def check_subset(alpha, n: int) -> np.ndarray:
    """Coerce to a sorted array of distinct 0-based item indices in [0, n)."""
    a = np.asarray(alpha, dtype=np.intp).ravel()
    if a.size == 0:
        raise ValueError("subset must contain at least one index")
    if np.any(a < 0) or np.any(a >= n):
        raise ValueError(f"subset indices must lie in [0, {n}), got {a.tolist()}")
    a = np.sort(a)
    if np.any(np.diff(a) == 0):
        raise ValueError(f"subset indices must be distinct, got {a.tolist()}")
    return a


def check_size(k, n: int, *, maximum: int | None = None) -> int:
    """Validate an integer subset size 1 <= k <= maximum (default n)."""
    if maximum is None:
        maximum = n
    ki = int(k)
    if ki != k or ki < 1 or ki > maximum:
        raise ValueError(f"size k must be an integer in [1, {maximum}], got {k!r}")
    return ki


def as_rng(seed_or_rng) -> np.random.Generator:
    """Coerce a seed, SeedSequence, Generator, or None to a Generator."""
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)
