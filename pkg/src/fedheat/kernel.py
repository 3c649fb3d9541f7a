"""Heat-kernel coefficient estimators and the kernelized distances built on them.

Both clustering solvers replace squared Euclidean distance with a bounded
exponential-kernel dissimilarity whose per-sample, per-feature coefficients
are estimated from the data itself.
"""

from __future__ import annotations

import numpy as np

MINMAX = "minmax"
MEANDEV = "meandev"

HKC_TYPES = (MINMAX, MEANDEV)

DEFAULT_HKC_EPS = 1e-12


def _check_finite(view: np.ndarray, name: str = "view") -> np.ndarray:
    arr = np.asarray(view, dtype=float)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D (samples x features), got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must be non-empty, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def hkc_minmax(view: np.ndarray, eps: float = DEFAULT_HKC_EPS) -> np.ndarray:
    """Min-max heat-kernel coefficients, column-wise.

    delta_ij = (x_ij - min_i x_ij) / (max_i x_ij - min_i x_ij + eps)

    The eps in the denominator keeps constant columns at delta = 0 instead
    of dividing by zero. Output is in [0, 1] whenever eps is negligible
    against the column range, and is always >= 0.
    """
    x = _check_finite(view)
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    lo = x.min(axis=0)
    hi = x.max(axis=0)
    return (x - lo) / (hi - lo + eps)


def hkc_meandev(view: np.ndarray) -> np.ndarray:
    """Absolute-deviation heat-kernel coefficients: delta_ij = |x_ij - mean_i x_ij|."""
    x = _check_finite(view)
    return np.abs(x - x.mean(axis=0))


def compute_coeffs(view: np.ndarray, hkc_type: str, eps: float = DEFAULT_HKC_EPS) -> np.ndarray:
    """Dispatch to one of the two coefficient estimators."""
    if hkc_type == MINMAX:
        return hkc_minmax(view, eps)
    if hkc_type == MEANDEV:
        return hkc_meandev(view)
    raise ValueError(f"unknown hkc_type {hkc_type!r}, expected one of {HKC_TYPES}")


def _check_aligned(x, a, delta):
    x = np.asarray(x, dtype=float)
    a = np.asarray(a, dtype=float)
    d = np.asarray(delta, dtype=float)
    if not (x.shape == a.shape == d.shape):
        raise ValueError(f"shape mismatch: x {x.shape}, center {a.shape}, coeffs {d.shape}")
    if np.any(d < 0):
        raise ValueError("coefficients must be non-negative")
    return x, a, d


def ked1(x: np.ndarray, a: np.ndarray, delta_row: np.ndarray) -> float:
    """Kernel similarity exp(-sum_j delta_j (x_j - a_j)^2), in (0, 1]."""
    x, a, d = _check_aligned(x, a, delta_row)
    return float(np.exp(-np.sum(d * (x - a) ** 2)))


def ked2(x: np.ndarray, a: np.ndarray, delta_row: np.ndarray) -> float:
    """Kernel dissimilarity 1 - ked1, in [0, 1). Zero iff the weighted distance is zero."""
    return 1.0 - ked1(x, a, delta_row)


def fked(x: np.ndarray, a: np.ndarray, delta_row: np.ndarray) -> float:
    """Per-client kernel dissimilarity.

    Identical formula to :func:`ked2`; the only difference is provenance:
    the coefficients are estimated from one client's local view, so with a
    single client holding the full dataset the two coincide bit-for-bit.
    """
    return ked2(x, a, delta_row)


def kernel_distance_matrix(view: np.ndarray, centers: np.ndarray, coeffs: np.ndarray) -> np.ndarray:
    """All-pairs kernel dissimilarity between samples and centers in one view.

    Returns an (n, c) matrix with entry (i, k) = ked2(view[i], centers[k], coeffs[i]).
    Vectorized but summation order per entry matches the scalar form (a single
    reduction over features), so results are bitwise reproducible.
    """
    x = np.asarray(view, dtype=float)
    a = np.asarray(centers, dtype=float)
    d = np.asarray(coeffs, dtype=float)
    if x.shape != d.shape:
        raise ValueError(f"view/coeffs shape mismatch: {x.shape} vs {d.shape}")
    if a.ndim != 2 or a.shape[1] != x.shape[1]:
        raise ValueError(f"centers shape {a.shape} incompatible with view shape {x.shape}")
    # (n, c, d_h) weighted squared differences, reduced over the feature axis
    diff = x[:, None, :] - a[None, :, :]
    expo = np.einsum("ij,ikj->ik", d, diff * diff)
    return 1.0 - np.exp(-expo)
