"""Proximal operators and penalty terms shared by both solvers.

All functions are pure and operate on dense float arrays.
"""

import numpy as np

from .errors import NumericalError

# Singular values at or below this size after shrinkage are snapped to exact
# zero so that rank computations on thresholded matrices are stable.
SINGULAR_VALUE_FLOOR = 1e-12


def soft_threshold(m, tau):
    """Elementwise soft threshold: sign(m) * max(|m| - tau, 0)."""
    if tau < 0:
        raise ValueError(f"threshold must be nonnegative, got {tau}")
    m = np.asarray(m, dtype=float)
    return np.sign(m) * np.maximum(np.abs(m) - tau, 0.0)


def svt(m, tau):
    """Singular value thresholding: shrink every singular value of m by tau.

    This is the proximal operator of tau * (nuclear norm): with
    m = U diag(s) V', returns U diag(max(s - tau, 0)) V'.
    """
    if tau < 0:
        raise ValueError(f"threshold must be nonnegative, got {tau}")
    m = np.asarray(m, dtype=float)
    if not np.all(np.isfinite(m)):
        raise NumericalError("svt input contains non-finite entries")
    try:
        u, s, vt = np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD did not converge: {exc}") from exc
    s = np.maximum(s - tau, 0.0)
    s[s <= SINGULAR_VALUE_FLOOR] = 0.0
    return (u * s) @ vt


def nuclear_norm(m):
    """Sum of singular values of m."""
    m = np.asarray(m, dtype=float)
    if not np.all(np.isfinite(m)):
        raise NumericalError("nuclear_norm input contains non-finite entries")
    return float(np.linalg.svd(m, compute_uv=False).sum())


def l1_norm(m):
    """Sum of absolute values of all entries of m."""
    return float(np.abs(np.asarray(m, dtype=float)).sum())
