"""Input validation for snapshot blocks, covariances and angle grids.

``sklearn.utils.check_array`` rejects complex input, so these helpers cover
the complex-valued arrays used throughout the package.
"""

from __future__ import annotations

import numpy as np

from .hpd import HermitianMatrix, HpdMatrix, as_hpd


def check_snapshots(X, n_elements=None):
    """Return snapshots as a complex ``(n_blocks, n_snapshots, n_elements)`` array.

    A 2-D input ``(n_snapshots, n_elements)`` is treated as a single block.

    Raises
    ------
    ValueError
        On wrong dimensionality, non-finite entries, fewer than two elements
        or an element count different from ``n_elements``.
    """
    X = np.asarray(X)
    if X.dtype == object or not (np.issubdtype(X.dtype, np.number)):
        raise ValueError("snapshots must be numeric")
    if X.ndim == 2:
        X = X[None]
    if X.ndim != 3:
        raise ValueError(
            f"expected snapshots of shape (n_snapshots, n_elements) or "
            f"(n_blocks, n_snapshots, n_elements), got {X.shape}")
    if X.shape[0] < 1 or X.shape[1] < 1:
        raise ValueError("need at least one block with one snapshot")
    if X.shape[2] < 2:
        raise ValueError("an array needs at least two elements")
    if n_elements is not None and X.shape[2] != n_elements:
        raise ValueError(f"X has {X.shape[2]} elements, expected {n_elements}")
    X = X.astype(complex, copy=False)
    if not np.all(np.isfinite(X)):
        raise ValueError("snapshots contain NaN or inf")
    return X


def check_covariance(R, hpd=True):
    """Validate a covariance matrix and wrap it.

    Returns an :class:`HpdMatrix` when ``hpd`` is true (raising
    ``DegenerateCovariance`` below the eigenvalue floor) and a
    :class:`HermitianMatrix` otherwise.
    """
    if isinstance(R, HermitianMatrix):
        return as_hpd(R) if hpd else R
    R = np.asarray(R)
    if not np.all(np.isfinite(R)):
        raise ValueError("covariance contains NaN or inf")
    return HpdMatrix(R) if hpd else HermitianMatrix(R)


def check_theta_grid(theta_deg):
    """1-D, finite, strictly increasing grid of directions in [0, 180] degrees."""
    t = np.atleast_1d(np.asarray(theta_deg, dtype=float))
    if t.ndim != 1 or t.size == 0:
        raise ValueError("theta grid must be a non-empty 1-D array")
    if not np.all(np.isfinite(t)):
        raise ValueError("theta grid contains NaN or inf")
    if t.min() < 0 or t.max() > 180:
        raise ValueError("theta grid must lie in [0, 180] degrees")
    if t.size > 1 and np.any(np.diff(t) <= 0):
        raise ValueError("theta grid must be strictly increasing")
    return t


def check_positive(x, name):
    x = float(x)
    if not (np.isfinite(x) and x > 0):
        raise ValueError(f"{name} must be a positive finite number, got {x}")
    return x
