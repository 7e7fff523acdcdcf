"""Hermitian positive-definite matrices and covariance distances.

Matrix functions are computed from one cached eigendecomposition per
matrix. Eigenvalues at or below ``EIG_FLOOR * lambda_max`` are rejected
with :class:`DegenerateCovariance`; nothing is clipped, so callers that need
regularization must add diagonal loading themselves.

All distances return the distance itself, never its square.
"""

from __future__ import annotations

from functools import cached_property

import numpy as np

EIG_FLOOR = 1e-12


class DegenerateCovariance(ValueError):
    """Raised when a matrix that must be HPD has a non-positive eigenvalue."""

    def __init__(self, message, eigenvalue=None):
        super().__init__(message)
        self.eigenvalue = eigenvalue


class HermitianMatrix:
    """Complex Hermitian matrix with a cached eigendecomposition.

    The input is symmetrized as ``(A + A^H) / 2`` on construction, which
    absorbs round-off from covariance accumulation. Eigenvalues are sorted
    in descending order.
    """

    def __init__(self, matrix):
        A = np.asarray(matrix)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {A.shape}")
        A = A.astype(complex)
        scale = max(np.abs(A).max(), 1e-300)
        if np.abs(A - A.conj().T).max() > 1e-10 * scale:
            raise ValueError("matrix is not Hermitian")
        A = 0.5 * (A + A.conj().T)
        A.setflags(write=False)
        self.matrix = A

    def __repr__(self):
        return f"{type(self).__name__}(M={self.dim})"

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)

    @property
    def dim(self):
        return self.matrix.shape[0]

    @cached_property
    def _eigh(self):
        w, U = np.linalg.eigh(self.matrix)
        if not np.all(np.isfinite(w)):
            raise np.linalg.LinAlgError("eigendecomposition did not converge")
        return w[::-1].copy(), U[:, ::-1].copy()

    @property
    def eigvals(self):
        return self._eigh[0]

    @property
    def eigvecs(self):
        return self._eigh[1]

    def is_positive_definite(self):
        w = self.eigvals
        return bool(w[0] > 0 and w[-1] > EIG_FLOOR * w[0])

    def func(self, f):
        """Apply a scalar function to the spectrum: ``U f(Lambda) U^H``."""
        w, U = self._eigh
        return (U * f(w)) @ U.conj().T


class HpdMatrix(HermitianMatrix):
    """Hermitian positive-definite matrix.

    Raises
    ------
    DegenerateCovariance
        If the smallest eigenvalue does not exceed ``EIG_FLOOR`` times the
        largest one.
    """

    def __init__(self, matrix):
        super().__init__(matrix)
        w = self.eigvals
        if not w[0] > 0:
            raise DegenerateCovariance(
                f"largest eigenvalue {w[0]:.3e} is not positive", w[0])
        if w[-1] <= EIG_FLOOR * w[0]:
            raise DegenerateCovariance(
                f"eigenvalue {w[-1]:.3e} is below the floor "
                f"{EIG_FLOOR:g} * lambda_max = {EIG_FLOOR * w[0]:.3e}", w[-1])

    @cached_property
    def log(self):
        return self.func(np.log)

    @cached_property
    def inv(self):
        return self.func(np.reciprocal)

    @cached_property
    def inv_sqrt(self):
        return self.func(lambda w: 1.0 / np.sqrt(w))

    @cached_property
    def sqrt(self):
        return self.func(np.sqrt)

    @cached_property
    def logdet(self):
        return float(np.sum(np.log(self.eigvals)))


def as_hermitian(A):
    return A if isinstance(A, HermitianMatrix) else HermitianMatrix(A)


def as_hpd(A):
    if isinstance(A, HpdMatrix):
        return A
    if isinstance(A, HermitianMatrix):
        A = A.matrix
    return HpdMatrix(A)


def eig_hermitian(A):
    """Eigenvalues (descending) and orthonormal eigenvectors of ``A``."""
    H = as_hermitian(A)
    return H.eigvals, H.eigvecs


def matrix_log(R):
    return as_hpd(R).log


def inv_sqrt(R):
    return as_hpd(R).inv_sqrt


def inverse(R):
    return as_hpd(R).inv


def _relative_eigvals(A, B):
    """Eigenvalues of ``A^{-1/2} B A^{-1/2}``, descending."""
    S = as_hpd(A).inv_sqrt
    C = S @ np.asarray(B) @ S
    return np.linalg.eigvalsh(0.5 * (C + C.conj().T))[::-1]


def dist_euclidean(A, B):
    """Frobenius norm of ``A - B``."""
    return float(np.linalg.norm(np.asarray(A) - np.asarray(B), "fro"))


def dist_ai(A, B):
    r"""Affine-invariant Riemannian distance.

    .. math::
        d(A, B) = \sqrt{\sum_m \log^2 \lambda_m(A^{-1/2} B A^{-1/2})}
    """
    lam = _relative_eigvals(A, as_hpd(B))
    return float(np.sqrt(np.sum(np.log(lam) ** 2)))


def dist_le(A, B):
    """Log-Euclidean distance ``||log A - log B||_F``."""
    return float(np.linalg.norm(as_hpd(A).log - as_hpd(B).log, "fro"))


def dist_kl(A, B):
    """Kullback-Leibler divergence ``tr(B^-1 A - I) - log det(B^-1 A)``.

    Not symmetric: the order of the arguments matters.
    """
    lam = _relative_eigvals(as_hpd(B), as_hpd(A))
    return float(np.sum(lam - 1.0 - np.log(lam)))


def dist_ld(A, B):
    """Log-determinant (Jensen-Bregman) distance.

    Square root of ``log det((A + B) / 2) - log det(A B) / 2``.
    """
    A, B = as_hpd(A), as_hpd(B)
    mid = HpdMatrix(0.5 * (A.matrix + B.matrix))
    d2 = mid.logdet - 0.5 * (A.logdet + B.logdet)
    # round-off can push d2 of (nearly) equal matrices slightly below zero
    return float(np.sqrt(max(d2, 0.0)))


def dist_truncated(A, B, n_keep):
    """AI distance restricted to the ``n_keep`` largest relative eigenvalues.

    ``B`` may be rank-deficient as long as the retained eigenvalues are
    positive; ``A`` must be HPD.
    """
    A = as_hpd(A)
    if not 1 <= n_keep <= A.dim:
        raise ValueError(f"n_keep must lie in [1, {A.dim}]")
    lam = _relative_eigvals(A, np.asarray(B))
    kept = lam[:n_keep]
    floor = EIG_FLOOR * max(lam[0], 0.0)
    if kept[-1] <= floor:
        raise DegenerateCovariance(
            f"retained eigenvalue {kept[-1]:.3e} is not above the floor", kept[-1])
    return float(np.sqrt(np.sum(np.log(kept) ** 2)))
