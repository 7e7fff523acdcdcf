"""Spatial spectra obtained by covariance fitting.

Every estimator fits the single-source model ``sigma2 * a a^H + noise * I``
to a covariance ``R`` at each look direction and reports the fitted power.
Closed forms exist for the Euclidean (CB, MVDR), Log-Euclidean,
Kullback-Leibler and log-determinant criteria; the affine-invariant fit has
none and is solved by a power-grid search refined with golden-section
steps. :func:`cf_grid_oracle` performs the same search for any distance by
building the model matrices explicitly, which makes it an independent
check of the closed forms.

Steering arguments ``a`` may be a single ``(M,)`` vector or an ``(M, G)``
matrix of columns; the result is then a scalar or a length-``G`` array.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .array import steering_vector
from .hpd import DegenerateCovariance, as_hermitian, as_hpd

DB_FLOOR = -80.0
_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


class BoundaryMinimum(UserWarning):
    """The power search reached an end of its grid."""


@dataclass(frozen=True)
class PowerGrid:
    """Log-spaced search grid for the fitted power.

    The grid runs over the model's signal eigenvalue ``sigma2 + noise``
    (from ``min_db`` to ``max_db``), so candidate powers may fall slightly
    below zero, as the closed-form offset spectra do in noise-only
    directions, while every candidate model stays positive definite.
    """

    min_db: float = -30.0
    max_db: float = 50.0
    points: int = 161
    refine_iters: int = 20

    def __post_init__(self):
        if not self.min_db < self.max_db:
            raise ValueError("min_db must be below max_db")
        if self.points < 2:
            raise ValueError("a power grid needs at least 2 points")

    def log_eigs(self):
        return np.linspace(self.min_db, self.max_db, self.points) * np.log(10) / 10


@dataclass
class Spectrum:
    """Spatial power spectrum on an angle grid (degrees, linear power)."""

    theta_deg: np.ndarray
    power: np.ndarray
    label: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.theta_deg = np.asarray(self.theta_deg, dtype=float)
        self.power = np.asarray(self.power, dtype=float)
        if self.theta_deg.shape != self.power.shape or self.theta_deg.ndim != 1:
            raise ValueError("theta grid and power must be 1-D and of equal length")
        if np.any(np.diff(self.theta_deg) <= 0):
            raise ValueError("theta grid must be strictly increasing")

    def to_db(self, floor=DB_FLOOR):
        """Power in dB; non-positive values map to ``floor``.

        Returns
        -------
        db : ndarray
        floored : ndarray of bool
            True where the linear power was not positive.
        """
        floored = ~(self.power > 0)
        with np.errstate(divide="ignore", invalid="ignore"):
            db = 10 * np.log10(np.where(floored, 1.0, self.power))
        db = np.where(floored, floor, np.maximum(db, floor))
        return db, floored

    def at(self, theta_deg):
        return float(np.interp(theta_deg, self.theta_deg, self.power))


def _quad(A, R):
    """``a^H R a`` for each column of ``A`` (or for a single vector)."""
    A = np.asarray(A)
    q = np.einsum("m...,mn,n...->...", A.conj(), R, A)
    # round-off in the imaginary part scales with ||R|| ||a||^2
    scale = np.abs(R).sum(axis=1).max() * np.sum(np.abs(A) ** 2, axis=0)
    if np.any(np.abs(q.imag) > 1e-10 * np.maximum(scale, 1e-300)):
        raise ValueError("quadratic form has a non-negligible imaginary part")
    q = q.real
    return float(q) if q.ndim == 0 else q


def p_cb(R, a):
    """Conventional (Bartlett) spectrum ``a^H R a``."""
    return _quad(a, as_hermitian(R).matrix)


def p_mv(R, a):
    """MVDR (Capon) spectrum ``1 / (a^H R^-1 a)``.

    Raises :class:`DegenerateCovariance` for singular ``R``; no
    pseudo-inverse is substituted.
    """
    return 1.0 / _quad(a, as_hpd(R).inv)


def p_le(R, a, noise_power=1.0):
    """Log-Euclidean spectrum ``exp(a^H log(R) a) - noise_power``."""
    return np.exp(_quad(a, as_hpd(R).log)) - noise_power


def p_kl1(R, a, noise_power=1.0):
    return p_cb(R, a) - noise_power


def p_kl2(R, a, noise_power=1.0):
    return p_mv(R, a) - noise_power


def p_ld(R, a, noise_power=1.0):
    """Log-determinant spectrum: MVDR on the loaded matrix, offset removed.

    ``1 / (a^H (R + noise I)^-1 a) - 2 noise``; defined for singular ``R``.
    """
    H = as_hermitian(R)
    loaded = as_hpd(H.matrix + noise_power * np.eye(H.dim))
    return 1.0 / _quad(a, loaded.inv) - 2.0 * noise_power


def p_ai_rank1(R, a):
    """Rank-one AI beamformer of earlier work, ``1 / log^2(a^H R^-1 a)``.

    Dimensionless. Returns ``inf`` where ``a^H R^-1 a == 1``.
    """
    q = np.log(_quad(a, as_hpd(R).inv)) ** 2
    with np.errstate(divide="ignore"):
        out = np.where(q == 0, np.inf, 1.0 / np.where(q == 0, 1.0, q))
    return float(out) if np.ndim(out) == 0 else out


# eigenvalue transforms g and their inverses
SHRINKAGE = {
    "identity": (lambda lam, s: lam, lambda x, s: x),
    "neg_reciprocal": (lambda lam, s: -1.0 / lam, lambda x, s: -1.0 / x),
    "log": (lambda lam, s: np.log(lam), lambda x, s: np.exp(x)),
    "ld_reciprocal": (lambda lam, s: -1.0 / (lam + s), lambda x, s: -1.0 / x - s),
}


def generic_shrinkage_spectrum(R, a, g="identity", noise_power=1.0):
    """``g^-1( sum_m |a^H u_m|^2 g(lambda_m) )`` over the eigenpairs of ``R``.

    ``g`` is one of ``"identity"`` (CB), ``"neg_reciprocal"`` (MVDR),
    ``"log"`` (LE without its offset) and ``"ld_reciprocal"`` (LD without
    its offset; uses ``noise_power``).
    """
    try:
        fwd, inv = SHRINKAGE[g]
    except KeyError:
        raise ValueError(f"unknown eigenvalue transform {g!r}") from None
    H = as_hermitian(R) if g == "identity" else as_hpd(R)
    w = np.abs(np.tensordot(H.eigvecs.conj(), np.asarray(a), axes=(0, 0))) ** 2
    gl = fwd(H.eigvals, noise_power)
    x = np.tensordot(gl, w, axes=(0, 0))
    out = inv(x, noise_power)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# search-based fitting

def _golden(f, lo, hi, iters, tol=0.0):
    """Golden-section minimization of ``f`` on ``[lo, hi]``."""
    c = hi - _GOLDEN * (hi - lo)
    d = lo + _GOLDEN * (hi - lo)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if hi - lo <= tol:
            break
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - _GOLDEN * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _GOLDEN * (hi - lo)
            fd = f(d)
    return (c, fc) if fc < fd else (d, fd)


def _fit_power(batch_objective, grid, iters, tol=0.0):
    """Minimize an objective over log-eigenvalue ``x = log(sigma2 + noise)``.

    ``batch_objective`` maps an array of ``x`` to objective values. Returns
    ``(x_best, f_best, at_boundary)``; the result never exceeds the best
    grid value.
    """
    xs = grid.log_eigs()
    fs = batch_objective(xs)
    i = int(np.nanargmin(fs))
    x_best, f_best = xs[i], fs[i]
    boundary = i == 0 or i == len(xs) - 1
    if iters > 0:
        lo = xs[max(i - 1, 0)]
        hi = xs[min(i + 1, len(xs) - 1)]
        xg, fg = _golden(lambda x: float(batch_objective(np.array([x]))[0]),
                         lo, hi, iters, tol)
        if fg < f_best:
            x_best, f_best = xg, fg
    return x_best, f_best, boundary


def _ai_objective(R, a, noise_power):
    """Squared AI distance between ``R`` and the model, as a function of x.

    Works in the eigenbasis of ``R``, where the whitened model is the
    diagonal ``noise / lambda`` plus the rank-one term ``sigma2 z z^H``.
    """
    w, U = R.eigvals, R.eigvecs
    z = (U.conj().T @ a) / np.sqrt(w)
    base = np.diag(noise_power / w).astype(complex)
    zz = np.outer(z, z.conj())

    def objective(xs):
        s2 = np.exp(xs) - noise_power
        stack = base[None] + s2[:, None, None] * zz[None]
        lam = np.linalg.eigvalsh(stack)
        return np.sum(np.log(lam) ** 2, axis=-1)

    return objective


def p_ai(R, a, grid=None, noise_power=1.0, return_info=False):
    """Affine-invariant covariance-fitting spectrum (numeric search).

    Searches the power on ``grid`` and refines it with ``grid.refine_iters``
    golden-section steps. A :class:`BoundaryMinimum` warning is issued when
    the best grid point is an end point.

    With ``return_info=True`` also returns a boolean (array) marking the
    look directions whose search hit a grid boundary.
    """
    grid = grid or PowerGrid()
    R = as_hpd(R)
    A = np.asarray(a)
    single = A.ndim == 1
    A = A[:, None] if single else A
    out = np.empty(A.shape[1])
    hit = np.zeros(A.shape[1], dtype=bool)
    for g in range(A.shape[1]):
        obj = _ai_objective(R, A[:, g], noise_power)
        x, _, hit[g] = _fit_power(obj, grid, grid.refine_iters)
        out[g] = np.exp(x) - noise_power
    if hit.any() and not return_info:
        warnings.warn(f"power search hit the grid boundary at {int(hit.sum())} "
                      "direction(s)", BoundaryMinimum, stacklevel=2)
    if single:
        out, hit = float(out[0]), bool(hit[0])
    return (out, hit) if return_info else out


def _model_stack(a, s2, noise_power):
    M = a.shape[0]
    return (s2[:, None, None] * np.outer(a, a.conj())[None]
            + noise_power * np.eye(M)[None])


def _batched_logm(S):
    w, U = np.linalg.eigh(S)
    return (U * np.log(w)[:, None, :]) @ np.swapaxes(U.conj(), -1, -2)


def _logdet(S):
    sign, ld = np.linalg.slogdet(S)
    return ld


DISTANCES = ("euclidean", "euclidean_inverse", "le", "ai", "kl1", "kl2", "ld")


def _oracle_objective(R, a, distance, noise_power):
    Rm = R.matrix
    M = R.dim
    if distance == "euclidean":
        def f(s2):
            D = Rm[None] - _model_stack(a, s2, noise_power)
            return np.sum(np.abs(D) ** 2, axis=(-2, -1))
    elif distance == "euclidean_inverse":
        Ri = as_hpd(R).inv

        def f(s2):
            D = Ri[None] - np.linalg.inv(_model_stack(a, s2, noise_power))
            return np.sum(np.abs(D) ** 2, axis=(-2, -1))
    elif distance == "le":
        L = as_hpd(R).log

        def f(s2):
            D = L[None] - _batched_logm(_model_stack(a, s2, noise_power))
            return np.sum(np.abs(D) ** 2, axis=(-2, -1))
    elif distance == "ai":
        S = as_hpd(R).inv_sqrt

        def f(s2):
            C = S[None] @ _model_stack(a, s2, noise_power) @ S[None]
            return np.sum(np.log(np.linalg.eigvalsh(C)) ** 2, axis=-1)
    elif distance in ("kl1", "kl2"):
        ldR = as_hpd(R).logdet

        def f(s2):
            Mod = _model_stack(a, s2, noise_power)
            if distance == "kl1":
                # d(R, model) = tr(model^-1 R) - M - log det(model^-1 R)
                T = np.trace(np.linalg.solve(Mod, np.broadcast_to(Rm, Mod.shape)),
                             axis1=-2, axis2=-1).real
                return T - M - (ldR - _logdet(Mod))
            # d(model, R) = tr(R^-1 model) - M - log det(R^-1 model)
            T = np.trace(np.linalg.solve(np.broadcast_to(Rm, Mod.shape), Mod),
                         axis1=-2, axis2=-1).real
            return T - M - (_logdet(Mod) - ldR)
    elif distance == "ld":
        ldR = as_hpd(R).logdet

        def f(s2):
            Mod = _model_stack(a, s2, noise_power)
            return _logdet(0.5 * (Rm[None] + Mod)) - 0.5 * (ldR + _logdet(Mod))
    else:
        raise ValueError(f"unknown distance {distance!r}; expected one of {DISTANCES}")
    return lambda xs: f(np.exp(xs) - noise_power)


def cf_grid_oracle(R, a, distance, grid=None, noise_power=1.0, tol=1e-12,
                   max_iters=200):
    """Fitted power minimizing ``distance(R, model)`` by brute-force search.

    Model matrices are built explicitly for every candidate power, so the
    result does not rely on any closed-form spectrum. The grid minimum is
    refined by golden-section steps until the bracket in log-eigenvalue is
    narrower than ``tol``.

    Parameters
    ----------
    distance : str
        One of ``"euclidean"``, ``"euclidean_inverse"``, ``"le"``, ``"ai"``,
        ``"kl1"`` (``d_KL(R, model)``), ``"kl2"`` (``d_KL(model, R)``) or
        ``"ld"``.
    """
    grid = grid or PowerGrid()
    R = as_hpd(R)
    a = np.asarray(a)
    obj = _oracle_objective(R, a, distance, noise_power)
    x, _, boundary = _fit_power(obj, grid, max_iters, tol)
    if boundary:
        warnings.warn("oracle search hit the grid boundary", BoundaryMinimum,
                      stacklevel=2)
    return float(np.exp(x) - noise_power)


# ---------------------------------------------------------------------------
# spectra over an angle grid

BEAMFORMERS = ("CB", "MV", "LE", "AI", "KL1", "KL2", "LD", "AI1", "SHRINK")


def compute_spectrum(R, geom, theta_deg, beamformer, noise_power=1.0,
                     power_grid=None, shrinkage="log"):
    """Evaluate one beamformer over a grid of look directions (degrees).

    Matrix functions of ``R`` are computed once and shared by all angles.
    """
    bf = beamformer.upper()
    theta_deg = np.asarray(theta_deg, dtype=float)
    A = steering_vector(geom, np.radians(theta_deg))
    meta = {"noise_power": noise_power}
    if bf == "CB":
        p = p_cb(R, A)
    elif bf == "MV":
        p = p_mv(R, A)
    elif bf == "LE":
        p = p_le(R, A, noise_power)
    elif bf == "AI":
        p, hit = p_ai(R, A, power_grid, noise_power, return_info=True)
        meta["boundary"] = hit
        if hit.any():
            warnings.warn(f"AI power search hit the grid boundary at "
                          f"{int(hit.sum())} direction(s)", BoundaryMinimum,
                          stacklevel=2)
    elif bf == "KL1":
        p = p_kl1(R, A, noise_power)
    elif bf == "KL2":
        p = p_kl2(R, A, noise_power)
    elif bf == "LD":
        p = p_ld(R, A, noise_power)
    elif bf == "AI1":
        p = p_ai_rank1(R, A)
    elif bf == "SHRINK":
        p = generic_shrinkage_spectrum(R, A, shrinkage, noise_power)
        meta["shrinkage"] = shrinkage
    else:
        raise ValueError(f"unknown beamformer {beamformer!r}; expected one of {BEAMFORMERS}")
    return Spectrum(theta_deg, np.atleast_1d(p), bf, meta)


def find_peaks(spec, n):
    """Directions (degrees) of the ``n`` strongest strict local maxima.

    Each peak location is refined by 3-point parabolic interpolation. Fewer
    than ``n`` directions are returned when the spectrum has fewer peaks.
    """
    p, t = spec.power, spec.theta_deg
    if p.size < 3 or n < 1:
        return []
    idx = np.flatnonzero((p[1:-1] > p[:-2]) & (p[1:-1] > p[2:])) + 1
    idx = idx[np.argsort(-p[idx], kind="stable")][:n]
    out = []
    for i in idx:
        y0, y1, y2 = p[i - 1], p[i], p[i + 1]
        den = y0 - 2 * y1 + y2
        off = 0.5 * (y0 - y2) / den if den != 0 else 0.0
        # non-uniform grids: interpolate within the local step
        step = t[i + 1] - t[i] if off > 0 else t[i] - t[i - 1]
        out.append(float(t[i] + off * step))
    return out


__all__ = [
    "BoundaryMinimum", "DegenerateCovariance", "PowerGrid", "Spectrum",
    "p_cb", "p_mv", "p_le", "p_ai", "p_kl1", "p_kl2", "p_ld", "p_ai_rank1",
    "generic_shrinkage_spectrum", "cf_grid_oracle", "compute_spectrum",
    "find_peaks", "BEAMFORMERS", "DISTANCES",
]
