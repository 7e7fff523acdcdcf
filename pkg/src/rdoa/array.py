"""Array manifold: steering vectors, derivatives and beampatterns.

Angles are in radians throughout this module. ULA phases use the
``cos(theta)`` convention, so broadside is ``theta = pi/2`` and the visible
region is ``[0, pi]``.

Phases are referenced to the array centroid (element ``m`` of a ULA gets
``m - (M - 1) / 2``). A common phase cancels in every ``|.|**2`` quantity,
but the centroid reference also makes ``a^H da/dtheta = 0`` hold exactly,
which the beamwidth formulas rely on through ``||da/dtheta||``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

FD_STEP = 1e-6


@dataclass(frozen=True)
class ArrayGeometry:
    """Sensor array described by element positions in wavelengths.

    Use :meth:`ula` for uniform linear arrays; a generic planar array is
    given by its ``(M, 2)`` positions.
    """

    kind: str
    n_elements: int
    spacing: float | None = None
    positions: tuple | None = None

    def __post_init__(self):
        if self.kind not in ("ula", "generic"):
            raise ValueError(f"unknown array kind {self.kind!r}")
        if self.n_elements < 2:
            raise ValueError("an array needs at least 2 elements")
        if self.kind == "ula":
            if self.spacing is None or not self.spacing > 0:
                raise ValueError("ULA spacing must be positive")
        else:
            pos = np.asarray(self.positions, dtype=float)
            if pos.shape != (self.n_elements, 2):
                raise ValueError("positions must have shape (n_elements, 2)")

    @classmethod
    def ula(cls, n_elements, spacing=0.5):
        return cls("ula", int(n_elements), float(spacing))

    @classmethod
    def from_positions(cls, positions):
        pos = np.asarray(positions, dtype=float)
        if pos.ndim == 1:
            pos = np.column_stack([pos, np.zeros_like(pos)])
        return cls("generic", pos.shape[0], None, tuple(map(tuple, pos)))

    @property
    def element_positions(self):
        """``(M, 2)`` element coordinates in wavelengths."""
        if self.kind == "ula":
            x = self.spacing * np.arange(self.n_elements)
            return np.column_stack([x, np.zeros_like(x)])
        return np.asarray(self.positions, dtype=float)

    def to_dict(self):
        if self.kind == "ula":
            return {"kind": "ula", "elements": self.n_elements, "spacing": self.spacing}
        return {"kind": "generic", "positions": [list(p) for p in self.positions]}

    @classmethod
    def from_dict(cls, d):
        kind = d.get("kind", "ula")
        if kind == "ula":
            return cls.ula(d["elements"], d.get("spacing", 0.5))
        return cls.from_positions(d["positions"])


def _phases(geom, theta):
    theta = np.asarray(theta, dtype=float)
    pos = geom.element_positions
    pos = pos - pos.mean(axis=0)
    # (M, ...) phase in radians
    u = np.stack([np.cos(theta), np.sin(theta)])
    return 2 * np.pi * np.tensordot(pos, u, axes=(1, 0))


def steering_vector(geom, theta):
    """Unit-norm array response toward ``theta``.

    Parameters
    ----------
    geom : ArrayGeometry
    theta : float or ndarray
        Direction(s) in radians.

    Returns
    -------
    a : ndarray, shape (M,) or (M, n_theta)
        One column per direction when ``theta`` is an array.
    """
    return np.exp(1j * _phases(geom, theta)) / np.sqrt(geom.n_elements)


def steering_derivative(geom, theta):
    """Derivative of :func:`steering_vector` with respect to ``theta``.

    Analytic for ULAs; central finite difference (step ``FD_STEP``) for
    generic geometries.
    """
    if geom.kind == "ula":
        m = np.arange(geom.n_elements) - (geom.n_elements - 1) / 2
        theta = np.asarray(theta, dtype=float)
        factor = -1j * 2 * np.pi * geom.spacing * np.multiply.outer(m, np.sin(theta))
        return factor * steering_vector(geom, theta)
    return (steering_vector(geom, np.asarray(theta) + FD_STEP)
            - steering_vector(geom, np.asarray(theta) - FD_STEP)) / (2 * FD_STEP)


def beampattern(geom, theta, theta1):
    """Normalized power response ``|a(theta)^H a(theta1)|**2`` in [0, 1]."""
    a = steering_vector(geom, theta)
    a1 = steering_vector(geom, theta1)
    return np.abs(np.tensordot(a1.conj(), a, axes=(0, 0))) ** 2


def ula_beampattern(n_elements, spacing, theta, theta1):
    """Dirichlet-kernel closed form of the ULA beampattern.

    The ``cos(theta) == cos(theta1)`` limit (and its grating-lobe images)
    evaluates to exactly 1.
    """
    delta = np.cos(np.asarray(theta, dtype=float)) - np.cos(theta1)
    x = np.pi * spacing * delta
    den = np.sin(x)
    small = np.abs(den) < 1e-12
    safe = np.where(small, 1.0, den)
    out = np.sin(n_elements * x) ** 2 / (n_elements**2 * safe**2)
    out = np.where(small, 1.0, out)
    return out if out.ndim else float(out)


def fading_sidelobe_directions(n_elements, spacing, theta1, kind="sidelobe",
                               max_order=None):
    """Approximate fading (nulls) or sidelobe directions of a ULA beampattern.

    Solves ``cos(theta) = cos(theta1) +/- (l + zeta) / (M d)`` for
    ``l = 1..max_order`` with ``zeta = 0`` for fadings and ``1/2`` for
    sidelobes. The kernel is periodic in ``cos(theta)`` with period ``1/d``,
    so aliased solutions inside the visible region are kept as well; values
    whose arccos argument leaves [-1, 1] are dropped.

    Returns
    -------
    list of float
        Sorted directions in radians (may be empty).
    """
    if not 0 < theta1 < np.pi:
        raise ValueError("theta1 must lie strictly inside (0, pi)")
    if kind not in ("fading", "sidelobe"):
        raise ValueError("kind must be 'fading' or 'sidelobe'")
    zeta = 0.0 if kind == "fading" else 0.5
    if max_order is None:
        max_order = n_elements - 1
    period = 1.0 / spacing
    n_wrap = int(np.ceil(2 * spacing)) + 1
    c1 = np.cos(theta1)
    found = []
    for ell in range(1, max_order + 1):
        if zeta == 0.0 and ell % n_elements == 0:
            # grating-lobe image of the mainlobe, not a null
            continue
        step = (ell + zeta) / (n_elements * spacing)
        for sign in (1.0, -1.0):
            for k in range(-n_wrap, n_wrap + 1):
                c = c1 + sign * step + k * period
                if -1.0 <= c <= 1.0:
                    found.append(float(np.arccos(c)))
    out = []
    for t in sorted(found):
        if not out or abs(t - out[-1]) > 1e-9:
            out.append(t)
    return out


def first_sidelobe(geom, theta1, method="grid", resolution=1e-4):
    """Locate the sidelobe closest to the mainlobe at ``theta1``.

    Parameters
    ----------
    method : {"grid", "formula"}
        ``"grid"`` searches the local maxima of the beampattern on a fine
        grid and refines the closest one with a bounded scalar search; ``"formula"`` uses
        the ``l = 1`` sidelobe direction of
        :func:`fading_sidelobe_directions` (ULA only).

    Returns
    -------
    theta_sl : float
        Sidelobe direction in radians.
    b_sl : float
        Beampattern value at that direction.
    """
    if method == "formula":
        if geom.kind != "ula":
            raise ValueError("the sidelobe formula applies to ULAs only")
        cands = fading_sidelobe_directions(geom.n_elements, geom.spacing, theta1,
                                           "sidelobe", max_order=1)
        if not cands:
            raise ValueError("no visible first-order sidelobe")
        t = min(cands, key=lambda c: abs(c - theta1))
        return t, float(beampattern(geom, t, theta1))
    if method != "grid":
        raise ValueError(f"unknown method {method!r}")

    grid = np.arange(0.0, np.pi + resolution / 2, resolution)
    b = beampattern(geom, grid, theta1)
    i = np.flatnonzero((b[1:-1] > b[:-2]) & (b[1:-1] > b[2:])) + 1
    # mainlobe and its grating images have b ~ 1
    i = i[b[i] < 1 - 1e-6]
    if i.size == 0:
        raise ValueError("beampattern has no sidelobe in the visible region")
    j = i[np.argmin(np.abs(grid[i] - theta1))]
    # refine the maximum with a bounded scalar search around the grid point
    res = minimize_scalar(lambda t: -float(beampattern(geom, t, theta1)),
                          bounds=(grid[j - 1], grid[j + 1]), method="bounded",
                          options={"xatol": 1e-12})
    return float(res.x), float(-res.fun)
