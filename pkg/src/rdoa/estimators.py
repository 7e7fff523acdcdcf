"""scikit-learn style estimator wrapping the spatial-spectrum beamformers.

Rows of ``X`` are array snapshots (one complex sample per element), so a
block of ``K`` snapshots from an ``M``-element ULA is a ``(K, M)`` array.
A stack of independent blocks is ``(n_blocks, K, M)``.

>>> est = SpatialSpectrumEstimator(beamformer="LE", n_sources=1)
>>> doa = est.fit(X).predict(X)          # doctest: +SKIP
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .array import ArrayGeometry
from .beamformers import BEAMFORMERS, PowerGrid, compute_spectrum, find_peaks
from .simulation import sample_covariance
from .validation import check_positive, check_snapshots, check_theta_grid

DEFAULT_THETA = np.round(np.arange(901) * 0.2, 10)


class SpatialSpectrumEstimator(BaseEstimator, TransformerMixin):
    """Spatial power spectrum and DoA estimates from ULA snapshots.

    Parameters
    ----------
    beamformer : str
        One of ``CB, MV, LE, AI, KL1, KL2, LD, AI1, SHRINK``.
    spacing : float
        Element spacing in wavelengths.
    theta_grid : array-like, optional
        Look directions in degrees; 0 to 180 in 0.2 degree steps by default.
    noise_power : float
        Noise power assumed by the offset spectra.
    n_sources : int
        Number of DoAs returned by :meth:`predict`.
    power_grid : PowerGrid, optional
        Power search grid for the AI beamformer.
    shrinkage : str
        Eigenvalue function for ``beamformer="SHRINK"``.

    Attributes
    ----------
    geometry_ : ArrayGeometry
    covariance_ : HermitianMatrix
        Sample covariance of all snapshots seen by :meth:`fit`.
    spectrum_ : Spectrum
    doa_ : ndarray of shape (n_sources,)
        Peak directions of ``spectrum_`` in degrees, strongest first, padded
        with NaN when there are fewer peaks than sources.
    """

    def __init__(self, beamformer="LE", spacing=0.5, theta_grid=None, noise_power=1.0,
                 n_sources=1, power_grid=None, shrinkage="log"):
        self.beamformer = beamformer
        self.spacing = spacing
        self.theta_grid = theta_grid
        self.noise_power = noise_power
        self.n_sources = n_sources
        self.power_grid = power_grid
        self.shrinkage = shrinkage

    def _check_params(self):
        if str(self.beamformer).upper() not in BEAMFORMERS:
            raise ValueError(f"unknown beamformer {self.beamformer!r}")
        check_positive(self.spacing, "spacing")
        check_positive(self.noise_power, "noise_power")
        if int(self.n_sources) < 1:
            raise ValueError("n_sources must be >= 1")
        if self.power_grid is not None and not isinstance(self.power_grid, PowerGrid):
            raise TypeError("power_grid must be a PowerGrid")
        theta = DEFAULT_THETA if self.theta_grid is None else self.theta_grid
        return check_theta_grid(theta)

    def _spectrum(self, block):
        R = sample_covariance(block.T)
        return R, compute_spectrum(R, self.geometry_, self.theta_, self.beamformer,
                                   self.noise_power, self.power_grid, self.shrinkage)

    def _doa(self, spec):
        out = np.full(int(self.n_sources), np.nan)
        peaks = find_peaks(spec, int(self.n_sources))
        out[: len(peaks)] = peaks
        return out

    def fit(self, X, y=None):
        """Estimate the spectrum from all snapshots in ``X`` (blocks pooled)."""
        self.theta_ = self._check_params()
        X = check_snapshots(X)
        self.n_features_in_ = X.shape[2]
        self.geometry_ = ArrayGeometry.ula(self.n_features_in_, self.spacing)
        self.covariance_, self.spectrum_ = self._spectrum(X.reshape(-1, X.shape[2]))
        self.doa_ = self._doa(self.spectrum_)
        return self

    def transform(self, X):
        """Spectrum of each block, shape ``(n_blocks, n_theta)``."""
        check_is_fitted(self, "geometry_")
        X = check_snapshots(X, self.n_features_in_)
        return np.stack([self._spectrum(b)[1].power for b in X])

    def predict(self, X):
        """DoA estimates in degrees per block, shape ``(n_blocks, n_sources)``."""
        check_is_fitted(self, "geometry_")
        X = check_snapshots(X, self.n_features_in_)
        return np.stack([self._doa(self._spectrum(b)[1]) for b in X])
