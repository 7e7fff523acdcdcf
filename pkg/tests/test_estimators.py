import math

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from rdoa.array import ArrayGeometry
from rdoa.estimators import SpatialSpectrumEstimator
from rdoa.hpd import DegenerateCovariance
from rdoa.simulation import Scenario, Source, simulate_snapshots
from rdoa.validation import (
    check_covariance,
    check_positive,
    check_snapshots,
    check_theta_grid,
)


def blocks(n_blocks=3, K=40, seed=0):
    g = ArrayGeometry.ula(12)
    sc = Scenario(g, [Source(math.radians(70), 10.0, 0), Source(math.radians(120), 10.0, 1)],
                  snapshots=K)
    return np.stack([simulate_snapshots(sc.with_seed(seed + i)).T for i in range(n_blocks)])


def test_get_set_params_and_clone():
    est = SpatialSpectrumEstimator(beamformer="MV", n_sources=2)
    p = est.get_params()
    assert p["beamformer"] == "MV" and p["n_sources"] == 2
    c = clone(est.set_params(spacing=0.4))
    assert c.spacing == 0.4 and not hasattr(c, "spectrum_")


def test_fit_predict_transform_shapes():
    X = blocks()
    est = SpatialSpectrumEstimator(beamformer="LE", n_sources=2).fit(X)
    assert est.n_features_in_ == 12
    assert est.spectrum_.power.shape == (901,)
    assert sorted(est.doa_) == pytest.approx([70, 120], abs=1.0)
    pred = est.predict(X)
    assert pred.shape == (3, 2)
    assert np.allclose(np.sort(pred, axis=1), [70, 120], atol=2.0)
    assert est.transform(X[0]).shape == (1, 901)
    assert est.fit_transform(X).shape == (3, 901)


def test_custom_grid_and_padding():
    X = blocks(1)[0]
    est = SpatialSpectrumEstimator(beamformer="CB", theta_grid=[60, 70, 80], n_sources=3)
    est.fit(X)
    assert est.doa_[0] == pytest.approx(70, abs=5)
    assert np.isnan(est.doa_[1:]).all()


def test_unfitted_and_invalid_inputs():
    est = SpatialSpectrumEstimator()
    with pytest.raises(NotFittedError):
        est.predict(blocks(1))
    with pytest.raises(ValueError):
        SpatialSpectrumEstimator(beamformer="ESPRIT").fit(blocks(1))
    with pytest.raises(ValueError):
        SpatialSpectrumEstimator(n_sources=0).fit(blocks(1))
    est.fit(blocks(1))
    with pytest.raises(ValueError):
        est.predict(np.ones((5, 7)))


def test_mvdr_on_short_block_raises():
    X = blocks(1, K=5)
    with pytest.raises(DegenerateCovariance):
        SpatialSpectrumEstimator(beamformer="MV").fit(X)


def test_check_snapshots():
    assert check_snapshots(np.ones((4, 3))).shape == (1, 4, 3)
    assert check_snapshots(np.ones((2, 4, 3))).dtype == complex
    for bad in (np.ones(3), np.ones((4, 1)), np.array([[1, np.nan], [1, 2]]),
                np.array([["a", "b"]])):
        with pytest.raises(ValueError):
            check_snapshots(bad)
    with pytest.raises(ValueError):
        check_snapshots(np.ones((4, 3)), n_elements=5)


def test_check_covariance_and_grid():
    assert check_covariance(np.eye(3)).dim == 3
    with pytest.raises(DegenerateCovariance):
        check_covariance(np.zeros((3, 3)) + np.diag([1, 0, 0]))
    assert check_covariance(np.diag([1.0, 0.0]), hpd=False).dim == 2
    with pytest.raises(ValueError):
        check_covariance(np.full((2, 2), np.nan))
    assert check_theta_grid(45).tolist() == [45.0]
    for bad in ([10, 5], [-1, 2], [0, 200], [np.nan]):
        with pytest.raises(ValueError):
            check_theta_grid(bad)
    with pytest.raises(ValueError):
        check_positive(-1, "spacing")
