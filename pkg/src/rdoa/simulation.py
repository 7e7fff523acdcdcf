"""Scenario description, snapshot synthesis and covariance construction.

Random numbers come from numpy's counter-based Philox bit generator seeded
with the 64-bit scenario seed, so a given seed reproduces bit-identical
snapshots on every platform. Monte Carlo trial ``i`` uses ``seed + i``.

Sources sharing a ``group`` id are fully coherent: the group carries one
unit-power waveform and member ``i`` contributes ``rho_i * sigma_i * a_i``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from .array import ArrayGeometry, steering_vector
from .hpd import HermitianMatrix, HpdMatrix

SIGNAL_MODELS = ("constant_modulus", "complex_gaussian")


def db_to_linear(x):
    return 10.0 ** (np.asarray(x, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(x)


def make_rng(seed):
    return np.random.Generator(np.random.Philox(int(seed) % 2**64))


@dataclass(frozen=True)
class Source:
    """Far-field narrowband source.

    ``theta`` is in radians and ``power`` is linear. ``phasor`` is the
    unit-magnitude phase offset within the coherence group.
    """

    theta: float
    power: float
    group: int
    phasor: complex = 1.0 + 0.0j

    def __post_init__(self):
        if not self.power > 0:
            raise ValueError("source power must be positive")
        if abs(abs(self.phasor) - 1.0) > 1e-12:
            raise ValueError("phasor must have unit magnitude")


@dataclass(frozen=True)
class Scenario:
    geometry: ArrayGeometry
    sources: tuple = ()
    noise_power: float = 1.0
    snapshots: int = 20
    seed: int = 0
    signal_model: str = "constant_modulus"

    def __post_init__(self):
        object.__setattr__(self, "sources", tuple(self.sources))
        if self.snapshots < 1:
            raise ValueError("snapshots must be >= 1")
        if not self.noise_power > 0:
            raise ValueError("noise power must be positive")
        if self.signal_model not in SIGNAL_MODELS:
            raise ValueError(f"signal_model must be one of {SIGNAL_MODELS}")

    def with_seed(self, seed):
        return replace(self, seed=int(seed))

    def groups(self):
        """Map each coherence group id to its combined spatial signature.

        The signature is ``sum_i rho_i sigma_i a_i`` over the group members,
        in order of first appearance.
        """
        out = {}
        for s in self.sources:
            v = s.phasor * np.sqrt(s.power) * steering_vector(self.geometry, s.theta)
            out[s.group] = out.get(s.group, 0) + v
        return out

    # external representation: degrees and dB
    def to_dict(self):
        return {
            "array": self.geometry.to_dict(),
            "sources": [
                {
                    "direction_deg": float(np.degrees(s.theta)),
                    "power_db": float(linear_to_db(s.power)),
                    "group": s.group,
                    "phase_deg": float(np.degrees(np.angle(s.phasor))),
                }
                for s in self.sources
            ],
            "noise_power_db": float(linear_to_db(self.noise_power)),
            "snapshots": self.snapshots,
            "seed": self.seed,
            "signal_model": self.signal_model,
        }

    @classmethod
    def from_dict(cls, d):
        geom = ArrayGeometry.from_dict(d["array"])
        sources = []
        for i, s in enumerate(d.get("sources", [])):
            sources.append(Source(
                theta=float(np.radians(s["direction_deg"])),
                power=float(db_to_linear(s["power_db"])),
                group=int(s.get("group", i)),
                phasor=complex(np.exp(1j * np.radians(s.get("phase_deg", 0.0)))),
            ))
        return cls(
            geometry=geom,
            sources=sources,
            noise_power=float(db_to_linear(d.get("noise_power_db", 0.0))),
            snapshots=int(d.get("snapshots", 20)),
            seed=int(d.get("seed", 0)),
            signal_model=d.get("signal_model", "constant_modulus"),
        )

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def _waveforms(rng, n_groups, n_snapshots, model):
    if model == "constant_modulus":
        phi = rng.uniform(0.0, 2 * np.pi, size=(n_groups, n_snapshots))
        return np.exp(1j * phi)
    re = rng.normal(0.0, np.sqrt(0.5), size=(n_groups, n_snapshots))
    im = rng.normal(0.0, np.sqrt(0.5), size=(n_groups, n_snapshots))
    return re + 1j * im


def simulate_snapshots(scenario):
    """Draw an ``(M, K)`` snapshot matrix for ``scenario``.

    Each coherence group gets one unit-power waveform (constant modulus with
    uniform phase, or circular complex Gaussian); the noise is circular
    complex Gaussian with covariance ``noise_power * I``.
    """
    rng = make_rng(scenario.seed)
    M, K = scenario.geometry.n_elements, scenario.snapshots
    sig = scenario.groups()
    Y = np.zeros((M, K), dtype=complex)
    if sig:
        A = np.column_stack(list(sig.values()))
        X = _waveforms(rng, A.shape[1], K, scenario.signal_model)
        Y += A @ X
    std = np.sqrt(scenario.noise_power / 2)
    Y += rng.normal(0.0, std, size=(M, K)) + 1j * rng.normal(0.0, std, size=(M, K))
    return Y


def sample_covariance(Y):
    """``Y Y^H / K`` for an ``(M, K)`` snapshot matrix.

    Returns an :class:`HpdMatrix` when the estimate is full rank and a plain
    :class:`HermitianMatrix` otherwise (e.g. ``K < M``).
    """
    Y = np.asarray(Y)
    if Y.ndim == 1:
        Y = Y[:, None]
    R = Y @ Y.conj().T / Y.shape[1]
    H = HermitianMatrix(R)
    return HpdMatrix(H.matrix) if H.is_positive_definite() else H


def population_covariance(scenario):
    """Expected sample covariance of ``scenario``."""
    M = scenario.geometry.n_elements
    R = scenario.noise_power * np.eye(M, dtype=complex)
    for v in scenario.groups().values():
        R = R + np.outer(v, v.conj())
    return HpdMatrix(R)


def model_covariance(geom, theta, power, noise_power=1.0):
    """Single-source model ``power * a a^H + noise_power * I``."""
    a = steering_vector(geom, theta)
    return HpdMatrix(power * np.outer(a, a.conj())
                     + noise_power * np.eye(geom.n_elements))
