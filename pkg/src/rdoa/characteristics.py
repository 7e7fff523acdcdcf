"""Beamwidth, sidelobe and multipath characteristics of CB, MVDR and LE.

Analytic values follow from the population spectra written as functions of
the beampattern ``b``; measured values are read off a :class:`Spectrum`.
Beamwidths are one-sided (``|theta_BW - theta_1|``) and in radians unless a
name says otherwise.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .array import fading_sidelobe_directions, steering_derivative

ANALYTIC = ("LE", "CB", "MV")


class HalfPowerUndefined(ValueError):
    """The mainlobe never falls below half of its peak power."""


def _check_bf(beamformer):
    bf = beamformer.upper()
    if bf not in ANALYTIC:
        raise ValueError(f"analytic characteristics exist for {ANALYTIC}, not {beamformer!r}")
    return bf


def steering_derivative_norm(geom, theta1):
    return float(np.linalg.norm(steering_derivative(geom, theta1)))


def hpbw_generic(b_bw, geom, theta1):
    """First-order beamwidth ``sqrt(1 - b_bw) / ||da/dtheta||`` at ``theta1``."""
    if not 0.0 <= b_bw <= 1.0:
        raise ValueError("b_bw must lie in [0, 1]")
    return math.sqrt(1.0 - b_bw) / steering_derivative_norm(geom, theta1)


def half_power_beampattern(beamformer, sigma2):
    """Beampattern level at which the population spectrum halves."""
    bf = _check_bf(beamformer)
    if bf == "LE":
        return math.log(sigma2 / 2 + 1) / math.log(sigma2 + 1)
    if sigma2 < 1.0:
        raise HalfPowerUndefined(
            f"{bf} mainlobe does not drop 3 dB above the noise floor "
            f"for sigma2 = {sigma2:g} < 1")
    if bf == "CB":
        return 0.5 * (1.0 - 1.0 / sigma2)
    return 1.0 - 1.0 / sigma2


def hpbw_analytic(beamformer, sigma2, geom, theta1):
    """One-sided half-power beamwidth (radians) of a population spectrum."""
    return hpbw_generic(half_power_beampattern(beamformer, sigma2), geom, theta1)


def pslr_analytic(beamformer, sigma2, b_sl):
    """Peak-to-sidelobe ratio (linear) for sidelobe beampattern level ``b_sl``."""
    bf = _check_bf(beamformer)
    if bf == "LE":
        return sigma2 / ((sigma2 + 1) ** b_sl - 1)
    if bf == "CB":
        return (sigma2 + 1) / (b_sl * sigma2 + 1)
    return (1 - b_sl) * sigma2 + 1


def multipath_power_estimate(beamformer, sigma1, sigma2, noise_power=1.0):
    """Power read at the source direction when a coherent ray is present.

    Valid when the two directions are well separated (small
    ``|a_1^H a_2|``); ``sigma1`` and ``sigma2`` are linear powers.
    """
    bf = _check_bf(beamformer)
    if noise_power != 1.0:
        raise ValueError("the multipath approximations assume unit noise power")
    if bf == "LE":
        if sigma1 + sigma2 == 0:
            return 0.0
        return (sigma1 + sigma2 + 1) ** (sigma1 / (sigma1 + sigma2)) - 1
    if bf == "MV":
        return (sigma1 + sigma2 + 1) / (sigma2 + 1)
    return sigma1 + 1


# ---------------------------------------------------------------------------
# measurements on a sampled spectrum

def _peak_index(spec, peak_deg):
    i = int(np.argmin(np.abs(spec.theta_deg - peak_deg)))
    p = spec.power
    # climb to the local maximum in case the peak is between grid points
    while 0 < i < p.size - 1 and max(p[i - 1], p[i + 1]) > p[i]:
        i = i - 1 if p[i - 1] > p[i + 1] else i + 1
    return i


def _half_power_side(spec, i0, half, step):
    p, t = spec.power, spec.theta_deg
    thresh = half * (1 - 1e-9)
    i = i0
    while 0 <= i + step < p.size:
        j = i + step
        if p[j] < thresh:
            # linear interpolation of the crossing between i and j
            f = (p[i] - half) / (p[i] - p[j])
            return abs(t[i] + f * (t[j] - t[i]) - t[i0])
        if p[j] > p[i]:
            return None  # spectrum rises again before halving
        i = j
    return None


def measure_hpbw(spec, peak_deg):
    """One-sided half-power beamwidth (radians) measured on ``spec``.

    The crossing of half the peak power is located by linear interpolation
    on each side of the peak and the available sides are averaged.

    Raises
    ------
    HalfPowerUndefined
        If neither side of the mainlobe falls below half power.
    """
    i0 = _peak_index(spec, peak_deg)
    half = 0.5 * spec.power[i0]
    sides = [w for w in (_half_power_side(spec, i0, half, -1),
                         _half_power_side(spec, i0, half, +1)) if w is not None]
    if not sides:
        raise HalfPowerUndefined("no half-power crossing around the peak")
    return math.radians(float(np.mean(sides)))


def _parabolic_max(p, i):
    y0, y1, y2 = p[i - 1], p[i], p[i + 1]
    den = y0 - 2 * y1 + y2
    if den >= 0:
        return y1, 0.0
    off = 0.5 * (y0 - y2) / den
    return y1 - 0.25 * (y0 - y2) * off, off


def _sidelobe_on_side(p, i0, step, start=None):
    """Walk past the mainlobe minimum to the next local maximum."""
    i = i0 if start is None else start
    if start is None:
        while 0 <= i + step < p.size and p[i + step] < p[i]:
            i += step
        if not 0 <= i + step < p.size:
            return None
    while 0 <= i + step < p.size and p[i + step] >= p[i]:
        i += step
    if not 0 < i < p.size - 1 or i == i0:
        return None
    return i


def measure_pslr(spec, peak_deg, geom=None):
    """Peak power over the power of the closest sidelobe (linear ratio).

    The mainlobe ends at the first local minimum on each side; the closest
    local maximum beyond it is the sidelobe. If no minimum is found and a
    ULA ``geom`` is given, the first-order fading directions bound the
    mainlobe instead. Returns ``(ratio, sidelobe_deg)``; the ratio is
    ``inf`` when there is no sidelobe or its power is not positive.
    """
    p, t = spec.power, spec.theta_deg
    i0 = _peak_index(spec, peak_deg)
    cands = []
    for step in (-1, 1):
        j = _sidelobe_on_side(p, i0, step)
        if j is None and geom is not None and geom.kind == "ula":
            fades = fading_sidelobe_directions(
                geom.n_elements, geom.spacing, math.radians(t[i0]), "fading", 1)
            fades = [math.degrees(f) for f in fades
                     if (f - math.radians(t[i0])) * step > 0]
            if fades:
                k = int(np.argmin(np.abs(t - min(fades, key=lambda f: abs(f - t[i0])))))
                j = _sidelobe_on_side(p, i0, step, start=k)
        if j is not None:
            val, off = _parabolic_max(p, j)
            cands.append((abs(t[j] - t[i0]), -val, t[j] + off * (t[j + 1] - t[j]), val))
    if not cands:
        return math.inf, None
    _, _, sl_deg, sl_val = min(cands)
    if not sl_val > 0:
        return math.inf, float(sl_deg)
    return float(p[i0] / sl_val), float(sl_deg)


@dataclass
class CharacteristicsReport:
    beamformer: str
    snr_db: float
    hpbw_analytic: float | None = None
    hpbw_measured: float | None = None
    pslr_analytic: float | None = None
    pslr_measured: float | None = None
    sidelobe_deg: float | None = None
    b_sl: float | None = None
    multipath_power_estimate: float | None = None

    CSV_FIELDS = ("beamformer", "snr_db", "hpbw_analytic_deg", "hpbw_measured_deg",
                  "pslr_analytic_db", "pslr_measured_db", "sidelobe_deg", "b_sl",
                  "multipath_power_estimate")

    def to_dict(self):
        return {k: v for k, v in asdict(self).items()}

    def to_json(self):
        return json.dumps(self.to_dict(), allow_nan=True)

    def csv_row(self):
        def deg(x):
            return None if x is None else math.degrees(x)

        def db(x):
            if x is None:
                return None
            return math.inf if x == math.inf else 10 * math.log10(x)

        return {
            "beamformer": self.beamformer, "snr_db": self.snr_db,
            "hpbw_analytic_deg": deg(self.hpbw_analytic),
            "hpbw_measured_deg": deg(self.hpbw_measured),
            "pslr_analytic_db": db(self.pslr_analytic),
            "pslr_measured_db": db(self.pslr_measured),
            "sidelobe_deg": self.sidelobe_deg, "b_sl": self.b_sl,
            "multipath_power_estimate": self.multipath_power_estimate,
        }
