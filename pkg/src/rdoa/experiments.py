"""Experiment harness: spectra, percentile sleeves, RMSE sweeps, sweeps of
spatial characteristics and the multipath power grid.

Configs are JSON documents (angles in degrees, powers in dB); see
``README.md`` for the schema and ``rdoa/configs`` for the shipped
scenarios. Monte Carlo trial ``i`` is simulated with seed ``seed + i`` and
results are assembled in trial order, so outputs do not depend on the
number of worker processes (capped by ``RDOA_THREADS``).
"""

from __future__ import annotations

import copy
import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from functools import partial
from importlib import resources

import numpy as np
from scipy.optimize import linear_sum_assignment

from .array import ArrayGeometry, first_sidelobe
from .beamformers import PowerGrid, Spectrum, compute_spectrum, find_peaks
from .characteristics import (
    ANALYTIC,
    CharacteristicsReport,
    HalfPowerUndefined,
    hpbw_analytic,
    measure_hpbw,
    measure_pslr,
    multipath_power_estimate,
    pslr_analytic,
)
from .hpd import DegenerateCovariance
from .simulation import (
    Scenario,
    db_to_linear,
    model_covariance,
    population_covariance,
    sample_covariance,
    simulate_snapshots,
)

KINDS = ("spectrum", "sleeve", "rmse_sweep", "characteristics_sweep", "multipath_grid")


class ConfigError(ValueError):
    pass


def theta_grid(start=0.0, stop=180.0, step=0.2):
    if not step > 0:
        raise ConfigError("theta grid step must be positive")
    if stop < start:
        raise ConfigError("theta grid stop must not precede start")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return np.round(start + step * np.arange(n), 10)


def _range(spec):
    """Values of a ``{"start", "stop", "step"}`` or ``{"values"}`` block."""
    if "values" in spec:
        vals = np.asarray(spec["values"], dtype=float)
    else:
        vals = theta_grid(spec["start"], spec["stop"], spec["step"])
    if vals.size == 0:
        raise ConfigError("swept range is empty")
    return vals


@dataclass
class ExperimentConfig:
    kind: str
    scenario: dict
    beamformers: list = field(default_factory=lambda: ["LE", "MV", "CB"])
    theta: dict = field(default_factory=lambda: {"start": 0.0, "stop": 180.0, "step": 0.2})
    trials: int = 1
    seed: int = 0
    population: bool = False
    output: str | None = None
    sweep: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}; expected one of {KINDS}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        theta_grid(**self.theta)
        if self.kind in ("rmse_sweep", "characteristics_sweep"):
            _range(self.sweep)
        if self.kind == "multipath_grid":
            _range(self.sweep["sigma1_db"])
            _range(self.sweep["sigma2_db"])

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d.pop("description", None)
        d.pop("notes", None)
        if "experiment" in d:
            d["kind"] = d.pop("experiment")
        if "theta_grid" in d:
            d["theta"] = d.pop("theta_grid")
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self):
        return asdict(self)

    def thetas(self):
        return theta_grid(**self.theta)

    def build_scenario(self, seed=None, power_offset_db=0.0):
        sc = copy.deepcopy(self.scenario)
        sc["seed"] = self.seed if seed is None else seed
        for s in sc.get("sources", []):
            s["power_db"] = s["power_db"] + power_offset_db
        return Scenario.from_dict(sc)

    def power_grid(self):
        return PowerGrid(**self.options.get("power_grid", {}))


def load_config(path_or_name):
    """Load a config from a file path or the name of a shipped config."""
    if os.path.exists(path_or_name):
        with open(path_or_name) as fh:
            return ExperimentConfig.from_dict(json.load(fh))
    name = path_or_name if path_or_name.endswith(".json") else path_or_name + ".json"
    pkg = resources.files("rdoa") / "configs" / name
    if not pkg.is_file():
        raise FileNotFoundError(f"no config file or shipped config named {path_or_name!r}")
    return ExperimentConfig.from_dict(json.loads(pkg.read_text()))


def shipped_configs():
    root = resources.files("rdoa") / "configs"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def _workers():
    """Worker count: ``RDOA_THREADS`` if set, else the CPU count."""
    cap = os.environ.get("RDOA_THREADS", "").strip()
    if cap:
        try:
            return max(1, int(cap))
        except ValueError:
            raise ConfigError(f"RDOA_THREADS must be an integer, got {cap!r}") from None
    return os.cpu_count() or 1


def _map_trials(fn, n_trials):
    """Run ``fn(i)`` for every trial index, returning results in order."""
    n = min(_workers(), n_trials)
    if n <= 1:
        return [fn(i) for i in range(n_trials)]
    with ProcessPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, range(n_trials), chunksize=max(1, n_trials // (4 * n))))


def _covariance(scenario, population):
    if population:
        return population_covariance(scenario)
    return sample_covariance(simulate_snapshots(scenario))


def _spectra(R, scenario, thetas, beamformers, grid):
    out = []
    for bf in beamformers:
        try:
            out.append(compute_spectrum(R, scenario.geometry, thetas, bf,
                                        scenario.noise_power, grid))
        except DegenerateCovariance as exc:
            out.append(Spectrum(thetas, np.full(thetas.shape, np.nan), bf.upper(),
                                {"error": str(exc)}))
    return out


# ---------------------------------------------------------------------------
# spectrum and sleeve

def run_spectrum(config, population=None):
    """Spectra of one covariance (sample or population) for every beamformer."""
    population = config.population if population is None else population
    sc = config.build_scenario()
    R = _covariance(sc, population)
    return _spectra(R, sc, config.thetas(), config.beamformers, config.power_grid())


def _sleeve_trial(config, population, i):
    sc = config.build_scenario(seed=config.seed + i)
    R = _covariance(sc, population)
    return np.stack([s.power for s in _spectra(R, sc, config.thetas(),
                                               config.beamformers, config.power_grid())])


def run_sleeve(config, population=None):
    """5th/50th/95th percentiles of each spectrum over independent trials.

    Returns a dict ``beamformer -> (p5, p50, p95)`` of arrays on the theta
    grid.
    """
    population = config.population if population is None else population
    stacks = np.stack(_map_trials(partial(_sleeve_trial, config, population),
                                  config.trials))
    out = {}
    for k, bf in enumerate(config.beamformers):
        vals = stacks[:, k, :]
        if np.all(np.isnan(vals)):
            pct = np.full((3, vals.shape[1]), np.nan)
        else:
            pct = np.nanpercentile(vals, [5, 50, 95], axis=0)
        out[bf.upper()] = tuple(pct)
    return out


# ---------------------------------------------------------------------------
# RMSE sweep

@dataclass
class RmseResult:
    swept_snr_db: float
    beamformer: str
    source_index: int
    source_snr_db: float
    rmse_deg: float
    trials: int
    valid_trials: int


def associate(estimates, truths, rule="nearest", powers=None):
    """Pair estimates with sources; returns one estimate per source.

    ``"nearest"`` minimizes the total squared angular error over one-to-one
    assignments; ``"power"`` pairs the strongest peak with the strongest
    source and so on (estimates must be ordered by peak power).
    """
    truths = np.asarray(truths, dtype=float)
    est = list(estimates)
    if not est:
        return np.full(truths.shape, np.nan)
    while len(est) < truths.size:
        est.append(est[0])
    est = np.asarray(est, dtype=float)
    if rule == "power":
        order = np.argsort(-np.asarray(powers), kind="stable")
        out = np.empty(truths.size)
        out[order] = est[: truths.size]
        return out
    if rule != "nearest":
        raise ConfigError(f"unknown association rule {rule!r}")
    cost = (est[:, None] - truths[None, :]) ** 2
    rows, cols = linear_sum_assignment(cost)
    out = np.empty(truths.size)
    out[cols] = est[rows]
    return out


def _rmse_trial(config, offsets, i):
    """Squared errors, shape (n_offsets, n_beamformers, n_sources)."""
    thetas = config.thetas()
    rule = config.options.get("association", "nearest")
    errs = []
    for off in offsets:
        sc = config.build_scenario(seed=config.seed + i, power_offset_db=off)
        truths = [math.degrees(s.theta) for s in sc.sources]
        powers = [s.power for s in sc.sources]
        R = _covariance(sc, config.population)
        row = []
        for spec in _spectra(R, sc, thetas, config.beamformers, config.power_grid()):
            if np.any(np.isnan(spec.power)):
                row.append(np.full(len(truths), np.nan))
                continue
            peaks = find_peaks(spec, len(truths))
            if not peaks:
                peaks = [float(thetas[int(np.argmax(spec.power))])]
            est = associate(peaks, truths, rule, powers)
            row.append((est - np.asarray(truths)) ** 2)
        errs.append(row)
    return np.asarray(errs)


def run_rmse_sweep(config):
    """DoA RMSE (degrees) per swept SNR, beamformer and source.

    Source ``power_db`` values in the scenario are offsets added to each
    swept SNR value.
    """
    offsets = _range(config.sweep)
    sq = np.stack(_map_trials(partial(_rmse_trial, config, offsets), config.trials))
    results = []
    base = config.build_scenario()
    for v, off in enumerate(offsets):
        for b, bf in enumerate(config.beamformers):
            for s, src in enumerate(base.sources):
                e = sq[:, v, b, s]
                ok = ~np.isnan(e)
                rmse = float(np.sqrt(e[ok].mean())) if ok.any() else float("nan")
                results.append(RmseResult(
                    swept_snr_db=float(off), beamformer=bf.upper(), source_index=s,
                    source_snr_db=float(off + 10 * math.log10(src.power)),
                    rmse_deg=rmse, trials=config.trials, valid_trials=int(ok.sum())))
    return results


# ---------------------------------------------------------------------------
# characteristics and multipath

def run_characteristics_sweep(config):
    """Analytic and measured HPBW/PSLR of the population spectra per SNR."""
    geom = ArrayGeometry.from_dict(config.scenario["array"])
    theta1 = math.radians(config.options.get("theta1_deg", 90.0))
    method = config.options.get("sidelobe_method", "grid")
    theta_sl, b_sl = first_sidelobe(geom, theta1, method)
    thetas = config.thetas()
    reports = []
    for snr in _range(config.sweep):
        s2 = float(db_to_linear(snr))
        R = model_covariance(geom, theta1, s2, 1.0)
        for bf in config.beamformers:
            bf = bf.upper()
            if bf not in ANALYTIC:
                raise ConfigError(f"characteristics are defined for {ANALYTIC} only")
            rep = CharacteristicsReport(bf, float(snr), b_sl=b_sl)
            spec = compute_spectrum(R, geom, thetas, bf)
            try:
                rep.hpbw_analytic = hpbw_analytic(bf, s2, geom, theta1)
            except HalfPowerUndefined:
                pass
            try:
                rep.hpbw_measured = measure_hpbw(spec, math.degrees(theta1))
            except HalfPowerUndefined:
                pass
            rep.pslr_analytic = pslr_analytic(bf, s2, b_sl)
            rep.pslr_measured, rep.sidelobe_deg = measure_pslr(
                spec, math.degrees(theta1), geom)
            reports.append(rep)
    return reports


def run_multipath_grid(config):
    """Approximate (and optionally exact) source-direction power under multipath."""
    rows = []
    exact = config.options.get("exact")
    if exact:
        geom = ArrayGeometry.from_dict(config.scenario["array"])
    for s1_db in _range(config.sweep["sigma1_db"]):
        for s2_db in _range(config.sweep["sigma2_db"]):
            s1, s2 = float(db_to_linear(s1_db)), float(db_to_linear(s2_db))
            row = {"sigma1_db": float(s1_db), "sigma2_db": float(s2_db)}
            for bf in ("LE", "MV", "CB"):
                row[f"{bf.lower()}_db"] = 10 * math.log10(multipath_power_estimate(bf, s1, s2))
            if exact:
                sc = Scenario.from_dict({
                    "array": geom.to_dict(),
                    "sources": [
                        {"direction_deg": exact["theta1_deg"], "power_db": s1_db, "group": 0},
                        {"direction_deg": exact["theta2_deg"], "power_db": s2_db, "group": 0,
                         "phase_deg": exact.get("phase_deg", 0.0)},
                    ],
                })
                R = population_covariance(sc)
                for bf in ("LE", "MV", "CB"):
                    p = compute_spectrum(R, geom, [exact["theta1_deg"]], bf).power[0]
                    row[f"{bf.lower()}_exact_db"] = 10 * math.log10(p)
                    row[f"{bf.lower()}_error_db"] = row[f"{bf.lower()}_db"] - row[f"{bf.lower()}_exact_db"]
            rows.append(row)
    return rows


# ---------------------------------------------------------------------------
# serialization

def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".12g")
    return str(x)


def _jsonable(x):
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(x, (np.integer,)):
        return int(x)
    return x


def rows_to_text(rows, fields, fmt="csv"):
    if fmt == "json":
        clean = [{k: _jsonable(r.get(k)) for k in fields} for r in rows]
        return json.dumps(clean, indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(fields)
    for r in rows:
        w.writerow([_fmt(r.get(k)) for k in fields])
    return buf.getvalue()


SPECTRUM_FIELDS = ("theta_deg", "power_linear", "power_db", "beamformer")
SLEEVE_FIELDS = ("theta_deg", "beamformer", "p5_linear", "p50_linear", "p95_linear",
                 "p5_db", "p50_db", "p95_db")
RMSE_FIELDS = tuple(RmseResult.__dataclass_fields__)
MULTIPATH_FIELDS = ("sigma1_db", "sigma2_db", "le_db", "mv_db", "cb_db",
                    "le_exact_db", "mv_exact_db", "cb_exact_db",
                    "le_error_db", "mv_error_db", "cb_error_db")


def spectrum_rows(spectra):
    rows = []
    for s in spectra:
        db, _ = s.to_db()
        for t, p, d in zip(s.theta_deg, s.power, db):
            rows.append({"theta_deg": t, "power_linear": p,
                         "power_db": None if np.isnan(p) else d, "beamformer": s.label})
    return rows


def sleeve_rows(sleeves, thetas):
    rows = []
    for bf, bands in sleeves.items():
        dbs = [Spectrum(thetas, np.nan_to_num(b, nan=-1.0), bf).to_db()[0] for b in bands]
        for i, t in enumerate(thetas):
            r = {"theta_deg": t, "beamformer": bf}
            for name, band, d in zip(("p5", "p50", "p95"), bands, dbs):
                r[f"{name}_linear"] = band[i]
                r[f"{name}_db"] = None if np.isnan(band[i]) else d[i]
            rows.append(r)
    return rows


def run_experiment(config, population=None, fmt="csv"):
    """Run ``config`` and return ``(default_filename, text)``."""
    kind = config.kind
    if kind == "spectrum":
        text = rows_to_text(spectrum_rows(run_spectrum(config, population)),
                            SPECTRUM_FIELDS, fmt)
    elif kind == "sleeve":
        text = rows_to_text(sleeve_rows(run_sleeve(config, population), config.thetas()),
                            SLEEVE_FIELDS, fmt)
    elif kind == "rmse_sweep":
        if population is not None:
            config = replace(config, population=population)
        text = rows_to_text([asdict(r) for r in run_rmse_sweep(config)], RMSE_FIELDS, fmt)
    elif kind == "characteristics_sweep":
        text = rows_to_text([r.csv_row() for r in run_characteristics_sweep(config)],
                            CharacteristicsReport.CSV_FIELDS, fmt)
    else:
        text = rows_to_text(run_multipath_grid(config), MULTIPATH_FIELDS, fmt)
    name = config.output or f"{kind}.{fmt}"
    root, ext = os.path.splitext(name)
    return (root + "." + fmt if ext else name + "." + fmt), text
