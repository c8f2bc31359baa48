"""Seeded ensembles of noisy waveguides over (L, delta_w, gamma) grids."""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import NamedTuple

import numpy as np

from . import __version__
from .dispersion import assign_qpm_period, load_presets, provider_from_spec
from .errors import ConfigError, FabTolError
from .metrics import (
    SqueezingInputs,
    bcf,
    eta_norm,
    gaussian_fwhm,
    max_efficiency,
    n_bins,
    squeezing_db,
)
from .noise import NoiseSpec, check_profile_window, generate_profile, split_seed
from .phasematch import auto_scan, integrate_spectrum, scan_from_dict

logger = logging.getLogger(__name__)

METRICS = ("max_efficiency", "eta_norm", "squeezing_db", "fwhm_nm", "n_bins", "bcf")
CSV_HEADER = ["L_mm", "delta_w_um", "gamma", "seed", "metric_name", "value", "mean", "min", "max"]

_APPLICATION_DEFAULTS = {
    "p_in_w": 0.5,
    "alpha_db_per_cm": 0.1,
    "eta_ideal_per_w_cm2": 0.49,
    "band_nm": 40.0,
    "nu_in_ghz": 963.0,
    "bcf_center_nm": None,
}
_REQUIRED = ("process", "w0_um")
DEFAULT_L_MM = [10.0, 20.0, 30.0, 40.0, 50.0, 60.0]
DEFAULT_DELTA_W_UM = [round(0.05 * i, 2) for i in range(11)]


class CellKey(NamedTuple):
    L_mm: float
    delta_w_um: float
    gamma: float
    w0_um: float


@dataclass
class ExperimentConfig:
    process: str
    w0_um: float
    L_mm: list = field(default_factory=lambda: list(DEFAULT_L_MM))
    delta_w_um: list = field(default_factory=lambda: list(DEFAULT_DELTA_W_UM))
    gamma: list = field(default_factory=lambda: [1.0])
    provider: str = "surrogate:ti-ln"
    realizations: int = 40
    master_seed: int = 0
    dz_um: float = 50.0
    scan: dict | None = None
    scan_points: int = 501
    scan_zeros: float = 6.0
    metrics: list = field(default_factory=lambda: ["max_efficiency"])
    application: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data):
        """Validate a plain mapping (e.g. parsed JSON) into a config.

        Raises :class:`ConfigError` naming every offending key.
        """
        if not isinstance(data, dict):
            raise ConfigError("experiment config must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        problems = {}
        for key in data:
            if key not in known:
                problems[key] = "unknown key"
        for key in _REQUIRED:
            if key not in data:
                problems[key] = "missing required key"
        for key in ("L_mm", "delta_w_um", "gamma"):
            if key in data:
                value = data[key]
                if isinstance(value, (int, float)) and not isinstance(value, bool):
                    value = [value]
                if (not isinstance(value, list) or not value
                        or not all(_is_number(v) for v in value)):
                    problems[key] = "expected a non-empty list of numbers"
        for key in ("w0_um", "dz_um", "scan_zeros"):
            if key in data and not (_is_number(data[key]) and data[key] > 0):
                problems[key] = "expected a positive number"
        for key in ("realizations", "scan_points"):
            if key in data and not (isinstance(data[key], int) and data[key] >= 1):
                problems[key] = "expected an integer >= 1"
        if "master_seed" in data and not (isinstance(data["master_seed"], int)
                                          and 0 <= data["master_seed"] < 2 ** 64):
            problems["master_seed"] = "expected an unsigned 64-bit integer"
        if "metrics" in data:
            bad = [m for m in data["metrics"] if m not in METRICS] \
                if isinstance(data["metrics"], list) else ["<not a list>"]
            if bad:
                problems["metrics"] = f"unknown metrics {bad}; choose from {list(METRICS)}"
        if "application" in data:
            app = data["application"]
            if not isinstance(app, dict):
                problems["application"] = "expected an object"
            else:
                for k in app:
                    if k not in _APPLICATION_DEFAULTS:
                        problems[f"application.{k}"] = "unknown key"
        if "scan" in data and data["scan"] is not None:
            scan = data["scan"]
            if not isinstance(scan, dict) or set(scan) - {"degenerate_shg", "variable", "fixed"}:
                problems["scan"] = "expected {degenerate_shg, variable, fixed}"
        if "process" in data and "process" not in problems:
            if data["process"] not in load_presets():
                problems["process"] = f"unknown preset; available {sorted(load_presets())}"
        if problems:
            detail = "; ".join(f"{k}: {v}" for k, v in sorted(problems.items()))
            raise ConfigError(f"invalid experiment config ({detail})", keys=sorted(problems))
        kwargs = dict(data)
        for key in ("L_mm", "delta_w_um", "gamma"):
            if key in kwargs and not isinstance(kwargs[key], list):
                kwargs[key] = [kwargs[key]]
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path):
        try:
            with open(path) as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})") from None
        return cls.from_dict(data)

    def resolved(self):
        """Plain dict of every setting, defaults filled in."""
        out = dataclasses.asdict(self)
        out["application"] = {**_APPLICATION_DEFAULTS, **self.application}
        out["scan"] = self.scan_settings()
        return out

    def app(self, key):
        return self.application.get(key, _APPLICATION_DEFAULTS[key])

    def scan_settings(self):
        if self.scan is not None:
            return dict(self.scan)
        return load_presets()[self.process][1]

    def cells(self):
        keys = {CellKey(float(L), float(dw), float(g), float(self.w0_um))
                for L in self.L_mm for dw in self.delta_w_um for g in self.gamma}
        return sorted(keys)


def _is_number(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


@dataclass
class EnsembleResult:
    key: CellKey
    seeds: list
    values: dict  # metric -> np.ndarray over realizations

    def mean(self, metric):
        return float(np.mean(self.values[metric]))

    def min(self, metric):
        return float(np.min(self.values[metric]))

    def max(self, metric):
        return float(np.max(self.values[metric]))

    @property
    def count(self):
        return len(self.seeds)


@dataclass
class Dataset:
    config: ExperimentConfig
    results: list
    failures: dict = field(default_factory=dict)

    def cell(self, **match):
        for r in self.results:
            if all(getattr(r.key, k) == v for k, v in match.items()):
                return r
        raise KeyError(match)


class _CellContext:
    """Everything shared by the realizations of one cell."""

    def __init__(self, config, key, provider):
        presets = load_presets()
        base = presets[config.process][0]
        self.config = config
        self.key = key
        self.provider = provider
        self.length = key.L_mm * 1e-3
        self.dz = config.dz_um * 1e-6
        self.process = assign_qpm_period(provider, base, key.w0_um)
        template = scan_from_dict(self.process, config.scan_settings())
        self.scan = auto_scan(provider, self.process, self.length, key.w0_um, template,
                              n_points=config.scan_points, n_zeros=config.scan_zeros)
        center_nm = config.app("bcf_center_nm")
        self.center = (center_nm * 1e-9 if center_nm is not None
                       else getattr(self.process, self.scan.swept).wavelength)

    def realization(self, r):
        cfg = self.config
        seed = split_seed(cfg.master_seed, r)
        profile = generate_profile(self.length, self.key.w0_um,
                                   NoiseSpec(self.key.gamma, self.key.delta_w_um, seed),
                                   dz=self.dz)
        check_profile_window(profile, self.provider)
        spectrum = integrate_spectrum(self.provider, self.process, profile, self.scan)
        return seed, evaluate_metrics(spectrum, cfg, self.length, self.center)


def evaluate_metrics(spectrum, config, length, center_wavelength):
    """Requested metric values of one realization."""
    wanted = config.metrics
    out = {}
    peak = max_efficiency(spectrum)
    if "max_efficiency" in wanted:
        out["max_efficiency"] = peak
    eta = eta_norm(min(peak, 1.0), config.app("eta_ideal_per_w_cm2"))
    if "eta_norm" in wanted:
        out["eta_norm"] = eta
    if "squeezing_db" in wanted:
        out["squeezing_db"] = squeezing_db(SqueezingInputs(
            eta, config.app("p_in_w"), config.app("alpha_db_per_cm"), length * 100))
    if {"fwhm_nm", "n_bins", "bcf"} & set(wanted):
        fwhm = gaussian_fwhm(spectrum).fwhm  # metres on the swept wavelength axis
        if "fwhm_nm" in wanted:
            out["fwhm_nm"] = fwhm * 1e9
        if "n_bins" in wanted:
            out["n_bins"] = float(n_bins(config.app("band_nm"), fwhm * 1e9))
        if "bcf" in wanted:
            out["bcf"] = bcf(config.app("nu_in_ghz") * 1e9, fwhm, center_wavelength)
    return {m: out[m] for m in wanted}


def _assemble(key, outcomes, metrics):
    seeds = [seed for seed, _ in outcomes]
    values = {m: np.array([vals[m] for _, vals in outcomes]) for m in metrics}
    return EnsembleResult(key, seeds, values)


def run_cell(config, key, provider=None):
    """Run every realization of one grid cell (fails as a whole on any error)."""
    if provider is None:
        provider = provider_from_spec(config.provider)
    ctx = _CellContext(config, key, provider)
    outcomes = [ctx.realization(r) for r in range(config.realizations)]
    return _assemble(key, outcomes, config.metrics)


def run_experiment(config, threads=1, provider=None):
    """Map :func:`run_cell` over the grid; output order is the sorted cell order.

    Realizations of all cells are independent work units; with ``threads > 1``
    they run on a thread pool. Results do not depend on the schedule. A failing
    cell is reported in ``Dataset.failures`` and omitted from the results.
    """
    if provider is None:
        provider = provider_from_spec(config.provider)
    cells = config.cells()
    contexts, failures = {}, {}
    for key in cells:
        try:
            contexts[key] = _CellContext(config, key, provider)
        except (FabTolError, ValueError, ArithmeticError) as exc:
            failures[key] = f"{type(exc).__name__}: {exc}"
    jobs = [(key, r) for key in cells if key in contexts for r in range(config.realizations)]

    def work(job):
        key, r = job
        try:
            return contexts[key].realization(r)
        except (FabTolError, ValueError, ArithmeticError) as exc:
            return exc

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(work, jobs))
    else:
        outcomes = [work(job) for job in jobs]

    per_cell = {}
    for (key, _), outcome in zip(jobs, outcomes):
        per_cell.setdefault(key, []).append(outcome)
    results = []
    for key in cells:
        if key not in per_cell:
            continue
        errors = [o for o in per_cell[key] if isinstance(o, Exception)]
        if errors:
            failures[key] = f"{type(errors[0]).__name__}: {errors[0]}"
            continue
        results.append(_assemble(key, per_cell[key], config.metrics))
    for key, msg in failures.items():
        logger.error("cell %s failed: %s", tuple(key), msg)
    return Dataset(config, results, failures)


def _num(x):
    return repr(float(x))


def metric_rows(dataset, metric):
    rows = []
    for res in dataset.results:
        k = res.key
        prefix = [_num(k.L_mm), _num(k.delta_w_um), _num(k.gamma)]
        for seed, value in zip(res.seeds, res.values[metric]):
            rows.append(prefix + [str(seed), metric, _num(value), "", "", ""])
        rows.append(prefix + ["agg", metric, "", _num(res.mean(metric)),
                              _num(res.min(metric)), _num(res.max(metric))])
    return rows


def write_dataset(dataset, out_dir, config_path=None):
    """Write one CSV per metric plus ``manifest.json`` into `out_dir`."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = datetime.now(timezone.utc).isoformat()
    files = []
    for metric in dataset.config.metrics:
        path = out / f"{metric}.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            writer.writerows(metric_rows(dataset, metric))
        files.append(path.name)
    hashes = {}
    if config_path is not None:
        hashes["config"] = _sha256(config_path)
    kind, _, arg = dataset.config.provider.partition(":")
    if kind == "table":
        hashes["provider_table"] = _sha256(arg)
    manifest = {
        "artifact": "fabtol",
        "version": __version__,
        "config": dataset.config.resolved(),
        "input_hashes": hashes,
        "outputs": files,
        "failures": {json.dumps(list(k)): v for k, v in dataset.failures.items()},
        "timestamps": {"written": started},
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return [out / f for f in files]


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def best_length(dataset, metric, delta_w_um, gamma, minimize=False):
    """Length [mm] whose ensemble mean of `metric` is largest (or smallest)."""
    cells = [r for r in dataset.results
             if r.key.delta_w_um == delta_w_um and r.key.gamma == gamma]
    if not cells:
        raise KeyError((delta_w_um, gamma))
    pick = min if minimize else max
    return pick(cells, key=lambda r: r.mean(metric)).key.L_mm
