"""Effective indices, momentum mismatch and fabrication tolerance of a process.

Unit conventions used throughout the package:

* vacuum wavelengths are in metres,
* waveguide widths are in micrometres (the fabrication parameter),
* positions and device lengths are in metres,
* the process sensitivity is in rad/m per micrometre of width.
"""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from importlib import resources

import numpy as np
from scipy.interpolate import RectBivariateSpline
from scipy.optimize import brentq

from .errors import (
    DegenerateEverywhereCritical,
    DegenerateNoPoling,
    EnergyConservationError,
    InfiniteTolerance,
    MissingPeriod,
    OutOfRange,
    UnknownPolarization,
)


def _half_max_root():
    # sinc(x)^2 = 1/2  <=>  sin(x)/x = 1/sqrt(2) on (0, pi)
    return brentq(lambda x: math.sin(x) / x - math.sqrt(0.5), 1.0, 2.0, xtol=1e-15, rtol=1e-15)


#: Half width at half maximum of sinc(x)^2, i.e. sinc(GAMMA)^2 = 1/2.
GAMMA = _half_max_root()

UNPOLED = "unpoled"

_UNITS = {"m": 1.0, "mm": 1e-3, "um": 1e-6, "µm": 1e-6, "nm": 1e-9}


def parse_length(text, default_unit=None):
    """Parse a length such as ``"1550nm"`` or ``"1.55 um"`` into metres.

    A bare number is accepted only when `default_unit` is given.
    """
    if isinstance(text, (int, float)):
        if default_unit is None:
            raise ValueError(f"length {text!r} needs an explicit unit")
        return float(text) * _UNITS[default_unit]
    s = str(text).strip().replace(" ", "")
    for unit in sorted(_UNITS, key=len, reverse=True):
        if s.endswith(unit):
            number = s[: -len(unit)]
            if number:
                return float(number) * _UNITS[unit]
    if default_unit is None:
        raise ValueError(f"length {text!r} needs an explicit unit suffix (nm, um, mm, m)")
    return float(s) * _UNITS[default_unit]


def _check_window(values, window, what):
    lo, hi = window
    values = np.asarray(values, dtype=float)
    tol = 1e-12 * max(abs(lo), abs(hi))
    if values.size and (np.nanmin(values) < lo - tol or np.nanmax(values) > hi + tol
                        or np.isnan(values).any()):
        raise OutOfRange(
            f"{what} outside validity window [{lo:.6g}, {hi:.6g}]: "
            f"got range [{np.nanmin(values):.6g}, {np.nanmax(values):.6g}]"
        )


# ---------------------------------------------------------------------------
# Providers
# ---------------------------------------------------------------------------

def load_sellmeier(path=None):
    """Load per-polarization three-term Sellmeier coefficients.

    Returns a mapping ``label -> (B, C)`` with ``C`` in um^2. Defaults to the
    congruent lithium niobate file shipped with the package.
    """
    if path is None:
        text = resources.files("fabtol.data").joinpath("sellmeier_cln.json").read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    data = json.loads(text)
    return {
        pol: (tuple(float(b) for b in c["B"]), tuple(float(x) for x in c["C"]))
        for pol, c in data["coefficients"].items()
    }


def sellmeier_index(wavelength, b_coeffs, c_coeffs):
    """Bulk index from ``n^2 - 1 = sum B lam^2 / (lam^2 - C)``, wavelength in metres."""
    lam2 = (np.asarray(wavelength, dtype=float) * 1e6) ** 2
    n2 = 1.0
    for b, c in zip(b_coeffs, c_coeffs):
        n2 = n2 + b * lam2 / (lam2 - c)
    return np.sqrt(n2)


@dataclass(frozen=True)
class ElevationLaw:
    """Width dependence of the surrogate index elevation for one polarization.

    The index elevation over bulk is ``A(lam) * (1 - exp(-w / w_s(lam)))`` with
    power laws ``A(lam) = amplitude * lam**amplitude_exponent`` and
    ``w_s(lam) = saturation_width * lam**saturation_exponent`` (lam in um).
    A wavelength-dependent saturation width is what allows the sensitivity of a
    process to change sign; with ``saturation_exponent = 0`` every width
    derivative is a single decaying exponential.
    """

    amplitude: float
    saturation_width: float
    amplitude_exponent: float = 0.0
    saturation_exponent: float = 0.0

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValueError("index elevation amplitude must be >= 0")
        if self.saturation_width <= 0:
            raise ValueError("saturation width must be > 0")

    def amplitude_at(self, wavelength):
        lam_um = np.asarray(wavelength, dtype=float) * 1e6
        return self.amplitude * lam_um ** self.amplitude_exponent

    def saturation_at(self, wavelength):
        lam_um = np.asarray(wavelength, dtype=float) * 1e6
        return self.saturation_width * lam_um ** self.saturation_exponent


class SurrogateProvider:
    """Analytic stand-in for a mode-solver dispersion model.

    ``n_eff(lam, w) = n_bulk(lam) + A(lam) * (1 - exp(-w / w_s(lam)))``

    Parameters
    ----------
    sellmeier : mapping
        ``label -> (B, C)`` bulk Sellmeier coefficients.
    elevation : mapping
        ``label -> ElevationLaw``.
    wavelength_range : (float, float)
        Validity window in metres.
    width_range : (float, float)
        Validity window in micrometres.
    """

    def __init__(self, sellmeier, elevation, wavelength_range=(400e-9, 1700e-9),
                 width_range=(5.5, 22.0), name="surrogate"):
        missing = set(elevation) - set(sellmeier)
        if missing:
            raise ValueError(f"no Sellmeier coefficients for {sorted(missing)}")
        self._sellmeier = dict(sellmeier)
        self._elevation = dict(elevation)
        self.wavelength_range = (float(wavelength_range[0]), float(wavelength_range[1]))
        self.width_range = (float(width_range[0]), float(width_range[1]))
        self.name = name

    @property
    def polarizations(self):
        return tuple(sorted(self._elevation))

    def _law(self, pol):
        try:
            return self._elevation[pol]
        except KeyError:
            raise UnknownPolarization(
                f"polarization {pol!r} unknown to provider {self.name!r}; "
                f"known: {list(self.polarizations)}") from None

    def n_bulk(self, wavelength, pol):
        self._law(pol)
        b, c = self._sellmeier[pol]
        return sellmeier_index(wavelength, b, c)

    def n_eff(self, wavelength, width, pol):
        law = self._law(pol)
        _check_window(wavelength, self.wavelength_range, "wavelength [m]")
        _check_window(width, self.width_range, "width [um]")
        wavelength = np.asarray(wavelength, dtype=float)
        width = np.asarray(width, dtype=float)
        b, c = self._sellmeier[pol]
        elevation = law.amplitude_at(wavelength) * -np.expm1(-width / law.saturation_at(wavelength))
        return sellmeier_index(wavelength, b, c) + elevation


class TableProvider:
    """Effective indices interpolated from tabulated mode-solver output.

    Each polarization holds a full grid ``n_eff[i, j]`` at wavelength
    ``wavelengths[i]`` (metres) and width ``widths[j]`` (micrometres). The grid
    is interpolated with an interpolating bicubic spline, which reproduces the
    nodes and is continuously differentiable, so finite-difference sensitivities
    of the interpolant stay smooth.
    """

    def __init__(self, grids, name="table"):
        self._grids = {}
        self._splines = {}
        wl_lo, wl_hi, w_lo, w_hi = -np.inf, np.inf, -np.inf, np.inf
        for pol, (wl, w, n) in grids.items():
            wl = np.asarray(wl, dtype=float)
            w = np.asarray(w, dtype=float)
            n = np.asarray(n, dtype=float)
            if n.shape != (wl.size, w.size):
                raise ValueError(f"{pol}: n_eff shape {n.shape} does not match grids "
                                 f"({wl.size}, {w.size})")
            for axis, label in ((wl, "wavelength"), (w, "width")):
                if axis.size < 4:
                    raise ValueError(f"{pol}: bicubic interpolation needs >= 4 {label} nodes")
                if np.any(np.diff(axis) <= 0):
                    raise ValueError(f"{pol}: {label} grid must be strictly increasing")
            if not np.all(np.isfinite(n)):
                raise ValueError(f"{pol}: missing or non-finite n_eff entries")
            if np.any(n <= 1.0) or np.any(n >= 3.5):
                raise ValueError(f"{pol}: n_eff values must lie in (1.0, 3.5)")
            self._grids[pol] = (wl, w, n)
            # wavelength in um keeps the spline well conditioned
            self._splines[pol] = RectBivariateSpline(wl * 1e6, w, n, kx=3, ky=3, s=0)
            wl_lo, wl_hi = max(wl_lo, wl[0]), min(wl_hi, wl[-1])
            w_lo, w_hi = max(w_lo, w[0]), min(w_hi, w[-1])
        if not self._grids:
            raise ValueError("table provider needs at least one polarization")
        self.wavelength_range = (float(wl_lo), float(wl_hi))
        self.width_range = (float(w_lo), float(w_hi))
        self.name = name

    @property
    def polarizations(self):
        return tuple(sorted(self._grids))

    def grid(self, pol):
        return self._grids[pol]

    def n_eff(self, wavelength, width, pol):
        if pol not in self._splines:
            raise UnknownPolarization(
                f"polarization {pol!r} unknown to provider {self.name!r}; "
                f"known: {list(self.polarizations)}")
        wl_grid, w_grid, _ = self._grids[pol]
        _check_window(wavelength, (wl_grid[0], wl_grid[-1]), "wavelength [m]")
        _check_window(width, (w_grid[0], w_grid[-1]), "width [um]")
        wavelength, width = np.broadcast_arrays(np.asarray(wavelength, dtype=float),
                                                np.asarray(width, dtype=float))
        out = self._splines[pol].ev(wavelength.ravel() * 1e6, width.ravel())
        out = out.reshape(wavelength.shape)
        return out[()] if out.ndim == 0 else out


def n_eff(provider, wavelength, width, pol):
    """Effective index of `provider` at (`wavelength` [m], `width` [um], `pol`)."""
    return provider.n_eff(wavelength, width, pol)


def tabulate(provider, wavelengths, widths, polarizations=None):
    """Sample a provider on a full grid, returning a :class:`TableProvider`."""
    pols = provider.polarizations if polarizations is None else polarizations
    wavelengths = np.asarray(wavelengths, dtype=float)
    widths = np.asarray(widths, dtype=float)
    grids = {pol: (wavelengths, widths,
                   provider.n_eff(wavelengths[:, None], widths[None, :], pol))
             for pol in pols}
    return TableProvider(grids, name=f"table({getattr(provider, 'name', 'provider')})")


# ---------------------------------------------------------------------------
# Processes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Wave:
    wavelength: float
    polarization: str
    direction: int = 1

    def __post_init__(self):
        if self.direction not in (1, -1):
            raise ValueError(f"direction must be +1 or -1, got {self.direction!r}")
        if not self.wavelength > 0:
            raise ValueError("wavelength must be positive")

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class Process:
    """Three-wave mixing process with ``omega3 = omega2 + omega1``.

    ``qpm_period`` is the signed grating period in metres, ``"unpoled"`` for a
    device without grating, or ``None`` while the period is not yet designed.
    """

    wave3: Wave
    wave2: Wave
    wave1: Wave
    qpm_period: float | str | None = None
    name: str = ""

    def __post_init__(self):
        inv3 = 1.0 / self.wave3.wavelength
        mismatch = inv3 - 1.0 / self.wave2.wavelength - 1.0 / self.wave1.wavelength
        if abs(mismatch) > 1e-9 * inv3:
            raise EnergyConservationError(
                f"process {self.name!r} violates 1/l3 = 1/l2 + 1/l1 "
                f"(relative mismatch {mismatch / inv3:.3e})")
        period = self.qpm_period
        if isinstance(period, str):
            if period != UNPOLED:
                raise ValueError(f"qpm_period must be a length or {UNPOLED!r}, got {period!r}")
        elif period is not None and not (math.isfinite(period) and period != 0):
            raise ValueError("qpm_period must be finite and nonzero")

    @property
    def waves(self):
        return (self.wave3, self.wave2, self.wave1)

    @property
    def wavelengths(self):
        return (self.wave3.wavelength, self.wave2.wavelength, self.wave1.wavelength)

    @property
    def grating_vector(self):
        """``2 pi / Lambda`` in rad/m (zero when unpoled)."""
        if self.qpm_period is None:
            raise MissingPeriod(f"process {self.name!r} has no QPM period; design one with "
                                "assign_qpm_period() or mark it 'unpoled'")
        if self.qpm_period == UNPOLED:
            return 0.0
        return 2 * math.pi / self.qpm_period

    def with_period(self, period):
        return dataclasses.replace(self, qpm_period=period)


def _resolve_wavelengths(spec):
    lam = {k: (None if spec[k]["wavelength_nm"] is None else spec[k]["wavelength_nm"] * 1e-9)
           for k in ("wave3", "wave2", "wave1")}
    unknown = [k for k, v in lam.items() if v is None]
    if len(unknown) > 1:
        raise ValueError("at most one wavelength may be solved from energy conservation")
    if unknown == ["wave3"]:
        lam["wave3"] = 1.0 / (1.0 / lam["wave2"] + 1.0 / lam["wave1"])
    elif unknown == ["wave2"]:
        lam["wave2"] = 1.0 / (1.0 / lam["wave3"] - 1.0 / lam["wave1"])
    elif unknown == ["wave1"]:
        lam["wave1"] = 1.0 / (1.0 / lam["wave3"] - 1.0 / lam["wave2"])
    return lam


def load_presets(path=None):
    """Load process presets, returning ``name -> (Process, default scan dict)``."""
    if path is None:
        text = resources.files("fabtol.data").joinpath("processes.json").read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    out = {}
    for name, spec in json.loads(text)["processes"].items():
        lam = _resolve_wavelengths(spec)
        waves = {k: Wave(lam[k], spec[k]["polarization"], int(spec[k].get("direction", 1)))
                 for k in ("wave3", "wave2", "wave1")}
        out[name] = (Process(waves["wave3"], waves["wave2"], waves["wave1"], name=name),
                     dict(spec.get("default_scan", {})))
    return out


def get_preset(name):
    presets = load_presets()
    if name not in presets:
        raise KeyError(f"unknown process preset {name!r}; available: {sorted(presets)}")
    return presets[name][0]


# ---------------------------------------------------------------------------
# Momentum mismatch and tolerance
# ---------------------------------------------------------------------------

def delta_beta(provider, process, width, wavelengths=None):
    """Momentum mismatch ``d3*b3 - d2*b2 - d1*b1`` in rad/m.

    The grating vector is *not* subtracted. `wavelengths` optionally overrides
    the process wavelengths with a ``(lam3, lam2, lam1)`` triple of arrays,
    which broadcast against `width`.
    """
    lams = process.wavelengths if wavelengths is None else wavelengths
    total = 0.0
    for sign, wave, lam in zip((1, -1, -1), process.waves, lams):
        lam = np.asarray(lam, dtype=float)
        beta = 2 * np.pi * provider.n_eff(lam, width, wave.polarization) / lam
        total = total + sign * wave.direction * beta
    return total


def qpm_period(provider, process, width):
    """Signed grating period ``2 pi / delta_beta`` phasematching `process` at `width`."""
    dbeta = float(delta_beta(provider, process, width))
    if abs(dbeta) < 1e-6:
        raise DegenerateNoPoling(
            f"|delta_beta| = {abs(dbeta):.3e} rad/m: process is phasematched without poling")
    return 2 * math.pi / dbeta


def assign_qpm_period(provider, process, width):
    """Return a copy of `process` carrying the grating period designed at `width`."""
    return process.with_period(qpm_period(provider, process, width))


def sensitivity(provider, process, width, h=0.05, one_sided=False):
    """Process sensitivity ``d(delta_beta)/dw`` in rad/m per um.

    Central difference with step `h` [um]. Near the edges of the width window a
    one-sided difference is used only when `one_sided` is set; otherwise the
    provider raises :class:`OutOfRange`.
    """
    width = np.asarray(width, dtype=float)
    if not one_sided:
        return (delta_beta(provider, process, width + h)
                - delta_beta(provider, process, width - h)) / (2 * h)
    lo, hi = provider.width_range
    plus = np.minimum(width + h, hi)
    minus = np.maximum(width - h, lo)
    return (delta_beta(provider, process, plus)
            - delta_beta(provider, process, minus)) / (plus - minus)


def _bisect(f, a, b, fa, tol):
    while b - a >= tol:
        m = 0.5 * (a + b)
        fm = f(m)
        if fm == 0:
            return float(m)
        if (fm > 0) == (fa > 0):
            a, fa = m, fm
        else:
            b = m
    return float(0.5 * (a + b))


def noncritical_widths(provider, process, w_range=None, step=0.25, h=0.05, tol=1e-3):
    """Widths where the sensitivity changes sign (noncritical phasematching).

    The sensitivity is scanned on a grid of pitch `step` over `w_range` and
    every sign-change bracket is bisected to an interval below `tol` [um].
    Returns the roots in ascending order; an empty list means the process is
    critical everywhere on the range.
    """
    lo, hi = provider.width_range if w_range is None else w_range
    n = int(math.floor((hi - lo) / step + 1e-9))
    grid = lo + step * np.arange(n + 1)
    if grid[-1] < hi - 1e-9:
        grid = np.append(grid, hi)

    def s(w):
        return float(sensitivity(provider, process, w, h=h, one_sided=True))

    values = np.array([s(w) for w in grid])
    scale = np.max(np.abs(delta_beta(provider, process, grid)))
    if np.all(np.abs(values) <= 1e-12 * max(scale, 1.0)):
        raise DegenerateEverywhereCritical(
            "sensitivity vanishes on the whole range; every width is noncritical")
    roots = []
    for i in range(len(grid) - 1):
        a, b, fa, fb = grid[i], grid[i + 1], values[i], values[i + 1]
        if fa == 0:
            roots.append(float(a))
        elif fa * fb < 0:
            roots.append(_bisect(s, a, b, fa, tol))
    if values[-1] == 0:
        roots.append(float(grid[-1]))
    return roots


def l_max(sens, delta_w_max):
    """Maximum device length [m] keeping efficiency above 50 % of ideal.

    ``2 * GAMMA / (|sens| * delta_w_max)`` with `sens` in rad/m per um and
    `delta_w_max` in um.
    """
    if delta_w_max <= 0:
        raise ValueError("delta_w_max must be > 0")
    if sens == 0:
        raise InfiniteTolerance("zero sensitivity: noncritical, any length is tolerated")
    return 2 * GAMMA / (abs(sens) * delta_w_max)


# ---------------------------------------------------------------------------
# Surrogate fixtures
# ---------------------------------------------------------------------------

#: Calibrated elevation laws of the ``ti-ln`` fixture (see :func:`surrogate_fixture`).
TI_LN_ELEVATION = {
    "e": ElevationLaw(amplitude=0.0125, saturation_width=12.1, saturation_exponent=1.0),
    "o": ElevationLaw(amplitude=0.003, saturation_width=10.0, amplitude_exponent=-1.5,
                      saturation_exponent=1.5),
}


def surrogate_fixture(name="ti-ln"):
    """Named surrogate providers on bulk congruent lithium niobate.

    ``ti-ln``
        Calibrated so the type-0 process (775 nm <-> 1550 nm, e-polarized) is
        noncritical near 13 um and has a sensitivity of order 1e3 rad/m/um at
        7 um, the regime of titanium-indiffused waveguides. With the shipped
        presets the resonant PDC is noncritical near 5.9 um and the QPG has no
        noncritical width in the window.
    ``flat``
        No index elevation: n_eff equals the bulk index at every width and all
        sensitivities vanish.
    ``monotone``
        A single saturation width for all wavelengths, so the sensitivity of any
        process keeps one sign (no noncritical width).
    """
    sellmeier = load_sellmeier()
    if name == "ti-ln":
        elevation = TI_LN_ELEVATION
    elif name == "flat":
        elevation = {pol: ElevationLaw(0.0, 1.0) for pol in sellmeier}
    elif name == "monotone":
        elevation = {pol: ElevationLaw(0.0125, 8.0, amplitude_exponent=1.0) for pol in sellmeier}
    else:
        raise KeyError(f"unknown surrogate fixture {name!r}; available: ti-ln, flat, monotone")
    return SurrogateProvider(sellmeier, elevation, name=f"surrogate:{name}")


def provider_from_spec(spec):
    """Build a provider from ``"surrogate:<fixture>"`` or ``"table:<csv path>"``."""
    kind, _, arg = str(spec).partition(":")
    if kind == "surrogate":
        return surrogate_fixture(arg or "ti-ln")
    if kind == "table":
        from .io import read_neff_table
        return read_neff_table(arg)
    raise ValueError(f"provider must be 'surrogate:<fixture>' or 'table:<path>', got {spec!r}")


__all__ = [
    "GAMMA", "ElevationLaw", "SurrogateProvider", "TableProvider", "Wave", "Process",
    "n_eff", "delta_beta", "qpm_period", "assign_qpm_period", "sensitivity",
    "noncritical_widths", "l_max", "surrogate_fixture", "provider_from_spec",
    "load_presets", "get_preset", "tabulate", "parse_length", "load_sellmeier",
]
