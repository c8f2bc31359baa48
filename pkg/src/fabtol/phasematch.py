"""Phasematching spectra of homogeneous and inhomogeneous waveguides.

The inhomogeneous amplitude is

    phi = (1/L) * integral_0^L exp(i * integral_0^z (dbeta(xi) - K) dxi) dz

with ``K = 2 pi / Lambda``. On the width mesh the mismatch is constant over
each segment, so the inner integral is a running sum of segment phases and the
outer integral over each segment is evaluated in closed form (``scheme="exact"``).
``scheme="riemann"`` gives the plain left-endpoint sum instead.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .dispersion import TableProvider, delta_beta
from .errors import AxisMismatch, OutOfRange

logger = logging.getLogger(__name__)

_WAVES = ("wave3", "wave2", "wave1")


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Complex phasematching amplitude sampled on `axis`.

    `axis` holds vacuum wavelengths [m] of the swept wave, or the dimensionless
    ``dbeta * L / 2`` for analytic spectra.
    """

    axis: np.ndarray
    amplitude: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def intensity(self):
        return np.abs(self.amplitude) ** 2

    @property
    def phase(self):
        return np.angle(self.amplitude)


@dataclass(frozen=True, eq=False)
class ScanSpec:
    """Which wavelength is swept and how the other two follow.

    With `degenerate_shg` the axis is the fundamental wavelength and
    ``lam1 = lam2 = axis``, ``lam3 = axis / 2``. Otherwise `variable` is swept,
    `fixed` keeps its process wavelength and the third wave is solved from
    ``1/lam3 = 1/lam2 + 1/lam1``.
    """

    axis: np.ndarray
    variable: str = "wave1"
    fixed: str | None = "wave2"
    degenerate_shg: bool = False

    def __post_init__(self):
        axis = np.asarray(self.axis, dtype=float)
        object.__setattr__(self, "axis", axis)
        if axis.ndim != 1 or axis.size < 1:
            raise ValueError("scan axis must be a non-empty 1-D sequence")
        steps = np.diff(axis)
        if axis.size > 1 and not (np.all(steps > 0) or np.all(steps < 0)):
            raise ValueError("scan axis must be strictly monotone")
        if not self.degenerate_shg:
            if self.variable not in _WAVES or self.fixed not in _WAVES:
                raise ValueError(f"variable and fixed must be among {_WAVES}")
            if self.variable == self.fixed:
                raise ValueError("variable and fixed wave must differ")

    @property
    def swept(self):
        return "wave1" if self.degenerate_shg else self.variable

    def with_axis(self, axis):
        return ScanSpec(axis, self.variable, self.fixed, self.degenerate_shg)


def scan_wavelengths(process, scan):
    """``(lam3, lam2, lam1)`` arrays along the scan axis."""
    x = scan.axis
    if scan.degenerate_shg:
        return x / 2, x, x
    lam = dict(zip(_WAVES, (np.full_like(x, v) for v in process.wavelengths)))
    lam[scan.variable] = x
    solved = ({"wave3", "wave2", "wave1"} - {scan.variable, scan.fixed}).pop()
    if solved == "wave3":
        lam["wave3"] = 1.0 / (1.0 / lam["wave2"] + 1.0 / lam["wave1"])
    elif solved == "wave2":
        lam["wave2"] = 1.0 / (1.0 / lam["wave3"] - 1.0 / lam["wave1"])
    else:
        lam["wave1"] = 1.0 / (1.0 / lam["wave3"] - 1.0 / lam["wave2"])
    if np.any(~np.isfinite(lam[solved])) or np.any(lam[solved] <= 0):
        raise OutOfRange(f"scan leaves no physical {solved} wavelength")
    return lam["wave3"], lam["wave2"], lam["wave1"]


def scan_from_dict(process, spec, axis=None):
    """Build a :class:`ScanSpec` from a preset/config dict (axis optional)."""
    degenerate = bool(spec.get("degenerate_shg", False))
    variable = spec.get("variable", "wave1")
    fixed = spec.get("fixed", "wave2")
    if axis is None:
        swept = "wave1" if degenerate else variable
        axis = [getattr(process, swept).wavelength]
    return ScanSpec(np.asarray(axis, dtype=float), variable, fixed, degenerate)


def auto_scan(provider, process, length, width, template, n_points=501, n_zeros=6):
    """Scan axis spanning `n_zeros` sinc zeros either side of the design point.

    The half span is ``2 pi n_zeros / (L |d dbeta / d lam|)`` around the process
    wavelength of the swept wave, with the slope taken at `width`.
    """
    center = getattr(process, template.swept).wavelength
    step = 1e-12
    probe = scan_wavelengths(process, template.with_axis([center - step, center + step]))
    db = delta_beta(provider, process, width, wavelengths=probe)
    slope = abs(float(db[1] - db[0]) / (2 * step))
    if slope == 0:
        raise ValueError("delta_beta does not depend on the swept wavelength")
    half = 2 * np.pi * n_zeros / (length * slope)
    return template.with_axis(np.linspace(center - half, center + half, n_points))


def ideal_sinc(x):
    """Homogeneous phasematching ``sinc(x) exp(i x)`` for ``x = dbeta L / 2``."""
    x = np.asarray(x, dtype=float)
    return Spectrum(x, np.sinc(x / np.pi) * np.exp(1j * x), {"kind": "ideal_sinc"})


def homogeneous_spectrum(provider, process, width, length, scan):
    """Closed-form spectrum of a uniform waveguide of `width` and `length`."""
    lams = scan_wavelengths(process, scan)
    mismatch = delta_beta(provider, process, width, wavelengths=lams) - process.grating_vector
    x = mismatch * length / 2
    return Spectrum(scan.axis, np.sinc(x / np.pi) * np.exp(1j * x),
                    {"process": process.name, "L_m": length, "kind": "homogeneous"})


def _cumulative_phase_sum(mismatch, dz, scheme):
    # mismatch: (A, N) array of dbeta_m - K
    length = mismatch.shape[1] * dz
    step = mismatch * dz
    if scheme == "riemann":
        return np.exp(1j * np.cumsum(step, axis=1)).sum(axis=1) * (dz / length)
    if scheme != "exact":
        raise ValueError(f"unknown scheme {scheme!r}")
    running = np.cumsum(step, axis=1) - step  # phase accumulated before segment n
    half = step / 2
    segment = np.sinc(half / np.pi) * np.exp(1j * (half + running))
    return segment.sum(axis=1) * (dz / length)


def _direct_mismatch(provider, process, lams, widths):
    lams = tuple(np.asarray(lam)[:, None] for lam in lams)
    return delta_beta(provider, process, widths[None, :], wavelengths=lams)


def _spline_mismatch(provider, process, lams, widths, n_nodes=33):
    # per axis point, a cubic interpolant of dbeta over the covered width range
    nodes = np.linspace(widths.min(), widths.max(), n_nodes)
    base = delta_beta(provider, process, nodes[n_nodes // 2],
                      wavelengths=tuple(np.asarray(lam) for lam in lams))
    values = _direct_mismatch(provider, process, lams, nodes) - base[:, None]
    spline = CubicSpline(nodes, values.T, axis=0)
    return spline(widths).T + base[:, None]


def integrate_spectrum(provider, process, profile, scan, scheme="exact", accelerate=None,
                       audit_points=10, audit_tol=1e-8):
    """Phasematching spectrum of the width `profile` along `scan`.

    Parameters
    ----------
    provider
        Dispersion provider.
    process : Process
        Must carry a QPM period or be marked ``"unpoled"``.
    profile : WidthProfile
    scan : ScanSpec
    scheme : {"exact", "riemann"}
        Segment integration rule, see the module docstring.
    accelerate : bool, optional
        Evaluate dbeta through a per-axis-point cubic spline in width instead
        of at every mesh site. Defaults to on for analytic providers. The
        shortcut is audited on `audit_points` random axis points and replaced
        by direct evaluation if any amplitude differs by more than `audit_tol`.

    Returns
    -------
    Spectrum
        Normalized so that a uniform, phasematched device has unit peak.
    """
    grating = process.grating_vector
    lams = scan_wavelengths(process, scan)
    widths = np.asarray(profile.widths, dtype=float)
    if accelerate is None:
        accelerate = not isinstance(provider, TableProvider)
    span = float(widths.max() - widths.min())
    meta = {"process": process.name, "L_m": profile.length, "dz_m": profile.dz,
            "scheme": scheme, **profile.meta}

    if accelerate and span > 0 and profile.n > 64:
        dbeta = _spline_mismatch(provider, process, lams, widths)
        amp = _cumulative_phase_sum(dbeta - grating, profile.dz, scheme)
        rng = np.random.default_rng(0x5EED)
        picks = np.sort(rng.choice(scan.axis.size, size=min(audit_points, scan.axis.size),
                                   replace=False))
        sub = tuple(np.asarray(lam)[picks] for lam in lams)
        direct = _cumulative_phase_sum(_direct_mismatch(provider, process, sub, widths) - grating,
                                       profile.dz, scheme)
        err = float(np.max(np.abs(direct - amp[picks])))
        meta["audit_error"] = err
        if err < audit_tol:
            meta["accelerated"] = True
            return Spectrum(scan.axis.copy(), amp, meta)
        logger.warning("width-spline shortcut failed audit (|dphi| = %.2e); "
                       "falling back to direct evaluation", err)

    meta["accelerated"] = False
    dbeta = _direct_mismatch(provider, process, lams, widths)
    amp = _cumulative_phase_sum(dbeta - grating, profile.dz, scheme)
    return Spectrum(scan.axis.copy(), amp, meta)


def efficiency_envelope(spectra):
    """Pointwise mean, min and max intensity over realizations sharing one axis."""
    spectra = list(spectra)
    if not spectra:
        raise ValueError("need at least one spectrum")
    axis = spectra[0].axis
    for s in spectra[1:]:
        if not np.array_equal(s.axis, axis):
            raise AxisMismatch("spectra do not share the same axis")
    stack = np.vstack([s.intensity for s in spectra])
    return stack.mean(axis=0), stack.min(axis=0), stack.max(axis=0)
