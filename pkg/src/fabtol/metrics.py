"""Figures of merit derived from phasematching spectra."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT

from .errors import EmptySpectrum, NoPeak

FOUR_LN2 = 4 * math.log(2)


@dataclass(frozen=True)
class GaussianFit:
    amplitude: float
    center: float
    fwhm: float
    residual_rms: float
    converged: bool
    iterations: int = 0


@dataclass(frozen=True)
class SqueezingInputs:
    """Single-pass squeezer parameters.

    eta_norm : normalized conversion efficiency [1/(W cm^2)]
    p_in : pump power [W]
    alpha_db_per_cm : loss of the squeezed field [dB/cm]
    length_cm : device length [cm]
    """

    eta_norm: float
    p_in: float
    alpha_db_per_cm: float
    length_cm: float

    def __post_init__(self):
        for name in ("eta_norm", "p_in", "alpha_db_per_cm", "length_cm"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


def max_efficiency(spectrum):
    """Peak intensity ``max |phi|^2`` of a normalized spectrum."""
    intensity = np.abs(np.asarray(spectrum.amplitude)) ** 2
    if intensity.size == 0:
        raise EmptySpectrum("spectrum has no samples")
    return float(intensity.max())


def _gaussian(x, a, x0, f):
    return a * np.exp(-FOUR_LN2 * (x - x0) ** 2 / f ** 2)


def _half_max_width(x, y, i_peak):
    half = y[i_peak] / 2

    def crossing(step):
        i = i_peak
        while 0 <= i + step < y.size and y[i + step] > half:
            i += step
        j = i + step
        if not 0 <= j < y.size:
            return x[i]
        # linear interpolation between the last sample above and the first below
        return x[i] + (half - y[i]) * (x[j] - x[i]) / (y[j] - y[i])

    return abs(crossing(1) - crossing(-1))


def fit_gaussian(x, y, max_iter=200, rtol=1e-9):
    """Least-squares fit of ``A exp(-4 ln2 (x - x0)^2 / F^2)`` to samples.

    Damped Gauss-Newton: each step is halved until the residual decreases.
    Convergence is declared when the relative parameter change drops below
    `rtol`; after `max_iter` iterations the best iterate is returned with
    ``converged=False``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if y.size < 4:
        raise NoPeak("need at least 4 samples to fit a Gaussian")
    i_peak = int(np.argmax(y))
    peak = y[i_peak]
    median = float(np.median(y))
    if not peak > 10 * median or np.count_nonzero(y == peak) > 1 or peak <= 0:
        raise NoPeak("spectrum has no unique peak above 10x the median intensity")

    # work in units centred on the peak and scaled by the initial width
    x_ref = x[i_peak]
    f0 = _half_max_width(x, y, i_peak)
    if not f0 > 0:
        f0 = abs(x[-1] - x[0]) / 10
    u = (x - x_ref) / f0
    v = y / peak
    p = np.array([1.0, 0.0, 1.0])

    def residual(p):
        return v - _gaussian(u, *p)

    r = residual(p)
    cost = r @ r
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        a, x0, f = p
        g = np.exp(-FOUR_LN2 * (u - x0) ** 2 / f ** 2)
        jac = np.column_stack([
            g,
            a * g * 2 * FOUR_LN2 * (u - x0) / f ** 2,
            a * g * 2 * FOUR_LN2 * (u - x0) ** 2 / f ** 3,
        ])
        step, *_ = np.linalg.lstsq(jac, r, rcond=None)
        t = 1.0
        for _ in range(40):
            trial = p + t * step
            if trial[2] > 0:
                r_trial = residual(trial)
                cost_trial = r_trial @ r_trial
                if cost_trial <= cost:
                    break
            t /= 2
        else:
            break
        # parameters are O(1) in the scaled frame, so near-zero offsets use an absolute floor
        change = np.max(np.abs(trial - p) / np.maximum(np.abs(trial), 1.0))
        p, r, cost = trial, r_trial, cost_trial
        if change < rtol:
            converged = True
            break
    a, x0, f = p
    return GaussianFit(
        amplitude=float(a * peak),
        center=float(x_ref + x0 * f0),
        fwhm=float(abs(f) * f0),
        residual_rms=float(math.sqrt(cost / y.size) * peak),
        converged=converged,
        iterations=it,
    )


def gaussian_fwhm(spectrum):
    """Gaussian fit to the intensity of `spectrum`; FWHM is in axis units."""
    return fit_gaussian(spectrum.axis, np.abs(spectrum.amplitude) ** 2)


def eta_norm(peak_efficiency, eta_ideal):
    """Normalized conversion efficiency of a degraded device.

    The per-unit-length normalized peak rescales the normalized efficiency
    `eta_ideal` of the perfect device (same units as `eta_ideal`).
    """
    if not 0.0 <= peak_efficiency <= 1.0 + 1e-9:
        raise ValueError(f"peak efficiency {peak_efficiency} outside [0, 1]")
    if eta_ideal <= 0:
        raise ValueError("eta_ideal must be > 0")
    return eta_ideal * peak_efficiency


def squeezing_factor(inputs):
    """Output noise variance relative to shot noise (linear)."""
    alpha = math.log(10) / 10 * inputs.alpha_db_per_cm
    gain = math.sqrt(inputs.eta_norm * inputs.p_in) * inputs.length_cm
    loss = math.exp(-alpha * inputs.length_cm)
    return math.exp(-2 * gain) * loss + 1 - loss


def squeezing_db(inputs):
    """Single-pass squeezing in dB; negative values are below shot noise."""
    return 10 * math.log10(squeezing_factor(inputs))


def n_bins(delta_lambda, delta_b):
    """Number of frequency bins of width `delta_b` spaced by ``delta_b / 2``.

    Both arguments share one unit. Evaluated with exact rational arithmetic on
    the given floats, so representable ratios are not lost to rounding.
    """
    if delta_b <= 0:
        raise ValueError("delta_b must be > 0")
    return math.floor(Fraction(delta_lambda) / (Fraction(3, 2) * Fraction(delta_b)))


def wavelength_to_frequency_width(delta_lambda, center_wavelength):
    """First-order conversion ``c * d_lambda / lambda^2`` (metres in, Hz out)."""
    return SPEED_OF_LIGHT * delta_lambda / center_wavelength ** 2


def bcf(delta_nu_in, fwhm_out, center_wavelength=None):
    """Bandwidth compression factor ``delta_nu_in / delta_nu_out``.

    `fwhm_out` is a frequency width in the units of `delta_nu_in`, or, when
    `center_wavelength` is given, a wavelength width in metres converted to Hz
    (then `delta_nu_in` must be in Hz).
    """
    if fwhm_out <= 0:
        raise ValueError("fwhm_out must be > 0")
    if center_wavelength is not None:
        fwhm_out = wavelength_to_frequency_width(fwhm_out, center_wavelength)
    return delta_nu_in / fwhm_out
