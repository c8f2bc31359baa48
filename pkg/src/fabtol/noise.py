"""Random waveguide-width profiles with a power-law noise spectrum.

A profile is synthesized in the spatial-frequency domain: every bin ``k`` gets
the amplitude ``|f_k|**-gamma`` and a uniformly random phase, with Hermitian
pairing so the inverse FFT is real. The sequence is then shifted and scaled to
the requested mean width and maximum absolute deviation.

Random phases come from numpy's PCG64 bit generator, which produces the same
stream on every platform for a given 64-bit seed.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import MeshTooCoarse, UpsampleOnly, WidthWindowExceeded

SEED_MASK = (1 << 64) - 1


def split_seed(master_seed, realization):
    """Seed of realization `realization` in a run seeded with `master_seed`."""
    return (int(master_seed) ^ int(realization)) & SEED_MASK


@dataclass(frozen=True)
class NoiseSpec:
    gamma: float
    delta_w: float
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 2.0:
            raise ValueError(f"gamma must lie in [0, 2], got {self.gamma}")
        if self.delta_w < 0:
            raise ValueError(f"delta_w must be >= 0, got {self.delta_w}")
        if not 0 <= int(self.seed) <= SEED_MASK:
            raise ValueError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True, eq=False)
class WidthProfile:
    """Width ``widths[m]`` [um] held on the segment ``[z_m, z_m + dz)``.

    Positions `z0` and `dz` are in metres; the device length is ``N * dz``.
    """

    dz: float
    widths: np.ndarray
    nominal_width: float
    z0: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def n(self):
        return len(self.widths)

    @property
    def length(self):
        return self.n * self.dz

    @property
    def z(self):
        return self.z0 + self.dz * np.arange(self.n)

    def __eq__(self, other):
        if not isinstance(other, WidthProfile):
            return NotImplemented
        return (self.dz == other.dz and self.z0 == other.z0
                and self.nominal_width == other.nominal_width
                and np.array_equal(self.widths, other.widths))


def spatial_frequencies(n, dz):
    """Integer bin indices ``k`` in ``[-n/2, n/2)`` and frequencies ``k / (n dz)``."""
    k = np.arange(-(n // 2), n - n // 2)
    return k, k / (n * dz)


def synthesize_noise(n, dz, gamma, seed):
    """Complex inverse FFT of a random ``|f|**-gamma`` spectrum.

    The zero-frequency bin is zero and, for even `n`, the unpaired Nyquist bin
    is real with a random sign. The imaginary part of the result is rounding
    noise only.
    """
    if n < 2:
        raise MeshTooCoarse(f"need at least 2 mesh points, got {n}")
    rng = np.random.Generator(np.random.PCG64(int(seed)))
    length = n * dz
    n_pos = (n - 1) // 2  # paired bins k = 1 .. n_pos
    k_pos = np.arange(1, n_pos + 1)
    phases = 2 * np.pi * rng.random(n_pos)
    spectrum = np.zeros(n, dtype=complex)  # numpy FFT order
    positive = (k_pos / length) ** -gamma * np.exp(1j * phases)
    spectrum[k_pos] = positive
    spectrum[-k_pos] = np.conj(positive)
    if n % 2 == 0:
        sign = 1.0 if rng.random() < 0.5 else -1.0
        spectrum[n // 2] = sign * ((n // 2) / length) ** -gamma
    return np.fft.ifft(spectrum)


def generate_profile(length, w0, spec, dz=50e-6):
    """Random width profile of a device of `length` metres.

    Parameters
    ----------
    length, dz : float
        Device length and mesh pitch in metres; ``N = round(length / dz)``.
    w0 : float
        Mean width in um.
    spec : NoiseSpec
        Spectral exponent, maximum deviation [um] and seed.
    """
    n = int(round(length / dz))
    if n < 2:
        raise MeshTooCoarse(f"length {length} m with dz {dz} m gives {n} < 2 mesh points")
    meta = {"gamma": spec.gamma, "delta_w_um": spec.delta_w, "seed": int(spec.seed)}
    if spec.delta_w == 0:
        return WidthProfile(dz, np.full(n, float(w0)), float(w0), meta=meta)
    raw = synthesize_noise(n, dz, spec.gamma, spec.seed).real
    dev = raw - raw.mean()
    scale = np.max(np.abs(dev))
    widths = w0 + dev * (spec.delta_w / scale)
    return WidthProfile(dz, widths, float(w0), meta=meta)


def check_profile_window(profile, provider):
    lo, hi = provider.width_range
    wmin, wmax = float(np.min(profile.widths)), float(np.max(profile.widths))
    if wmin < lo or wmax > hi:
        raise WidthWindowExceeded(
            f"profile widths [{wmin:.4f}, {wmax:.4f}] um leave the provider window "
            f"[{lo}, {hi}] um")


def resample_profile(profile, dz_new):
    """Linearly interpolate `profile` onto a finer mesh of pitch `dz_new`.

    The device length is kept; the first sample is unchanged and samples past
    the last original node take its value. No renormalization is applied.
    """
    if dz_new > profile.dz * (1 + 1e-12):
        raise UpsampleOnly(f"dz_new = {dz_new} exceeds the original pitch {profile.dz}")
    if dz_new == profile.dz:
        return WidthProfile(profile.dz, profile.widths.copy(), profile.nominal_width,
                            profile.z0, dict(profile.meta))
    m = int(round(profile.length / dz_new))
    z_new = profile.z0 + dz_new * np.arange(m)
    widths = np.interp(z_new, profile.z, profile.widths)
    return WidthProfile(dz_new, widths, profile.nominal_width, profile.z0, dict(profile.meta))


def constant_profile(length, w0, dz=50e-6):
    n = int(round(length / dz))
    if n < 2:
        raise MeshTooCoarse(f"{n} < 2 mesh points")
    return WidthProfile(dz, np.full(n, float(w0)), float(w0))


def periodogram(values):
    """One-sided periodogram ``|FFT(x - mean)|^2`` for bins ``1 .. N/2``."""
    x = np.asarray(values, dtype=float)
    power = np.abs(np.fft.rfft(x - x.mean())) ** 2
    k = np.arange(power.size)
    return k[1:], power[1:]
