import numpy as np
import pytest

from fabtol.dispersion import GAMMA, assign_qpm_period, delta_beta, get_preset
from fabtol.errors import AxisMismatch, MissingPeriod, OutOfRange
from fabtol.dispersion import tabulate
from fabtol.noise import NoiseSpec, WidthProfile, constant_profile, generate_profile
from fabtol.phasematch import (
    ScanSpec,
    Spectrum,
    auto_scan,
    efficiency_envelope,
    homogeneous_spectrum,
    ideal_sinc,
    integrate_spectrum,
    scan_from_dict,
    scan_wavelengths,
)

L = 0.02
W0 = 7.0


@pytest.fixture(scope="module")
def shg(tiln):
    proc = assign_qpm_period(tiln, get_preset("type0_pdc"), W0)
    template = scan_from_dict(proc, {"degenerate_shg": True})
    scan = auto_scan(tiln, proc, L, W0, template, n_points=601, n_zeros=6)
    return proc, scan


def two_segment_oracle(db_a, db_b, length):
    # closed form of the piecewise-constant integral, grating absorbed into db
    q = length / 4
    return (0.5 * np.sinc(db_a * q / np.pi) * np.exp(1j * db_a * q)
            + 0.5 * np.exp(1j * db_a * length / 2) * np.sinc(db_b * q / np.pi)
            * np.exp(1j * db_b * q))


def test_ideal_sinc_points():
    assert ideal_sinc([0.0]).intensity[0] == 1.0
    assert ideal_sinc([GAMMA]).intensity[0] == pytest.approx(0.5, abs=1e-9)
    assert ideal_sinc([np.pi]).intensity[0] == pytest.approx(0.0, abs=1e-12)
    assert ideal_sinc([-GAMMA]).intensity[0] == pytest.approx(0.5, abs=1e-9)


def test_scan_wavelengths_conserve_energy():
    proc = get_preset("type2_pdc")
    scan = ScanSpec(np.linspace(1540e-9, 1560e-9, 11), variable="wave1", fixed="wave3")
    l3, l2, l1 = scan_wavelengths(proc, scan)
    np.testing.assert_allclose(1 / l3, 1 / l2 + 1 / l1, rtol=1e-14)
    assert np.all(l3 == proc.wave3.wavelength)


def test_scan_validation():
    with pytest.raises(ValueError):
        ScanSpec([1.0, 0.5, 2.0])
    with pytest.raises(ValueError):
        ScanSpec([1.0], variable="wave1", fixed="wave1")
    with pytest.raises(ValueError):
        ScanSpec([1.0], variable="pump", fixed="wave1")


def test_homogeneous_oracle(tiln, shg):
    proc, scan = shg
    profile = constant_profile(L, W0, dz=50e-6)
    got = integrate_spectrum(tiln, proc, profile, scan)
    ref = homogeneous_spectrum(tiln, proc, W0, L, scan)
    assert np.max(np.abs(got.intensity - ref.intensity)) <= 1e-6
    assert np.max(np.abs(got.amplitude - ref.amplitude)) <= 1e-9
    # the design wavelength sits on the centre sample
    assert got.intensity[scan.axis.size // 2] == pytest.approx(1.0, abs=1e-9)


def test_homogeneous_matches_sinc_of_mismatch(tiln, shg):
    proc, scan = shg
    ref = homogeneous_spectrum(tiln, proc, W0, L, scan)
    lams = scan_wavelengths(proc, scan)
    x = (delta_beta(tiln, proc, W0, wavelengths=lams) - proc.grating_vector) * L / 2
    np.testing.assert_allclose(ref.intensity, ideal_sinc(x).intensity, rtol=0, atol=1e-15)
    # auto_scan spans six zeros either side (linear estimate, so only roughly)
    assert abs(x[0]) == pytest.approx(6 * np.pi, rel=2e-2)
    assert abs(x[-1]) == pytest.approx(6 * np.pi, rel=2e-2)


def test_riemann_scheme_converges_but_misses_oracle(tiln, shg):
    proc, scan = shg
    ref = homogeneous_spectrum(tiln, proc, W0, L, scan).intensity
    errs = []
    for dz in (50e-6, 25e-6):
        spec = integrate_spectrum(tiln, proc, constant_profile(L, W0, dz), scan, scheme="riemann")
        errs.append(np.max(np.abs(spec.intensity - ref)))
    # the left-endpoint sum is too coarse at 50 um for a 1e-6 intensity budget
    assert errs[0] > 1e-6
    assert errs[1] < errs[0] / 1.9


@pytest.mark.parametrize("wa,wb", [(7.0, 7.3), (7.0, 6.6), (12.0, 14.0)])
def test_two_segment_oracle(tiln, shg, wa, wb):
    proc, scan = shg
    n = 400
    widths = np.where(np.arange(n) < n // 2, wa, wb)
    profile = WidthProfile(L / n, widths, W0)
    got = integrate_spectrum(tiln, proc, profile, scan, accelerate=False)
    lams = scan_wavelengths(proc, scan)
    db_a = delta_beta(tiln, proc, wa, wavelengths=lams) - proc.grating_vector
    db_b = delta_beta(tiln, proc, wb, wavelengths=lams) - proc.grating_vector
    assert np.max(np.abs(got.amplitude - two_segment_oracle(db_a, db_b, L))) <= 1e-9


def test_spline_shortcut_is_audited(tiln, shg):
    proc, scan = shg
    profile = generate_profile(L, W0, NoiseSpec(1.0, 0.5, 5))
    fast = integrate_spectrum(tiln, proc, profile, scan)
    slow = integrate_spectrum(tiln, proc, profile, scan, accelerate=False)
    assert fast.meta["accelerated"] is True
    assert fast.meta["audit_error"] < 1e-8
    assert np.max(np.abs(fast.amplitude - slow.amplitude)) < 1e-8


def test_table_provider_path(tiln, shg):
    proc, scan = shg
    table = tabulate(tiln, np.linspace(700e-9, 1650e-9, 60), np.linspace(5.5, 22.0, 34))
    profile = generate_profile(L, W0, NoiseSpec(1.0, 0.2, 5))
    spec = integrate_spectrum(table, proc, profile, scan)
    ref = integrate_spectrum(tiln, proc, profile, scan)
    assert spec.meta["accelerated"] is False
    assert np.max(np.abs(spec.intensity - ref.intensity)) < 0.05


def test_errors(tiln, shg):
    proc, scan = shg
    with pytest.raises(MissingPeriod):
        integrate_spectrum(tiln, get_preset("type0_pdc"), constant_profile(L, W0), scan)
    with pytest.raises(OutOfRange):
        integrate_spectrum(tiln, proc, constant_profile(L, 30.0), scan)


def test_unpoled_process_is_not_phasematched(tiln, shg):
    proc, scan = shg
    spec = integrate_spectrum(tiln, proc.with_period("unpoled"), constant_profile(L, W0), scan)
    assert spec.intensity.max() < 1e-3


def test_efficiency_envelope(tiln, shg):
    proc, scan = shg
    one = integrate_spectrum(tiln, proc, constant_profile(L, W0), scan)
    mean, lo, hi = efficiency_envelope([one])
    assert np.array_equal(mean, one.intensity) and np.array_equal(lo, hi)
    mean, lo, hi = efficiency_envelope([one, one])
    assert np.array_equal(lo, hi)

    specs = [integrate_spectrum(tiln, proc, generate_profile(L, W0, NoiseSpec(1.0, 0.5, s)), scan)
             for s in range(40)]
    mean, lo, hi = efficiency_envelope(specs)
    stack = np.vstack([s.intensity for s in specs])
    assert np.array_equal(lo, stack.min(axis=0)) and np.array_equal(hi, stack.max(axis=0))
    assert np.all((stack >= lo) & (stack <= hi))

    other = Spectrum(scan.axis * 1.0001, one.amplitude)
    with pytest.raises(AxisMismatch):
        efficiency_envelope([one, other])
