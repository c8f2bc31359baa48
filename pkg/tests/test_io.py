import json

import numpy as np
import pytest

from fabtol.dispersion import assign_qpm_period, get_preset, tabulate
from fabtol.io import (
    read_neff_table,
    read_profile,
    read_spectrum_csv,
    write_neff_table,
    write_profile,
    write_spectrum,
)
from fabtol.noise import NoiseSpec, generate_profile
from fabtol.phasematch import auto_scan, integrate_spectrum, scan_from_dict


@pytest.fixture(scope="module")
def table(tiln):
    return tabulate(tiln, np.linspace(700e-9, 1650e-9, 8), np.linspace(6.0, 20.0, 6))


def test_neff_table_round_trip(tmp_path, table):
    path = tmp_path / "neff.csv"
    write_neff_table(path, table)
    back = read_neff_table(path)
    for pol in table.polarizations:
        for a, b in zip(table.grid(pol), back.grid(pol)):
            np.testing.assert_allclose(a, b, rtol=1e-15)


def test_neff_rows_any_order(tmp_path, table):
    path = tmp_path / "neff.csv"
    write_neff_table(path, table)
    lines = path.read_text().splitlines()
    shuffled = tmp_path / "shuffled.csv"
    body = lines[1:]
    np.random.default_rng(1).shuffle(body)
    shuffled.write_text("\n".join([lines[0]] + body) + "\n")
    a, b = read_neff_table(path), read_neff_table(shuffled)
    assert a.n_eff(1200e-9, 9.3, "e") == b.n_eff(1200e-9, 9.3, "e")


def test_neff_incomplete_or_duplicate(tmp_path, table):
    path = tmp_path / "neff.csv"
    write_neff_table(path, table)
    lines = path.read_text().splitlines()
    (tmp_path / "short.csv").write_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises(ValueError, match="incomplete"):
        read_neff_table(tmp_path / "short.csv")
    (tmp_path / "dup.csv").write_text("\n".join(lines + [lines[-1]]) + "\n")
    with pytest.raises(ValueError, match="duplicate"):
        read_neff_table(tmp_path / "dup.csv")
    (tmp_path / "hdr.csv").write_text("pol,lam,w,n\n")
    with pytest.raises(ValueError, match="header"):
        read_neff_table(tmp_path / "hdr.csv")


def test_profile_round_trip_bit_exact(tmp_path):
    p = generate_profile(0.02, 7.0, NoiseSpec(1.0, 0.3, 77))
    write_profile(tmp_path / "p.csv", p)
    back = read_profile(tmp_path / "p.csv")
    assert back == p
    assert back.meta["seed"] == 77


def test_spectrum_written_with_sidecar(tmp_path, tiln):
    proc = assign_qpm_period(tiln, get_preset("type0_pdc"), 7.0)
    profile = generate_profile(0.01, 7.0, NoiseSpec(1.0, 0.3, 1))
    scan = auto_scan(tiln, proc, 0.01, 7.0, scan_from_dict(proc, {"degenerate_shg": True}),
                     n_points=101)
    spec = integrate_spectrum(tiln, proc, profile, scan)
    write_spectrum(tmp_path / "s.csv", spec)
    axis_nm, inten, phase = read_spectrum_csv(tmp_path / "s.csv")
    np.testing.assert_array_equal(axis_nm, spec.axis * 1e9)
    np.testing.assert_array_equal(inten, spec.intensity)
    np.testing.assert_array_equal(phase, spec.phase)
    meta = json.loads((tmp_path / "s.json").read_text())
    assert meta["seed"] == 1 and meta["L_mm"] == pytest.approx(10.0)
