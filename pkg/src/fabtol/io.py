"""Plain-text file formats: n_eff tables, width profiles and spectra.

Floats are written with ``repr`` so every file round-trips bit-exactly.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .dispersion import TableProvider
from .noise import WidthProfile

NEFF_HEADER = ["polarization", "wavelength_nm", "width_um", "n_eff"]
PROFILE_HEADER = ["z_um", "width_um"]
SPECTRUM_HEADER = ["axis_nm", "intensity", "phase_rad"]


def sidecar_path(path):
    return Path(path).with_suffix(".json")


def read_neff_table(path):
    """Load an n_eff table CSV into a :class:`TableProvider`.

    Rows may come in any order, but each polarization must cover the full
    wavelength x width grid exactly once.
    """
    rows = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != NEFF_HEADER:
            raise ValueError(f"{path}: expected header {','.join(NEFF_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise ValueError(f"{path}:{lineno}: expected 4 fields, got {len(row)}")
            pol = row[0].strip()
            key = (float(row[1]), float(row[2]))
            table = rows.setdefault(pol, {})
            if key in table:
                raise ValueError(f"{path}:{lineno}: duplicate entry {pol} {key}")
            table[key] = float(row[3])
    grids = {}
    for pol, table in rows.items():
        wls = np.array(sorted({k[0] for k in table}))
        ws = np.array(sorted({k[1] for k in table}))
        if len(table) != wls.size * ws.size:
            raise ValueError(f"{path}: polarization {pol!r} grid is incomplete "
                             f"({len(table)} of {wls.size * ws.size} entries)")
        n = np.array([[table[(wl, w)] for w in ws] for wl in wls])
        grids[pol] = (wls * 1e-9, ws, n)
    return TableProvider(grids, name=f"table:{path}")


def write_neff_table(path, provider):
    """Write the nodes of a :class:`TableProvider` as an n_eff CSV."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(NEFF_HEADER)
        for pol in provider.polarizations:
            wls, ws, n = provider.grid(pol)
            for i, wl in enumerate(wls):
                for j, w in enumerate(ws):
                    writer.writerow([pol, repr(float(wl * 1e9)), repr(float(w)),
                                     repr(float(n[i, j]))])


def write_profile(path, profile):
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PROFILE_HEADER)
        for z, w in zip(profile.z, profile.widths):
            writer.writerow([repr(float(z * 1e6)), repr(float(w))])
    meta = {
        "seed": profile.meta.get("seed"),
        "gamma": profile.meta.get("gamma"),
        "delta_w_um": profile.meta.get("delta_w_um"),
        "w0_um": profile.nominal_width,
        "dz_um": profile.dz * 1e6,
        "dz_m": profile.dz,
    }
    sidecar_path(path).write_text(json.dumps(meta, indent=2) + "\n")


def read_profile(path):
    path = Path(path)
    meta = json.loads(sidecar_path(path).read_text())
    widths = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != PROFILE_HEADER:
            raise ValueError(f"{path}: expected header {','.join(PROFILE_HEADER)}")
        for row in reader:
            if row:
                widths.append(float(row[1]))
    dz = meta.get("dz_m")
    if dz is None:
        dz = meta["dz_um"] * 1e-6
    extra = {k: meta.get(k) for k in ("seed", "gamma", "delta_w_um") if meta.get(k) is not None}
    return WidthProfile(float(dz), np.array(widths), float(meta["w0_um"]), meta=extra)


def write_spectrum(path, spectrum, meta=None):
    """Write ``axis_nm,intensity,phase_rad`` rows plus a JSON metadata sidecar."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SPECTRUM_HEADER)
        for x, i, ph in zip(spectrum.axis, spectrum.intensity, spectrum.phase):
            writer.writerow([repr(float(x * 1e9)), repr(float(i)), repr(float(ph))])
    m = spectrum.meta
    info = {
        "process": m.get("process"),
        "L_mm": m.get("L_m", 0.0) * 1e3,
        "dz_um": m.get("dz_m", 0.0) * 1e6,
        "seed": m.get("seed"),
        "gamma": m.get("gamma"),
        "delta_w_um": m.get("delta_w_um"),
    }
    if meta:
        info.update(meta)
    sidecar_path(path).write_text(json.dumps(info, indent=2) + "\n")


def read_spectrum_csv(path):
    """Return ``(axis_nm, intensity, phase_rad)`` arrays from a spectrum CSV."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0], data[:, 1], data[:, 2]
