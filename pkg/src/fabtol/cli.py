"""Command-line front end.

Exit codes: 0 success, 1 model/runtime error, 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .dispersion import (
    assign_qpm_period,
    load_presets,
    noncritical_widths,
    provider_from_spec,
    sensitivity,
)
from .dispersion import l_max as l_max_formula
from .errors import ConfigError, FabTolError, InfiniteTolerance
from .io import read_profile, write_profile, write_spectrum
from .metrics import SqueezingInputs, bcf, n_bins, squeezing_db, squeezing_factor
from .montecarlo import ExperimentConfig, run_experiment, write_dataset
from .noise import NoiseSpec, check_profile_window, generate_profile
from .phasematch import auto_scan, integrate_spectrum, scan_from_dict


class UsageError(Exception):
    pass


def _parse_grid(text):
    """``"0.1,0.2"`` or ``"start:stop:step"`` (inclusive) into a list of floats."""
    text = text.strip()
    if ":" in text:
        start, stop, step = (float(t) for t in text.split(":"))
        n = int(np.floor((stop - start) / step + 1e-9))
        return [round(start + i * step, 12) for i in range(n + 1)]
    return [float(t) for t in text.split(",") if t.strip()]


def _process(name):
    presets = load_presets()
    if name not in presets:
        raise UsageError(f"unknown process preset {name!r}; run 'fabtol presets list'")
    return presets[name]


def _provider(args):
    try:
        return provider_from_spec(args.provider)
    except (KeyError, ValueError, OSError) as exc:
        raise UsageError(f"--provider: {exc}") from None


def _emit_csv(args, name, header, rows):
    if args.out is None:
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        return
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / name, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    print(out / name)


def cmd_presets(args):
    for name, (proc, scan) in sorted(load_presets().items()):
        lams = ", ".join(f"{w.wavelength * 1e9:.2f} nm {w.polarization}"
                         f"{'' if w.direction == 1 else ' (backward)'}" for w in proc.waves)
        print(f"{name}: {lams}")
    return 0


def cmd_sensitivity(args):
    provider = _provider(args)
    proc, _ = _process(args.process)
    lo, hi = provider.width_range
    w_min = args.w_min if args.w_min is not None else lo + args.h
    w_max = args.w_max if args.w_max is not None else hi - args.h
    widths = _parse_grid(f"{w_min}:{w_max}:{args.step}")
    s = sensitivity(provider, proc, np.array(widths), h=args.h, one_sided=args.one_sided)
    rows = [[repr(w), repr(float(v))] for w, v in zip(widths, np.atleast_1d(s))]
    _emit_csv(args, f"sensitivity_{args.process}.csv",
              ["width_um", "sensitivity_rad_per_m_um"], rows)
    return 0


def cmd_lmax(args):
    provider = _provider(args)
    proc, _ = _process(args.process)
    widths = []
    for token in args.widths.split(","):
        token = token.strip()
        if token == "noncritical":
            widths += [(w, True) for w in noncritical_widths(provider, proc)]
        elif token:
            widths.append((float(token), False))
    rows = []
    for w, is_root in widths:
        s = float(sensitivity(provider, proc, w, h=args.h))
        for dw in _parse_grid(args.delta_w):
            try:
                if is_root or abs(s) <= args.zero_tol:
                    raise InfiniteTolerance("noncritical")
                value, status = repr(l_max_formula(s, dw) * 1e3), "ok"
            except InfiniteTolerance:
                value, status = "", "unbounded"
            rows.append([repr(w), repr(dw), repr(s), value, status])
    _emit_csv(args, f"lmax_{args.process}.csv",
              ["width_um", "delta_w_um", "sensitivity_rad_per_m_um", "l_max_mm", "status"], rows)
    return 0


def cmd_profile(args):
    provider = _provider(args)
    spec = NoiseSpec(args.gamma, args.delta_w, args.seed)
    profile = generate_profile(args.length_mm * 1e-3, args.w0, spec, dz=args.dz_um * 1e-6)
    check_profile_window(profile, provider)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    path = out / args.name
    write_profile(path, profile)
    print(path)
    return 0


def _scan_template(proc, default, text):
    if text is None:
        return scan_from_dict(proc, default)
    if text == "shg":
        return scan_from_dict(proc, {"degenerate_shg": True})
    variable, _, fixed = text.partition(":")
    try:
        return scan_from_dict(proc, {"variable": variable, "fixed": fixed or "wave2"})
    except ValueError as exc:
        raise UsageError(f"--scan: {exc}") from None


def cmd_spectrum(args):
    provider = _provider(args)
    base, default_scan = _process(args.process)
    length = args.length_mm * 1e-3
    if args.profile:
        profile = read_profile(args.profile)
        length = profile.length
        w0 = profile.nominal_width
    else:
        w0 = args.w0
        spec = NoiseSpec(args.gamma, args.delta_w, args.seed)
        profile = generate_profile(length, w0, spec, dz=args.dz_um * 1e-6)
    check_profile_window(profile, provider)
    proc = assign_qpm_period(provider, base, w0)
    template = _scan_template(proc, default_scan, args.scan)
    scan = auto_scan(provider, proc, length, w0, template, n_points=args.points,
                     n_zeros=args.zeros)
    spectrum = integrate_spectrum(provider, proc, profile, scan, scheme=args.scheme)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    path = out / args.name
    write_spectrum(path, spectrum, {"w0_um": w0, "provider": args.provider,
                                    "qpm_period_um": proc.qpm_period * 1e6})
    print(path)
    return 0


def cmd_ensemble(args):
    config = ExperimentConfig.from_file(args.config)
    if args.seed_given:
        config.master_seed = args.seed
    dataset = run_experiment(config, threads=args.threads)
    out = Path(args.out or "ensemble_out")
    for path in write_dataset(dataset, out, config_path=args.config):
        print(path)
    if dataset.failures:
        for key, msg in dataset.failures.items():
            print(f"fabtol: cell {tuple(key)} failed: {msg}", file=sys.stderr)
        return 1
    return 0


def cmd_squeezing(args):
    inputs = SqueezingInputs(args.eta, args.p_in, args.alpha, args.length_cm)
    print("S_linear,S_db")
    print(f"{squeezing_factor(inputs)!r},{squeezing_db(inputs)!r}")
    return 0


def cmd_bins(args):
    print(n_bins(args.band_nm, args.delta_b_nm))
    return 0


def cmd_bcf(args):
    if args.nu_out_ghz is not None:
        value = bcf(args.nu_in_ghz, args.nu_out_ghz)
    elif args.fwhm_nm is not None and args.center_nm is not None:
        value = bcf(args.nu_in_ghz * 1e9, args.fwhm_nm * 1e-9, args.center_nm * 1e-9)
    else:
        raise UsageError("bcf needs --nu-out-ghz, or --fwhm-nm together with --center-nm")
    print(repr(value))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="fabtol", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"fabtol {__version__}")
    parser.add_argument("--provider", default="surrogate:ti-ln",
                        help="table:<csv path> or surrogate:<ti-ln|flat|monotone>")
    parser.add_argument("--seed", type=int, default=None,
                        help="random seed (overrides the config master_seed)")
    parser.add_argument("--threads", type=int, default=1, help="parallel work units")
    parser.add_argument("--out", default=None, help="output directory")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("presets", help="list process presets")
    p.add_argument("action", choices=["list"])
    p.set_defaults(func=cmd_presets)

    p = sub.add_parser("sensitivity", help="d(delta_beta)/dw versus width")
    p.add_argument("--process", required=True)
    p.add_argument("--w-min", type=float)
    p.add_argument("--w-max", type=float)
    p.add_argument("--step", type=float, default=0.25)
    p.add_argument("--h", type=float, default=0.05, help="finite-difference step [um]")
    p.add_argument("--one-sided", action="store_true",
                   help="allow one-sided differences at the window edges")
    p.set_defaults(func=cmd_sensitivity)

    p = sub.add_parser("lmax", help="maximum length versus width error")
    p.add_argument("--process", required=True)
    p.add_argument("--widths", default="7,13,18",
                   help="comma list of widths [um]; 'noncritical' adds the sensitivity roots")
    p.add_argument("--delta-w", default="0.05:0.5:0.05", help="list or start:stop:step [um]")
    p.add_argument("--h", type=float, default=0.05)
    p.add_argument("--zero-tol", type=float, default=0.0,
                   help="|sensitivity| at or below this is reported unbounded")
    p.set_defaults(func=cmd_lmax)

    p = sub.add_parser("profile", help="generate a random width profile")
    _noise_args(p)
    p.add_argument("--name", default="profile.csv")
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("spectrum", help="phasematching spectrum of one device")
    p.add_argument("--process", required=True)
    _noise_args(p)
    p.add_argument("--profile", help="width profile CSV (with JSON sidecar)")
    p.add_argument("--scan", help="'shg' or '<variable>:<fixed>', e.g. wave1:wave2")
    p.add_argument("--points", type=int, default=501)
    p.add_argument("--zeros", type=float, default=6.0)
    p.add_argument("--scheme", choices=["exact", "riemann"], default="exact")
    p.add_argument("--name", default="spectrum.csv")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("ensemble", help="run an experiment config")
    p.add_argument("config")
    p.set_defaults(func=cmd_ensemble)

    p = sub.add_parser("squeezing", help="single-pass squeezing")
    p.add_argument("--eta", type=float, required=True, help="eta_norm [1/(W cm^2)]")
    p.add_argument("--p-in", type=float, required=True, help="pump power [W]")
    p.add_argument("--alpha", type=float, default=0.1, help="loss [dB/cm]")
    p.add_argument("--length-cm", type=float, required=True)
    p.set_defaults(func=cmd_squeezing)

    p = sub.add_parser("bins", help="number of frequency bins")
    p.add_argument("--band-nm", type=float, default=40.0)
    p.add_argument("--delta-b-nm", type=float, required=True)
    p.set_defaults(func=cmd_bins)

    p = sub.add_parser("bcf", help="bandwidth compression factor")
    p.add_argument("--nu-in-ghz", type=float, default=963.0)
    p.add_argument("--nu-out-ghz", type=float)
    p.add_argument("--fwhm-nm", type=float)
    p.add_argument("--center-nm", type=float)
    p.set_defaults(func=cmd_bcf)
    return parser


def _noise_args(p):
    p.add_argument("--length-mm", type=float, default=20.0)
    p.add_argument("--w0", type=float, default=7.0, help="mean width [um]")
    p.add_argument("--delta-w", type=float, default=0.0, help="max width error [um]")
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--dz-um", type=float, default=50.0)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    args.seed_given = args.seed is not None
    if args.seed is None:
        args.seed = 0
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"fabtol: error: {exc}", file=sys.stderr)
        return 2
    except (FabTolError, ValueError, OSError) as exc:
        print(f"fabtol: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
