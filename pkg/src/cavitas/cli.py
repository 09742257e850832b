"""Command-line front end.

Subcommands: params, spectrum, sweep-detuning, sweep-position, simulate,
fit, crossing-fit, position-fit, cooperativity.  Exit codes: 0 success,
2 validation/config error, 3 fit non-convergence, 4 simulation instability.
Human summaries quote frequencies as "2pi x kHz"; files carry plain Hz.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import replace

import numpy as np

from . import io
from .config import (ExperimentSpec, apply_overrides, default_config_path,
                     load_spec, paper_baseline_path)
from .constants import TWO_PI
from .coupling import cooperativity, coupling_cs, derive_all
from .errors import (CavitasError, DegenerateFit, InsufficientData,
                     InsufficientPoints, NonFiniteModel, ParseError,
                     StabilityError, UnitError, UnknownKey,
                     UnsupportedPolarization, ValidationError)
from .fitting import (BranchTrack, fit_avoided_crossing, fit_position_sinusoid,
                      fit_psd)
from .langevin import SimConfig, simulate, welch_psd
from .spectrum import (default_grid, params_from_spec, psd_model,
                       sweep_detuning, sweep_position, synthesize_spectrum)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NO_CONVERGENCE = 3
EXIT_UNSTABLE = 4


def _khz(omega: float) -> str:
    return f"2pi x {omega / TWO_PI / 1e3:.3f} kHz"


def _load(args) -> ExperimentSpec:
    path = args.config or default_config_path()
    if path is None:
        raise ParseError("no config given (use --config or CAVITAS_CONFIG)")
    spec = load_spec(path)
    overrides = {}
    for item in args.set or []:
        if "=" not in item:
            raise UnknownKey(f"override must be key=value: {item!r}")
        key, value = item.split("=", 1)
        overrides[key.strip()] = value.strip()
    return apply_overrides(spec, overrides) if overrides else spec


def _write(args, text: str, default_name: str) -> str:
    path = args.output or default_name
    io.atomic_write(path, text)
    return path


def _grid(args) -> np.ndarray:
    return default_grid(args.fmin, args.fmax, args.df)


def cmd_params(args) -> int:
    spec = _load(args)
    d = derive_all(spec)
    c = cooperativity(abs(d.g_y), d.kappa, d.gamma_m, d.n_th,
                      spec.env.recoil_rate)
    print(f"kappa = {_khz(d.kappa)}, g_y = {_khz(abs(d.g_y))}, "
          f"Gamma_m = {_khz(d.gamma_m)}, n_th = {d.n_th:.3g}, C_CS = {c:.3g}")
    if args.output:
        import json
        doc = {
            "kappa_hz": d.kappa / TWO_PI, "g_y_hz": d.g_y / TWO_PI,
            "g_z_mag_hz": d.g_z_mag / TWO_PI,
            "g_dr_single_hz": d.g_dr_single / TWO_PI,
            "g_perp_hz": d.g_perp / TWO_PI,
            "gamma_m_hz": d.gamma_m / TWO_PI, "n_th": d.n_th,
            "alpha_C_m2_per_V": d.alpha, "e0_V_per_m": d.e0,
            "cavity_length_m": d.cavity_length, "mode_volume_m3": d.mode_volume,
            "y_zpf_m": d.y_zpf, "z_zpf_m": d.z_zpf, "x_zpf_m": d.x_zpf,
            "phi_rad": d.phi, "envelope": d.envelope,
            "cooperativity": c,
        }
        io.atomic_write(args.output, json.dumps(doc, indent=2) + "\n")
    return EXIT_OK


def cmd_cooperativity(args) -> int:
    spec = _load(args)
    d = derive_all(spec)
    c = cooperativity(abs(d.g_y), d.kappa, d.gamma_m, d.n_th,
                      spec.env.recoil_rate)
    print(f"C_CS = {c:.4g} at p = {spec.env.pressure:.4g} Pa "
          f"(g = {_khz(abs(d.g_y))}, Gamma_m = {_khz(d.gamma_m)})")
    if args.output:
        import json
        io.atomic_write(args.output, json.dumps({
            "cooperativity": c, "pressure_pa": spec.env.pressure,
            "g_y_hz": abs(d.g_y) / TWO_PI, "gamma_m_hz": d.gamma_m / TWO_PI,
            "n_th": d.n_th, "recoil_rate_hz": spec.env.recoil_rate / TWO_PI,
        }, indent=2) + "\n")
    return EXIT_OK


def cmd_spectrum(args) -> int:
    spec = _load(args)
    grid = _grid(args)
    params = params_from_spec(spec)
    mass = spec.particle.mass
    if args.n_avg > 0:
        series = synthesize_spectrum(params, grid, args.n_avg, args.seed, mass)
    else:
        from .spectrum import PsdSeries
        series = PsdSeries(grid, psd_model(grid, params, mass), n_avg=0)
    path = _write(args, io.psd_series_to_csv(series), "spectrum.csv")
    print(f"spectrum: {grid.size} bins, g_y = {_khz(abs(params.g_y))}, "
          f"Delta = {_khz(params.delta)} -> {path}")
    return EXIT_OK


def cmd_sweep_detuning(args) -> int:
    spec = _load(args)
    grid = _grid(args)
    omega_m = spec.modes.omega_y
    deltas = np.linspace(args.delta_min, args.delta_max, args.steps) * omega_m
    rows = sweep_detuning(spec, deltas, grid, n_threads=args.threads)
    path = _write(args, io.map_to_csv("delta_rad_s", deltas, grid, rows),
                  "sweep_detuning.csv")
    print(f"sweep-detuning: {args.steps} x {grid.size} map -> {path}")
    return EXIT_OK


def cmd_sweep_position(args) -> int:
    spec = _load(args)
    grid = _grid(args)
    lam_c = spec.cavity.wavelength
    y0s = np.linspace(args.y0_min, args.y0_max, args.steps) * lam_c
    rows = sweep_position(spec, y0s, grid, n_threads=args.threads)
    path = _write(args, io.map_to_csv("y0_m", y0s, grid, rows),
                  "sweep_position.csv")
    print(f"sweep-position: {args.steps} x {grid.size} map -> {path}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    spec = _load(args)
    sim = SimConfig(seed=args.seed, n_records=args.records,
                    record_length=args.record_length,
                    sample_rate=args.sample_rate,
                    include_cavity_input_noise=args.cavity_noise)
    q = simulate(spec, sim)
    if args.psd:
        series = welch_psd(q, sim.record_length, sim.sample_rate)
        path = _write(args, io.psd_series_to_csv(series), "simulated_psd.csv")
        print(f"simulate: {q.size} samples, PSD {series.freqs.size} bins -> {path}")
    else:
        t = np.arange(q.size) / sim.sample_rate
        path = _write(args, io.timeseries_to_csv(t, q), "timetrace.csv")
        print(f"simulate: {q.size} samples at {sim.sample_rate:.3g} Hz -> {path}")
    return EXIT_OK


def cmd_fit(args) -> int:
    spec = _load(args)
    data = io.read_psd_csv(args.input)
    if args.n_avg:
        data.n_avg = args.n_avg
    init = params_from_spec(spec)
    # best-effort amplitude/background seeding from the data itself
    bg = max(float(np.median(data.values)), 1e-300)
    init = replace(init, background=bg)
    mass = spec.particle.mass
    updates = {}
    for name, omega in (("a_x", init.omega_x), ("a_y", init.omega_y),
                        ("a_z", init.omega_z)):
        band = np.abs(data.freqs - omega) < 0.25 * omega
        if not band.any():
            updates[name] = 0.0
            continue
        amps = {"a_x": 0.0, "a_y": 0.0, "a_z": 0.0, name: 1.0}
        unit = psd_model(data.freqs[band],
                         replace(init, background=0.0, **amps), mass)
        peak = float(np.max(data.values[band]) - bg)
        updates[name] = max(peak, 0.0) / float(np.max(unit)) if np.max(unit) > 0 else 0.0
    init = replace(init, **updates)
    frozen = tuple(args.freeze.split(",")) if args.freeze else ()
    result = fit_psd(data, init, frozen=frozen, mass=mass)
    path = _write(args, io.fit_result_to_json(result), "fit.json")
    p = result.params
    print(f"fit: g_y = {_khz(p.g_y)}, kappa = {_khz(p.kappa)}, "
          f"Gamma_m = {_khz(p.gamma_m)}, chi2_red = {result.chi2_reduced:.3g}, "
          f"converged = {result.converged} -> {path}")
    return EXIT_OK if result.converged else EXIT_NO_CONVERGENCE


def cmd_crossing_fit(args) -> int:
    axis, plus, minus = io.read_branch_csv(args.input)
    fit = fit_avoided_crossing(BranchTrack(axis, plus, minus))
    path = _write(args, io.crossing_fit_to_json(fit), "crossing_fit.json")
    print(f"crossing-fit: g = {_khz(fit.g)}, Omega_m = {_khz(fit.omega_m)}, "
          f"joint = {fit.joint} -> {path}")
    return EXIT_OK if fit.converged else EXIT_NO_CONVERGENCE


def cmd_position_fit(args) -> int:
    spec = _load(args)
    y0, g_abs = io.read_position_csv(args.input)
    fit = fit_position_sinusoid(y0, g_abs, spec.cavity.wavelength)
    path = _write(args, io.sinusoid_fit_to_json(fit), "position_fit.json")
    print(f"position-fit: g_max = {_khz(fit.g_max)} "
          f"+- {_khz(fit.stderr_g_max)} -> {path}")
    return EXIT_OK if fit.converged else EXIT_NO_CONVERGENCE


def _add_common(p: argparse.ArgumentParser, needs_config=True) -> None:
    if needs_config:
        p.add_argument("--config", help="config JSON (default: $CAVITAS_CONFIG)")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config value, e.g. environment.pressure='3e-7 mbar'")
    p.add_argument("--output", help="output file path")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)


def _add_grid(p: argparse.ArgumentParser) -> None:
    p.add_argument("--fmin", type=float, default=1.0, help="grid start, Hz")
    p.add_argument("--fmax", type=float, default=500e3, help="grid end, Hz")
    p.add_argument("--df", type=float, default=25.0, help="grid step, Hz")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="cavitas",
        description="Coherent-scattering cavity optomechanics toolkit")
    sub = ap.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("params", help="print derived physical quantities")
    _add_common(p)
    p.set_defaults(fn=cmd_params)

    p = sub.add_parser("cooperativity", help="quantum cooperativity report")
    _add_common(p)
    p.set_defaults(fn=cmd_cooperativity)

    p = sub.add_parser("spectrum", help="analytic or synthetic PSD")
    _add_common(p)
    _add_grid(p)
    p.add_argument("--n-avg", type=int, default=0,
                   help="chi-square synthesis averages (0 = noiseless model)")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_spectrum)

    p = sub.add_parser("sweep-detuning", help="PSD map versus detuning")
    _add_common(p)
    _add_grid(p)
    p.add_argument("--delta-min", type=float, default=-1.5,
                   help="start, in units of Omega_y")
    p.add_argument("--delta-max", type=float, default=-0.7,
                   help="end, in units of Omega_y")
    p.add_argument("--steps", type=int, default=80)
    p.set_defaults(fn=cmd_sweep_detuning)

    p = sub.add_parser("sweep-position", help="PSD map versus particle position")
    _add_common(p)
    _add_grid(p)
    p.add_argument("--y0-min", type=float, default=0.0,
                   help="start, in units of lambda_c")
    p.add_argument("--y0-max", type=float, default=0.5,
                   help="end, in units of lambda_c")
    p.add_argument("--steps", type=int, default=60)
    p.set_defaults(fn=cmd_sweep_position)

    p = sub.add_parser("simulate", help="Langevin time-domain simulation")
    _add_common(p)
    p.add_argument("--records", type=int, default=25)
    p.add_argument("--record-length", type=float, default=0.040, help="s")
    p.add_argument("--sample-rate", type=float, default=1e6, help="Hz")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--psd", action="store_true",
                   help="write the averaged PSD instead of the time trace")
    p.add_argument("--cavity-noise", action="store_true",
                   help="include white cavity input noise")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("fit", help="fit the PSD model to a spectrum CSV")
    _add_common(p)
    p.add_argument("--input", required=True, help="spectrum CSV (freq_hz,psd)")
    p.add_argument("--n-avg", type=int, default=0,
                   help="override the averaging count of the input")
    p.add_argument("--freeze", default="",
                   help="comma-separated parameters to hold fixed")
    p.set_defaults(fn=cmd_fit)

    p = sub.add_parser("crossing-fit", help="fit hybrid branches versus detuning")
    _add_common(p)
    p.add_argument("--input", required=True,
                   help="CSV: delta_rad_s, omega_plus_hz, omega_minus_hz")
    p.set_defaults(fn=cmd_crossing_fit)

    p = sub.add_parser("position-fit", help="fit |g_y|(y0) sinusoid")
    _add_common(p)
    p.add_argument("--input", required=True, help="CSV: y0_m, g_abs_hz")
    p.set_defaults(fn=cmd_position_fit)

    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (InsufficientPoints, DegenerateFit, NonFiniteModel) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except StabilityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNSTABLE
    except CavitasError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
