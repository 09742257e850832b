#!/usr/bin/env python3
"""Coupling versus particle position along the cavity standing wave.

Tabulates |g_y|(y0) over a full wavelength and fits the fixed-period
sinusoid to recover the coupling amplitude, mirroring the calibration
procedure used on measured data.
"""

import argparse
import dataclasses

import numpy as np

from cavitas import (coupling_cs, fit_position_sinusoid, load_spec,
                     paper_baseline_path)
from cavitas.constants import TWO_PI


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=paper_baseline_path())
    ap.add_argument("--points", type=int, default=60)
    ap.add_argument("--noise-hz", type=float, default=500.0,
                    help="per-point Gaussian noise on |g|/2pi, Hz")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    spec = load_spec(args.config)
    lam = spec.cavity.wavelength
    y0 = np.linspace(0.02, 0.98, args.points) * lam

    def g_at(y):
        pos = dataclasses.replace(spec.position, y0=float(y))
        return coupling_cs(dataclasses.replace(spec, position=pos))[0]

    g_abs = np.abs([g_at(y) for y in y0])
    rng = np.random.default_rng(args.seed)
    noisy = np.abs(g_abs + TWO_PI * args.noise_hz
                   * rng.standard_normal(y0.size))

    fit = fit_position_sinusoid(y0, noisy, lam)
    print(f"true  g_max = 2pi x {np.max(g_abs) / TWO_PI / 1e3:.3f} kHz")
    print(f"fitted g_max = 2pi x ({fit.g_max / TWO_PI / 1e3:.3f} "
          f"+- {fit.stderr_g_max / TWO_PI / 1e3:.3f}) kHz, "
          f"offset = {fit.y_offset * 1e9:.2f} nm")


if __name__ == "__main__":
    main()
