"""Analytic frequency-domain model of the hybridized spectra.

Contains the optical damping and spring corrections to the mechanical
susceptibility, the avoided-crossing eigenfrequencies, the three-mode PSD
composer, chi-square synthetic-spectrum generation, and the detuning /
position sweep maps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace, field

import numpy as np

from .config import ExperimentSpec
from .constants import CONST, TWO_PI
from .coupling import (coupling_cs, derive_all, gas_damping,
                       thermal_occupation, zpf)

# Default frequency grid: 1 Hz to 500 kHz at the 25 Hz resolution of a
# 40 ms record.
DEFAULT_FREQ_MIN = 1.0       # Hz
DEFAULT_FREQ_MAX = 500e3     # Hz
DEFAULT_FREQ_STEP = 25.0     # Hz


@dataclass(frozen=True)
class SpectrumModelParams:
    omega_x: float   # rad/s
    omega_y: float   # rad/s
    omega_z: float   # rad/s
    gamma_m: float   # rad/s
    g_y: float       # rad/s
    kappa: float     # rad/s
    delta: float     # rad/s
    a_x: float       # free per-mode amplitude
    a_y: float
    a_z: float
    background: float


@dataclass(frozen=True)
class HybridModes:
    omega_plus: float   # rad/s
    omega_minus: float  # rad/s

    @property
    def splitting(self) -> float:
        return self.omega_plus - self.omega_minus


@dataclass
class PsdSeries:
    freqs: np.ndarray   # rad/s, strictly increasing
    values: np.ndarray  # m^2/Hz (or model units)
    n_avg: int = 1
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.freqs = np.asarray(self.freqs, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.freqs.shape != self.values.shape:
            raise ValueError("freqs and values must have equal length")
        if np.any(np.diff(self.freqs) <= 0):
            raise ValueError("freqs must be strictly increasing")


def hybrid_frequencies(omega_m: float, delta: float, g: float) -> HybridModes:
    """Avoided-crossing eigenfrequencies of the coupled pair.

    The gap is minimized over detuning at delta = -omega_m where it
    equals 2 g.
    """
    half = 0.5 * (omega_m + delta)
    root = math.sqrt(g * g + half * half)
    return HybridModes(omega_m - half + root, omega_m - half - root)


def optical_damping(omega, params: SpectrumModelParams):
    """Light-induced damping Gamma_opt(Omega); positive for red detuning."""
    g2 = params.g_y**2
    k = params.kappa
    d = params.delta
    return g2 * (params.omega_y / omega) * (
        k / ((d + omega)**2 + k * k / 4.0)
        - k / ((d - omega)**2 + k * k / 4.0))


def spring_shift(omega, params: SpectrumModelParams):
    """Optomechanical spring correction delta Omega_m(Omega)."""
    g2 = params.g_y**2
    k2_4 = params.kappa**2 / 4.0
    d = params.delta
    return g2 * (params.omega_y / omega) * (
        (d + omega) / ((d + omega)**2 + k2_4)
        + (d - omega) / ((d - omega)**2 + k2_4))


def _chi_sq(omega, omega_m, g, params: SpectrumModelParams, mass: float):
    """|chi(Omega)|^2 of one mode with coupling g (vectorized in omega)."""
    coupled = replace(params, omega_y=omega_m, g_y=g)
    d_om = spring_shift(omega, coupled) if g != 0.0 else 0.0
    g_eff = params.gamma_m + (optical_damping(omega, coupled) if g != 0.0 else 0.0)
    # optimizers may probe extreme kappa/gamma; overflow to inf just makes
    # the model vanish there, which is the right rejection signal
    with np.errstate(over="ignore"):
        denom = (omega_m**2 + 2.0 * omega * d_om - omega**2)**2 \
            + (omega * g_eff)**2
    return 1.0 / (mass * mass * denom)


def susceptibility_sq(omega, params: SpectrumModelParams, mass: float):
    """|chi|^2 of the coupled y mode (uses g_y, kappa, delta)."""
    return _chi_sq(omega, params.omega_y, params.g_y, params, mass)


def psd_model(omega, params: SpectrumModelParams, mass: float):
    """Three-mode displacement PSD; x and z are uncoupled when theta = 0."""
    omega = np.asarray(omega, dtype=float)
    out = np.full_like(omega, params.background)
    if params.a_x:
        out = out + params.a_x * _chi_sq(omega, params.omega_x, 0.0, params, mass)
    if params.a_y:
        out = out + params.a_y * _chi_sq(omega, params.omega_y, params.g_y, params, mass)
    if params.a_z:
        out = out + params.a_z * _chi_sq(omega, params.omega_z, 0.0, params, mass)
    return out


def thermal_amplitude(mass: float, gamma_m: float, n_th: float, omega: float) -> float:
    """Nominal thermal PSD amplitude for one mode, 2 Gamma n_th Omega^2 zpf^2 m^2."""
    return 2.0 * gamma_m * n_th * omega**2 * zpf(mass, omega)**2 * mass**2


def params_from_spec(spec: ExperimentSpec, delta: float | None = None,
                     background: float = 0.0) -> SpectrumModelParams:
    """Model parameters implied by a physical configuration.

    Amplitudes are set to the per-mode thermal nominal values; they remain
    free parameters in any subsequent fit.
    """
    derived = derive_all(spec)
    mass = spec.particle.mass
    temp = spec.env.temperature
    amps = [
        thermal_amplitude(mass, derived.gamma_m,
                          thermal_occupation(temp, om), om)
        for om in (spec.modes.omega_x, spec.modes.omega_y, spec.modes.omega_z)
    ]
    return SpectrumModelParams(
        omega_x=spec.modes.omega_x,
        omega_y=spec.modes.omega_y,
        omega_z=spec.modes.omega_z,
        gamma_m=derived.gamma_m,
        g_y=derived.g_y,
        kappa=derived.kappa,
        delta=spec.detuning if delta is None else delta,
        a_x=amps[0], a_y=amps[1], a_z=amps[2],
        background=background,
    )


def default_grid(f_min: float = DEFAULT_FREQ_MIN, f_max: float = DEFAULT_FREQ_MAX,
                 df: float = DEFAULT_FREQ_STEP) -> np.ndarray:
    """Angular frequency grid from ordinary-frequency bounds in Hz."""
    return TWO_PI * np.arange(f_min, f_max + df / 2, df)


def synthesize_spectrum(params: SpectrumModelParams, grid: np.ndarray,
                        n_avg: int, seed: int, mass: float) -> PsdSeries:
    """Draw a noisy spectrum with exact averaged-periodogram statistics.

    Each bin is psd_model * chi2_{2 n_avg} / (2 n_avg), independent across
    bins, which is the sampling law of an n_avg-averaged periodogram of
    Gaussian data.
    """
    if n_avg < 1:
        raise ValueError("n_avg must be >= 1")
    mean = psd_model(grid, params, mass)
    rng = np.random.default_rng(seed)
    values = mean * rng.chisquare(2 * n_avg, size=mean.shape) / (2 * n_avg)
    return PsdSeries(np.asarray(grid, dtype=float), values, n_avg=n_avg,
                     meta={"seed": seed, "kind": "synthetic"})


def _map_rows(row_fn, grid, n_threads: int) -> np.ndarray:
    # rows are independent; emit them in grid order regardless of threading
    if n_threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            rows = list(pool.map(row_fn, grid))
    else:
        rows = [row_fn(v) for v in grid]
    return np.vstack(rows)


def sweep_detuning(spec: ExperimentSpec, delta_grid: np.ndarray,
                   freq_grid: np.ndarray, n_threads: int = 1) -> np.ndarray:
    """PSD map, one row per detuning value (rows in grid order)."""
    base = params_from_spec(spec)
    mass = spec.particle.mass

    def row(d):
        return psd_model(freq_grid, replace(base, delta=float(d)), mass)

    return _map_rows(row, delta_grid, n_threads)


def sweep_position(spec: ExperimentSpec, y0_grid: np.ndarray,
                   freq_grid: np.ndarray, delta: float | None = None,
                   n_threads: int = 1) -> np.ndarray:
    """PSD map versus particle position along the cavity axis.

    Detuning defaults to the optimum -Omega_y; g_y is recomputed from the
    standing-wave phase at each position.
    """
    if delta is None:
        delta = -spec.modes.omega_y
    base = params_from_spec(spec, delta=delta)
    mass = spec.particle.mass

    def row(y0):
        moved = replace(spec, position=replace(spec.position, y0=float(y0)))
        g_y, _ = coupling_cs(moved)
        return psd_model(freq_grid, replace(base, g_y=g_y), mass)

    return _map_rows(row, y0_grid, n_threads)
