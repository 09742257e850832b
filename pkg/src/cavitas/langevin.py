"""Time-domain oracle: linearized cavity-oscillator Langevin integration.

Integrates the coupled quadrature equations with Euler-Maruyama, decimates
to the acquisition rate, and estimates the displacement PSD with averaged
non-overlapping windowed periodograms.  This module is kept independent of
the analytic model in :mod:`cavitas.spectrum` so the two can cross-validate
each other.

Sign convention of the drift (the rotation sense of the cavity quadratures
relative to the detuning) is fixed by requiring that red detuning produces
net damping; see :func:`drift`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.signal import get_window, welch

from .config import ExperimentSpec
from .coupling import derive_all, thermal_occupation
from .errors import InsufficientData, StabilityError, ValidationError
from .spectrum import PsdSeries, SpectrumModelParams, params_from_spec, psd_model

_DIVERGENCE_LIMIT = 1e8
_NOISE_BLOCK = 1 << 20  # steps of pre-generated noise per stepper call


@dataclass(frozen=True)
class SimConfig:
    seed: int = 0
    dt: float | None = None        # s; default 1/(20 max rate), grid-aligned
    duration: float | None = None  # s; default n_records * record_length
    record_length: float = 0.040   # s
    n_records: int = 25
    sample_rate: float = 1e6       # Hz
    include_cavity_input_noise: bool = False


@dataclass
class SimState:
    x: float = 0.0  # cavity amplitude quadrature
    y: float = 0.0  # cavity phase quadrature
    q: float = 0.0  # displacement in zpf units
    v: float = 0.0  # momentum quadrature


def drift(state: SimState, params: SpectrumModelParams) -> SimState:
    """Deterministic part of the equations of motion.

    dX = -Delta Y - (kappa/2) X
    dY = +Delta X - (kappa/2) Y + 2 g q
    dq = Omega v
    dv = -Omega q - Gamma v + 2 g X

    With this rotation sense, red detuning (Delta < 0) damps the mechanics
    and blue detuning anti-damps it.
    """
    d, k, g = params.delta, params.kappa, params.g_y
    om, gm = params.omega_y, params.gamma_m
    return SimState(
        x=-d * state.y - 0.5 * k * state.x,
        y=d * state.x - 0.5 * k * state.y + 2.0 * g * state.q,
        q=om * state.v,
        v=-om * state.q - gm * state.v + 2.0 * g * state.x,
    )


@njit(cache=True)
def _step_block(state, dt, delta, kappa, g, omega, gamma,
                noise_v, noise_x, noise_y, decim, step0, out, out_start):
    x, y, q, v = state
    n_out = 0
    # semi-implicit (symplectic) Euler-Maruyama: position-like variables
    # first, momentum-like last using the updated partners; the explicit
    # variant is numerically unstable for (Omega dt)^2 > Gamma dt
    for i in range(noise_v.shape[0]):
        q = q + omega * v * dt
        x_new = x + (-delta * y - 0.5 * kappa * x) * dt
        y = y + (delta * x_new - 0.5 * kappa * y + 2.0 * g * q) * dt
        x = x_new
        v = v + (-omega * q - gamma * v + 2.0 * g * x) * dt + noise_v[i]
        if noise_x.shape[0] > 0:
            x += noise_x[i]
            y += noise_y[i]
        if (step0 + i + 1) % decim == 0:
            out[out_start + n_out] = q
            n_out += 1
    state[0], state[1], state[2], state[3] = x, y, q, v
    return n_out


def _resolve_timestep(sim: SimConfig, max_rate: float) -> tuple[float, int]:
    """Choose (dt, decimation) aligned with the acquisition grid."""
    dt_max = 1.0 / (20.0 * max_rate)
    t_samp = 1.0 / sim.sample_rate
    if sim.dt is None:
        decim = max(1, math.ceil(t_samp / dt_max))
    else:
        decim = round(t_samp / sim.dt)
        if decim < 1 or abs(decim * sim.dt - t_samp) > 1e-9 * t_samp:
            raise ValidationError(
                "dt: must divide the acquisition interval 1/sample_rate")
        if sim.dt > dt_max * (1 + 1e-12):
            raise ValidationError(
                f"dt: must be <= 1/(20 max rate) = {dt_max:.3e} s")
    return t_samp / decim, decim


def simulate_linear(omega_m: float, gamma_m: float, g: float, kappa: float,
                    delta: float, n_th: float, sim: SimConfig) -> np.ndarray:
    """Integrate the linearized dynamics; returns q in zpf units at sample_rate.

    Thermal noise enters as momentum kicks of per-step variance
    2 Gamma_m n_th dt (classical limit).  Deterministic for a given
    (seed, config).
    """
    duration = sim.duration
    if duration is None:
        duration = sim.n_records * sim.record_length
    if duration < sim.n_records * sim.record_length - 1e-12:
        raise ValidationError("duration: must cover n_records * record_length")
    n_per_rec = sim.sample_rate * sim.record_length
    if abs(n_per_rec - round(n_per_rec)) > 1e-9:
        raise ValidationError("record_length: sample_rate*record_length must be integer")

    dt, decim = _resolve_timestep(sim, max(omega_m, abs(delta), kappa))
    n_samples = int(round(duration * sim.sample_rate))
    n_steps = n_samples * decim

    rng = np.random.default_rng(sim.seed)
    sigma_v = math.sqrt(2.0 * gamma_m * n_th * dt)
    sigma_cav = math.sqrt(kappa * dt) if sim.include_cavity_input_noise else 0.0

    state = np.zeros(4)
    out = np.empty(n_samples)
    empty = np.empty(0)
    done = 0
    written = 0
    while done < n_steps:
        block = min(_NOISE_BLOCK, n_steps - done)
        noise_v = sigma_v * rng.standard_normal(block)
        if sigma_cav:
            noise_x = sigma_cav * rng.standard_normal(block)
            noise_y = sigma_cav * rng.standard_normal(block)
        else:
            noise_x = noise_y = empty
        written += _step_block(state, dt, delta, kappa, g, omega_m, gamma_m,
                               noise_v, noise_x, noise_y, decim, done, out, written)
        done += block
        if not np.all(np.isfinite(state)) or np.max(np.abs(state)) > _DIVERGENCE_LIMIT:
            raise StabilityError(
                f"integration diverged at t = {done * dt:.3e} s "
                "(dt too large or anti-damped detuning)")
    return out[:written]


def simulate(spec: ExperimentSpec, sim: SimConfig,
             g: float | None = None, delta: float | None = None) -> np.ndarray:
    """Simulate the y mode of a physical configuration; q in meters."""
    derived = derive_all(spec)
    q = simulate_linear(
        omega_m=spec.modes.omega_y,
        gamma_m=derived.gamma_m,
        g=derived.g_y if g is None else g,
        kappa=derived.kappa,
        delta=spec.detuning if delta is None else delta,
        n_th=derived.n_th,
        sim=sim,
    )
    return q * derived.y_zpf


def welch_psd(series: np.ndarray, record_length: float, sample_rate: float,
              window: str = "hann") -> PsdSeries:
    """Averaged periodogram over non-overlapping records.

    One-sided density normalization: the integral of the PSD over Hz equals
    the series variance (up to window leakage, < 0.5%).
    """
    series = np.asarray(series, dtype=float)
    nperseg = int(round(record_length * sample_rate))
    if series.size < nperseg:
        raise InsufficientData(
            f"need at least {nperseg} samples, got {series.size}")
    n_avg = series.size // nperseg
    win = get_window(window, nperseg)
    freqs_hz, psd = welch(series[:n_avg * nperseg], fs=sample_rate, window=win,
                          nperseg=nperseg, noverlap=0, detrend="constant",
                          scaling="density")
    return PsdSeries(2.0 * math.pi * freqs_hz[1:], psd[1:], n_avg=n_avg,
                     meta={"window": window, "record_length": record_length,
                           "sample_rate": sample_rate})


def oracle_compare(spec: ExperimentSpec, sim: SimConfig,
                   g: float | None = None, delta: float | None = None) -> dict:
    """Simulate, estimate the PSD, and compare against the analytic model.

    The analytic PSD uses the thermal amplitude nominal and is adjusted by
    a single fitted scale factor; the report carries the RMS relative
    deviation over the band [Omega_m/2, 2 Omega_m].
    """
    from dataclasses import replace as dc_replace

    q = simulate(spec, sim, g=g, delta=delta)
    data = welch_psd(q, sim.record_length, sim.sample_rate)

    params = params_from_spec(spec, delta=delta)
    if g is not None:
        params = dc_replace(params, g_y=g)
    params = dc_replace(params, a_x=0.0, a_z=0.0, background=0.0)

    omega_m = spec.modes.omega_y
    band = (data.freqs >= 0.5 * omega_m) & (data.freqs <= 2.0 * omega_m)
    model = psd_model(data.freqs[band], params, spec.particle.mass)
    obs = data.values[band]
    scale = float(np.median(obs / model))
    # compare block-averaged spectra so the per-bin chi-square estimator
    # noise (1/sqrt(n_avg) relative) does not dominate the deviation
    block = 16
    n_blocks = obs.size // block
    obs_b = obs[:n_blocks * block].reshape(n_blocks, block).mean(axis=1)
    model_b = model[:n_blocks * block].reshape(n_blocks, block).mean(axis=1)
    rms = float(np.sqrt(np.mean((obs_b / (scale * model_b) - 1.0)**2)))
    return {
        "rms_relative_error": rms,
        "band": (0.5 * omega_m, 2.0 * omega_m),
        "scale": scale,
        "psd": data,
        "model_params": params,
    }
