import dataclasses
import math

import numpy as np
import pytest

from cavitas import (BranchTrack, extract_peaks, fit_avoided_crossing,
                     fit_position_sinusoid, fit_psd, fit_uncertainties,
                     hybrid_frequencies, psd_model, synthesize_spectrum)
from cavitas.constants import TWO_PI
from cavitas.errors import DegenerateFit, InsufficientPoints
from cavitas.fitting import levenberg_marquardt
from cavitas.spectrum import PsdSeries, SpectrumModelParams, default_grid

OMEGA_M = TWO_PI * 197e3
KAPPA = TWO_PI * 10e3
G = TWO_PI * 22.8e3
LAMBDA_C = 1.064e-6

Y_ONLY_FROZEN = ("omega_x", "omega_z", "a_x", "a_z", "delta")


def y_params(**overrides):
    base = dict(omega_x=TWO_PI * 172e3, omega_y=OMEGA_M, omega_z=TWO_PI * 56e3,
                gamma_m=TWO_PI * 800.0, g_y=G, kappa=KAPPA, delta=-OMEGA_M,
                a_x=0.0, a_y=1e-26, a_z=0.0, background=0.0)
    base.update(overrides)
    return SpectrumModelParams(**base)


# levenberg-marquardt core ---------------------------------------------------

def test_lm_solves_linear_least_squares():
    a = np.array([[1.0, 2.0], [3.0, 1.0], [0.5, -1.0]])
    target = np.array([3.0, -1.5])
    b = a @ target

    x, cost, n_iter, converged = levenberg_marquardt(
        lambda x: a @ x - b, np.zeros(2))
    assert converged
    assert x == pytest.approx(target, rel=1e-8)
    assert cost < 1e-16 * float(b @ b)


def test_lm_nonlinear_exponential():
    t = np.linspace(0.0, 2.0, 50)
    y = 3.0 * np.exp(-1.7 * t)
    x, _, _, converged = levenberg_marquardt(
        lambda p: p[0] * np.exp(p[1] * t) - y, np.array([1.0, -1.0]))
    assert converged
    assert x == pytest.approx([3.0, -1.7], rel=1e-6)


# extract_peaks ---------------------------------------------------------------

def test_extract_two_nms_peaks():
    # narrow lines (widths << splitting) so the maxima sit on the hybrid
    # eigenfrequencies to within a bin
    grid = default_grid(100e3, 300e3, 25.0)
    narrow = y_params(kappa=TWO_PI * 200.0, gamma_m=TWO_PI * 50.0)
    narrow = dataclasses.replace(narrow, background=1e-3 * float(
        np.max(psd_model(grid, narrow, 1.0))))
    series = PsdSeries(grid, psd_model(grid, narrow, 1.0), n_avg=1000)
    peaks = extract_peaks(series, max_peaks=4)
    assert len(peaks) == 2
    modes = hybrid_frequencies(OMEGA_M, -OMEGA_M, G)
    found = sorted(p[0] for p in peaks)
    # both peaks carry the common counter-rotating shift ~ -g^2/(2 Omega_m),
    # so the splitting matches to a bin while the absolute positions are
    # displaced by that shift
    df = TWO_PI * 25.0
    assert found[1] - found[0] == pytest.approx(modes.splitting, rel=0.01)
    shift = G**2 / OMEGA_M  # bound on the O(g^2/Omega) displacement
    assert abs(found[0] - modes.omega_minus) <= shift + df
    assert abs(found[1] - modes.omega_plus) <= shift + df


def test_extract_single_lorentzian():
    grid = default_grid(100e3, 300e3, 25.0)
    params = y_params(g_y=0.0, background=1e-45)
    series = PsdSeries(grid, psd_model(grid, params, 1.0), n_avg=1000)
    peaks = extract_peaks(series)
    assert len(peaks) == 1
    assert peaks[0][0] == pytest.approx(OMEGA_M, abs=TWO_PI * 50.0)
    # width estimate ~ Gamma_m for the uncoupled line
    assert peaks[0][2] == pytest.approx(TWO_PI * 800.0, rel=0.5)


def test_extract_flat_background_empty():
    grid = default_grid(100e3, 300e3, 25.0)
    series = PsdSeries(grid, np.full(grid.size, 1e-30), n_avg=25)
    assert extract_peaks(series) == []


def test_extract_no_false_positives():
    grid = default_grid(100e3, 150e3, 50.0)
    flat = y_params(a_y=0.0, background=1e-30)
    hits = 0
    for seed in range(1000):
        data = synthesize_spectrum(flat, grid, 25, seed, 1.0)
        if extract_peaks(data):
            hits += 1
    assert hits <= 10  # <= 1% violation rate


# fit_psd ---------------------------------------------------------------------

def _noisy_y_spectrum(seed, n_avg=25):
    grid = default_grid(100e3, 300e3, 25.0)
    params = y_params()
    params = dataclasses.replace(
        params, background=0.1 * float(np.median(psd_model(grid, params, 1.0))))
    return params, synthesize_spectrum(params, grid, n_avg, seed, 1.0)


def test_fit_psd_round_trip_single_mode():
    true, data = _noisy_y_spectrum(seed=5)
    rng = np.random.default_rng(99)
    init = dataclasses.replace(true, **{
        k: getattr(true, k) * (1 + rng.uniform(-0.2, 0.2))
        for k in ("omega_y", "gamma_m", "g_y", "kappa", "a_y", "background")})
    res = fit_psd(data, init, frozen=Y_ONLY_FROZEN, n_starts=3)
    assert res.converged
    assert res.params.g_y == pytest.approx(true.g_y, rel=0.02)
    assert res.params.kappa == pytest.approx(true.kappa, rel=0.05)
    assert res.chi2_reduced == pytest.approx(1.0, rel=0.1)
    assert res.params.g_y > 0  # magnitude reported


def test_fit_psd_gamma_floor():
    true, data = _noisy_y_spectrum(seed=6)
    init = dataclasses.replace(true, gamma_m=0.0)
    res = fit_psd(data, init, frozen=Y_ONLY_FROZEN, n_starts=1)
    assert res.converged
    assert res.params.gamma_m >= TWO_PI * 1e-3


def test_fit_psd_insufficient_points():
    true, data = _noisy_y_spectrum(seed=7)
    short = PsdSeries(data.freqs[:30], data.values[:30], n_avg=data.n_avg)
    with pytest.raises(InsufficientPoints):
        fit_psd(short, true, frozen=Y_ONLY_FROZEN)


def test_fit_psd_frozen_stderr_zero():
    true, data = _noisy_y_spectrum(seed=8)
    res = fit_psd(data, true, frozen=Y_ONLY_FROZEN, n_starts=1)
    for name in Y_ONLY_FROZEN:
        assert res.stderr[name] == 0.0


# fit_uncertainties ------------------------------------------------------------

def test_stderr_scales_with_navg():
    sigmas = []
    n_avgs = (5, 25, 100)
    for n_avg in n_avgs:
        per_seed = []
        for seed in range(3):
            true, data = _noisy_y_spectrum(seed=seed, n_avg=n_avg)
            res = fit_psd(data, true, frozen=Y_ONLY_FROZEN, n_starts=1)
            per_seed.append(res.stderr["g_y"])
        sigmas.append(np.mean(per_seed))
    slope = np.polyfit(np.log(n_avgs), np.log(sigmas), 1)[0]
    assert slope == pytest.approx(-0.5, rel=0.2)


def test_stderr_duplicated_data():
    true, data = _noisy_y_spectrum(seed=9)
    res = fit_psd(data, true, frozen=Y_ONLY_FROZEN, n_starts=1)
    base = fit_uncertainties(res, data, frozen=Y_ONLY_FROZEN)
    eps = 1e-6 * (data.freqs[1] - data.freqs[0])
    doubled = PsdSeries(
        np.sort(np.concatenate([data.freqs, data.freqs + eps])),
        np.repeat(data.values, 2), n_avg=data.n_avg)
    twice = fit_uncertainties(res, doubled, frozen=Y_ONLY_FROZEN)
    assert twice["g_y"] == pytest.approx(base["g_y"] / math.sqrt(2), rel=0.05)


# avoided crossing ----------------------------------------------------------

def _branch_track(deltas, g=G, omega_m=OMEGA_M, jitter=0.0, seed=0):
    rng = np.random.default_rng(seed)
    plus = np.empty(deltas.size)
    minus = np.empty(deltas.size)
    for i, d in enumerate(deltas):
        m = hybrid_frequencies(omega_m, d, g)
        plus[i] = m.omega_plus + jitter * rng.standard_normal()
        minus[i] = m.omega_minus + jitter * rng.standard_normal()
    return BranchTrack(axis=deltas, omega_plus=plus, omega_minus=minus)


def test_crossing_fit_exact():
    deltas = -np.linspace(1.5, 0.7, 20) * OMEGA_M
    fit = fit_avoided_crossing(_branch_track(deltas))
    assert fit.joint and fit.converged
    assert abs(fit.g) == pytest.approx(G, rel=1e-9)
    assert fit.omega_m == pytest.approx(OMEGA_M, rel=1e-9)


def test_crossing_fit_monte_carlo():
    deltas = -np.linspace(1.5, 0.8, 25) * OMEGA_M
    for seed in range(5):
        fit = fit_avoided_crossing(
            _branch_track(deltas, jitter=KAPPA / 4.0, seed=seed))
        assert abs(fit.g) == pytest.approx(G, rel=0.05)


def test_crossing_fit_single_branch_flagged():
    deltas = -np.linspace(1.5, 0.7, 12) * OMEGA_M
    track = _branch_track(deltas)
    track.omega_minus[:] = np.nan
    fit = fit_avoided_crossing(track)
    assert not fit.joint
    assert fit.band is None
    assert abs(fit.g) == pytest.approx(G, rel=1e-6)


def test_crossing_fit_band_edges():
    deltas = -np.linspace(1.4, 0.8, 30) * OMEGA_M
    fit = fit_avoided_crossing(
        _branch_track(deltas, jitter=KAPPA / 4.0, seed=3))
    assert fit.joint
    lo, hi = sorted(abs(b) for b in fit.band)
    assert lo <= abs(fit.g) * 1.05 and hi >= abs(fit.g) * 0.95


def test_crossing_fit_scale_invariance():
    deltas = -np.linspace(1.5, 0.7, 15) * OMEGA_M
    track = _branch_track(deltas, jitter=KAPPA / 8.0, seed=1)
    s = 3.7
    scaled = BranchTrack(axis=s * track.axis,
                         omega_plus=s * track.omega_plus,
                         omega_minus=s * track.omega_minus)
    a = fit_avoided_crossing(track)
    b = fit_avoided_crossing(scaled)
    assert abs(b.g) == pytest.approx(s * abs(a.g), rel=1e-6)
    assert b.omega_m == pytest.approx(s * a.omega_m, rel=1e-6)


def test_crossing_fit_too_few_points():
    deltas = -np.linspace(1.2, 0.9, 3) * OMEGA_M
    with pytest.raises(InsufficientPoints):
        fit_avoided_crossing(_branch_track(deltas))


# position sinusoid ------------------------------------------------------------

def test_sinusoid_fit_exact():
    y0 = np.linspace(0.02, 0.48, 24) * LAMBDA_C
    g_abs = np.abs(G * np.sin(2 * np.pi * y0 / LAMBDA_C))
    fit = fit_position_sinusoid(y0, g_abs, LAMBDA_C)
    assert fit.converged
    assert fit.g_max == pytest.approx(G, rel=1e-9)
    assert fit.y_offset == pytest.approx(0.0, abs=1e-12 * LAMBDA_C)


def test_sinusoid_fit_paper_noise():
    # 15 points over a quarter wavelength, sigma = 2 pi x 0.5 kHz per point
    y0 = np.linspace(0.10, 0.35, 15) * LAMBDA_C
    rng = np.random.default_rng(4)
    g_abs = np.abs(G * np.sin(2 * np.pi * y0 / LAMBDA_C)) \
        + TWO_PI * 500.0 * rng.standard_normal(y0.size)
    fit = fit_position_sinusoid(y0, np.abs(g_abs), LAMBDA_C)
    assert fit.g_max == pytest.approx(G, abs=TWO_PI * 400.0)
    assert fit.stderr_g_max <= TWO_PI * 200.0


def test_sinusoid_fit_offset_recovered():
    off = 0.083 * LAMBDA_C
    y0 = np.linspace(0.0, 0.5, 20) * LAMBDA_C
    g_abs = np.abs(G * np.sin(2 * np.pi * (y0 - off) / LAMBDA_C))
    fit = fit_position_sinusoid(y0, g_abs, LAMBDA_C)
    assert fit.g_max == pytest.approx(G, rel=1e-6)
    assert fit.y_offset % (LAMBDA_C / 2) == pytest.approx(off, abs=1e-4 * LAMBDA_C)


def test_sinusoid_fit_degenerate_at_node():
    # every sample at a zero of |sin|: amplitude unidentifiable
    y0 = np.sort(np.concatenate([np.zeros(5), np.full(5, 0.5 * LAMBDA_C)])
                 + np.linspace(-1e-12, 1e-12, 10))
    g_abs = np.zeros(10)
    with pytest.raises(DegenerateFit):
        fit_position_sinusoid(y0, g_abs, LAMBDA_C)


def test_sinusoid_fit_too_few_points():
    y0 = np.linspace(0.1, 0.4, 4) * LAMBDA_C
    with pytest.raises(InsufficientPoints):
        fit_position_sinusoid(y0, np.abs(G * np.sin(2 * np.pi * y0 / LAMBDA_C)),
                              LAMBDA_C)
