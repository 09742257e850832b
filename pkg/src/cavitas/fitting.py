"""Parameter extraction from spectra.

Damped least squares (Levenberg-Marquardt) on log-PSD residuals, peak
extraction for branch tracking, the avoided-crossing fit of the hybrid
eigenfrequencies versus detuning, and the position sinusoid fit of the
coupling magnitude.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DegenerateFit, InsufficientPoints, NonFiniteModel
from .spectrum import PsdSeries, SpectrumModelParams, hybrid_frequencies, psd_model

PARAM_NAMES = ("omega_x", "omega_y", "omega_z", "gamma_m", "g_y", "kappa",
               "delta", "a_x", "a_y", "a_z", "background")
# positive parameters handled in log space so bounds never need clipping
_LOG_PARAMS = frozenset({"gamma_m", "kappa", "a_x", "a_y", "a_z", "background"})
_GAMMA_FLOOR = 2.0 * math.pi * 1e-3  # rad/s
_TINY = 1e-300

# LM schedule: damping x10 on a rejected step, /10 on an accepted one.
_LAM0 = 1e-3
_LAM_MAX = 1e14
_COST_RTOL = 1e-10
_GRAD_TOL = 1e-8
_MAX_ITER = 500


@dataclass
class FitResult:
    params: SpectrumModelParams
    stderr: dict[str, float]
    chi2_reduced: float
    n_iter: int
    converged: bool
    cost: float


@dataclass
class BranchTrack:
    """Observed hybrid branch positions versus a control axis (SI)."""
    axis: np.ndarray          # detuning or y0 grid
    omega_plus: np.ndarray    # rad/s, NaN where unobserved
    omega_minus: np.ndarray   # rad/s, NaN where unobserved
    confidence: np.ndarray | None = None


@dataclass
class CrossingFit:
    g: float
    omega_m: float
    stderr_g: float
    stderr_omega_m: float
    band: tuple[float, float] | None  # (upper-branch-only g, lower-branch-only g)
    joint: bool
    converged: bool
    n_iter: int


@dataclass
class SinusoidFit:
    g_max: float
    y_offset: float
    stderr_g_max: float
    stderr_y_offset: float
    converged: bool
    n_iter: int


# Levenberg-Marquardt core -----------------------------------------------


def _jacobian(fun, x, r0):
    jac = np.empty((r0.size, x.size))
    for i in range(x.size):
        h = 1e-7 * max(abs(x[i]), 1e-3)
        xp = x.copy()
        xp[i] += h
        jac[:, i] = (fun(xp) - r0) / h
    return jac


def levenberg_marquardt(fun, x0, max_iter=_MAX_ITER):
    """Minimize sum(fun(x)^2); returns (x, cost, n_iter, converged)."""
    x = np.asarray(x0, dtype=float).copy()
    r = fun(x)
    if not np.all(np.isfinite(r)):
        raise NonFiniteModel(f"initial model evaluation non-finite at {x}")
    cost = float(r @ r)
    lam = _LAM0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        jac = _jacobian(fun, x, r)
        if not np.all(np.isfinite(jac)):
            raise NonFiniteModel(f"jacobian non-finite at {x}")
        grad = jac.T @ r
        if np.max(np.abs(grad)) < _GRAD_TOL:
            converged = True
            break
        a = jac.T @ jac
        diag = np.diag(a).copy()
        diag[diag <= 0] = 1.0
        accepted = False
        best_trial = np.inf
        while lam <= _LAM_MAX:
            try:
                dx = np.linalg.solve(a + lam * np.diag(diag), -grad)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            x_new = x + dx
            r_new = fun(x_new)
            new_cost = float(r_new @ r_new) if np.all(np.isfinite(r_new)) else np.inf
            best_trial = min(best_trial, new_cost)
            if new_cost < cost:
                rel = (cost - new_cost) / max(cost, _TINY)
                x, r, cost = x_new, r_new, new_cost
                lam = max(lam / 10.0, 1e-12)
                accepted = True
                if rel < _COST_RTOL:
                    converged = True
                break
            lam *= 10.0
        if not accepted or converged:
            if not accepted:
                # Damping exhausted: no step lowers the cost.  Converged if
                # the surface is flat at our resolution (the best rejected
                # trial left the cost unchanged to within _COST_RTOL) or the
                # scale-free gradient cosine is negligible (MINPACK gtol).
                flat = (best_trial - cost) / max(cost, _TINY) < _COST_RTOL
                r_norm = np.sqrt(max(cost, _TINY))
                col = np.sqrt((jac * jac).sum(axis=0))
                small_grad = bool(np.max(
                    np.abs(grad) / np.maximum(r_norm * col, _TINY)) < 1e-8)
                converged = flat or small_grad
            break
    return x, cost, it, converged


def _covariance(fun, x, n_resid):
    r = fun(x)
    jac = _jacobian(fun, x, r)
    a = jac.T @ jac
    p = x.size
    if n_resid <= p:
        raise DegenerateFit("fewer residuals than free parameters")
    # Equilibrate before the rank test: raw parameter scales span many
    # orders of magnitude (rad/s vs log-amplitudes), which would trip the
    # default tolerance on a perfectly well-posed problem.
    d = np.sqrt(np.diag(a))
    # A zero column means the data carry no information about that
    # parameter (e.g. a background fitted to data without a noise floor);
    # report it as unidentifiable (infinite variance) rather than failing.
    live = d > 0
    if not live.any():
        raise DegenerateFit("jacobian is zero at solution")
    dl = d[live]
    sub = a[np.ix_(live, live)]
    scaled = sub / np.outer(dl, dl)
    if np.linalg.matrix_rank(scaled) < int(live.sum()):
        raise DegenerateFit("jacobian rank-deficient at solution")
    chi2_red = float(r @ r) / (n_resid - p)
    cov = np.full((p, p), np.nan)
    np.fill_diagonal(cov, np.inf)
    cov[np.ix_(live, live)] = np.linalg.inv(scaled) / np.outer(dl, dl) * chi2_red
    return cov, chi2_red


# PSD model fit ------------------------------------------------------------


def _pack(params: SpectrumModelParams, free: list[str]) -> np.ndarray:
    out = []
    for name in free:
        value = getattr(params, name)
        if name in _LOG_PARAMS:
            value = math.log(max(value, _TINY))
        out.append(value)
    return np.array(out)


def _unpack(x: np.ndarray, free: list[str],
            base: SpectrumModelParams) -> SpectrumModelParams:
    updates = {}
    for name, value in zip(free, x):
        if name in _LOG_PARAMS:
            # clamp so squaring inside the model cannot overflow a double
            value = math.exp(min(max(value, -700.0), 345.0))
        updates[name] = float(value)
    return replace(base, **updates)


def fit_psd(data: PsdSeries, init: SpectrumModelParams,
            frozen: tuple[str, ...] = (), mass: float = 1.0,
            n_starts: int = 5, multistart_seed: int = 12345) -> FitResult:
    """Fit the multi-mode PSD model to a spectrum.

    Residuals are sqrt(n_avg) * (log model - log data): periodogram noise
    is multiplicative, so log-space residuals are close to homoscedastic
    with unit variance.  Positive parameters are optimized in log space.
    Runs ``n_starts`` deterministically perturbed starts and keeps the
    lowest cost.
    """
    unknown = set(frozen) - set(PARAM_NAMES)
    if unknown:
        raise ValueError(f"unknown frozen parameters: {sorted(unknown)}")
    free = [n for n in PARAM_NAMES if n not in frozen]
    good = data.values > 0
    if np.count_nonzero(good) < 10 * len(free):
        raise InsufficientPoints("need >= 10 bins per free parameter")
    omega = data.freqs[good]
    log_data = np.log(data.values[good])
    w = math.sqrt(max(data.n_avg, 1))

    if init.gamma_m < _GAMMA_FLOOR:
        init = replace(init, gamma_m=_GAMMA_FLOOR)

    def residuals(x):
        params = _unpack(x, free, init)
        model = psd_model(omega, params, mass)
        with np.errstate(divide="ignore", invalid="ignore"):
            return w * (np.log(model) - log_data)

    # Coarse 1-D refinement of each free mode frequency.  The log-cost
    # landscape is only quadratic within roughly half a linewidth of each
    # peak, so an init off by tens of kHz strands LM in a side basin; a
    # 0.5 % scan over +-25 % reliably relocates the resonance first.
    def _cost_of(params: SpectrumModelParams) -> float:
        r = residuals(_pack(params, free))
        return float(r @ r) if np.all(np.isfinite(r)) else np.inf

    for name in ("omega_x", "omega_y", "omega_z"):
        if name in frozen:
            continue
        base = getattr(init, name)
        cand = base * np.linspace(0.75, 1.25, 101)
        costs = [_cost_of(replace(init, **{name: float(c)})) for c in cand]
        init = replace(init, **{name: float(cand[int(np.argmin(costs))])})

    x0 = _pack(init, free)
    rng = np.random.default_rng(multistart_seed)
    candidates = []
    for start in range(max(n_starts, 1)):
        if start == 0:
            xs = x0
        else:
            # multiplicative 5 % jitter on the physical values: additive
            # jitter on the packed vector would scale a log-amplitude by
            # exp(0.05 * |log a|), i.e. orders of magnitude
            jitter = {n: getattr(init, n) * (1.0 + 0.05 * rng.standard_normal())
                      for n in free}
            xs = _pack(replace(init, **jitter), free)
        try:
            x, cost, n_iter, converged = levenberg_marquardt(residuals, xs)
        except NonFiniteModel:
            if start == 0:
                raise
            continue
        # A log parameter pinned at the unpack clamp has zero gradient
        # there, so LM stalls; such a "solution" is an artifact of the
        # clamp and only counts if no start found anything better.  An
        # amplitude or background at the lower clamp is the exception: it
        # simply means that component is absent from the data.
        pinned = False
        for i, name in enumerate(free):
            if name not in _LOG_PARAMS:
                continue
            if x[i] >= 340.0:
                pinned = True
            elif x[i] <= -690.0 and name in ("gamma_m", "g_y", "kappa"):
                pinned = True
        candidates.append((pinned, cost, x, n_iter, converged))
    pool = [c for c in candidates if not c[0]] or candidates
    _, cost, x, n_iter, converged = min(pool, key=lambda c: c[1])

    params = _unpack(x, free, init)
    cov, chi2_red = _covariance(residuals, x, omega.size)
    stderr = {name: 0.0 for name in PARAM_NAMES}
    for i, name in enumerate(free):
        sigma = math.sqrt(max(cov[i, i], 0.0))
        if name in _LOG_PARAMS:
            sigma *= getattr(params, name)  # log -> linear
        stderr[name] = sigma
    # sign of g is unidentifiable from a PSD; report the magnitude
    params = replace(params, g_y=abs(params.g_y))
    return FitResult(params=params, stderr=stderr, chi2_reduced=chi2_red,
                     n_iter=n_iter, converged=converged, cost=cost)


def fit_uncertainties(result: FitResult, data: PsdSeries,
                      frozen: tuple[str, ...] = (), mass: float = 1.0) -> dict[str, float]:
    """Standard errors from the Gauss-Newton Hessian at the fit optimum."""
    free = [n for n in PARAM_NAMES if n not in frozen]
    good = data.values > 0
    omega = data.freqs[good]
    log_data = np.log(data.values[good])
    w = math.sqrt(max(data.n_avg, 1))
    base = result.params

    def residuals(x):
        params = _unpack(x, free, base)
        model = psd_model(omega, params, mass)
        with np.errstate(divide="ignore", invalid="ignore"):
            return w * (np.log(model) - log_data)

    cov, _ = _covariance(residuals, _pack(base, free), omega.size)
    stderr = {name: 0.0 for name in PARAM_NAMES}
    for i, name in enumerate(free):
        sigma = math.sqrt(max(cov[i, i], 0.0))
        if name in _LOG_PARAMS:
            sigma *= getattr(base, name)
        stderr[name] = sigma
    return stderr


# Peak extraction ----------------------------------------------------------


def extract_peaks(data: PsdSeries, max_peaks: int = 8,
                  smooth_bins: int = 5) -> list[tuple[float, float, float]]:
    """Local maxima above the noise floor: (omega, height, width) by height.

    The floor is the spectrum median; the per-bin estimator noise is
    floor/sqrt(n_avg).  A candidate must clear floor + 3 sigma in a
    ``smooth_bins``-wide neighborhood average, which suppresses single-bin
    noise spikes.  Plateau ties resolve to the leftmost bin; widths come
    from half-maximum crossings with linear interpolation.
    """
    v = data.values
    n = v.size
    if n < 3:
        return []
    background = float(np.median(v))
    sigma = background / math.sqrt(max(data.n_avg, 1))
    threshold = background + 3.0 * sigma

    w = max(1, smooth_bins) | 1  # odd window
    kernel = np.ones(w)
    smooth = (np.convolve(v, kernel, mode="same")
              / np.convolve(np.ones(n), kernel, mode="same"))

    peaks = []
    i = 1
    while i < n - 1:
        if smooth[i] < smooth[i - 1]:
            i += 1
            continue
        # plateau scan; leftmost bin of a flat top wins
        j = i
        while j < n - 1 and smooth[j + 1] == smooth[j]:
            j += 1
        if j == n - 1 or smooth[j + 1] < smooth[i]:
            if smooth[i] >= threshold:
                lo = max(i - 1, 0)
                hi = min(i + 2, n)
                k = lo + int(np.argmax(v[lo:hi]))
                peaks.append(k)
            i = j + 1
        else:
            i = j + 1

    # merge maxima not separated by a genuine valley: a candidate must see
    # the smoothed spectrum fall below half its own excess between itself
    # and every taller accepted peak
    peaks.sort(key=lambda k: v[k], reverse=True)
    kept: list[int] = []
    for k in peaks:
        half_level = background + 0.5 * (smooth[k] - background)
        separated = True
        for other in kept:
            lo, hi = (k, other) if k < other else (other, k)
            if float(np.min(smooth[lo:hi + 1])) > half_level:
                separated = False
                break
        if separated:
            kept.append(k)

    candidates = []
    for k in kept:
        height = float(v[k])
        half = background + 0.5 * (height - background)
        left = float(data.freqs[0])
        for m in range(k - 1, -1, -1):
            if v[m] < half:
                frac = (half - v[m]) / (v[m + 1] - v[m])
                left = data.freqs[m] + frac * (data.freqs[m + 1] - data.freqs[m])
                break
        right = float(data.freqs[-1])
        for m in range(k + 1, n):
            if v[m] < half:
                frac = (v[m - 1] - half) / (v[m - 1] - v[m])
                right = data.freqs[m - 1] + frac * (data.freqs[m] - data.freqs[m - 1])
                break
        candidates.append((float(data.freqs[k]), height, float(right - left)))

    candidates.sort(key=lambda p: p[1], reverse=True)
    return candidates[:max_peaks]


# Avoided-crossing fit -----------------------------------------------------


def _branch_residuals(track: BranchTrack, use_plus: bool, use_minus: bool):
    axis = np.asarray(track.axis, dtype=float)
    plus = np.asarray(track.omega_plus, dtype=float)
    minus = np.asarray(track.omega_minus, dtype=float)
    conf = (np.ones_like(axis) if track.confidence is None
            else np.asarray(track.confidence, dtype=float))
    sel_p = np.isfinite(plus) if use_plus else np.zeros(plus.shape, bool)
    sel_m = np.isfinite(minus) if use_minus else np.zeros(minus.shape, bool)

    def residuals(x):
        g, omega_m = x
        out = []
        if sel_p.any():
            half = 0.5 * (omega_m + axis[sel_p])
            model = omega_m - half + np.sqrt(g * g + half * half)
            out.append(np.sqrt(conf[sel_p]) * (model - plus[sel_p]))
        if sel_m.any():
            half = 0.5 * (omega_m + axis[sel_m])
            model = omega_m - half - np.sqrt(g * g + half * half)
            out.append(np.sqrt(conf[sel_m]) * (model - minus[sel_m]))
        return np.concatenate(out) if out else np.empty(0)

    return residuals, int(sel_p.sum()) + int(sel_m.sum())


def _fit_branches(track: BranchTrack, use_plus: bool, use_minus: bool,
                  init: tuple[float, float]):
    residuals, n = _branch_residuals(track, use_plus, use_minus)
    x, cost, n_iter, converged = levenberg_marquardt(residuals, np.array(init))
    return x, cost, n_iter, converged, residuals, n


def fit_avoided_crossing(track: BranchTrack) -> CrossingFit:
    """Fit the hybrid eigenfrequencies jointly to both observed branches.

    Mirrors the standard presentation: the joint fit is the estimate, and
    upper-only / lower-only fits delimit the uncertainty band.  With a
    single observed branch the result is flagged (joint=False) and carries
    no band.
    """
    plus = np.asarray(track.omega_plus, dtype=float)
    minus = np.asarray(track.omega_minus, dtype=float)
    n_plus = int(np.isfinite(plus).sum())
    n_minus = int(np.isfinite(minus).sum())
    n_axis = int((np.isfinite(plus) | np.isfinite(minus)).sum())
    if n_axis < 4:
        raise InsufficientPoints("need >= 4 grid points with branch data")

    finite = np.concatenate([plus[np.isfinite(plus)], minus[np.isfinite(minus)]])
    omega0 = float(np.median(finite))
    if n_plus and n_minus:
        both = np.isfinite(plus) & np.isfinite(minus)
        g0 = float(np.min(plus[both] - minus[both]) / 2.0) if both.any() else 0.1 * omega0
    else:
        g0 = 0.05 * omega0
    g0 = max(abs(g0), 1e-6 * omega0)

    joint = bool(n_plus >= 1 and n_minus >= 1)
    use_plus, use_minus = (True, True) if joint else (n_plus > 0, n_minus > 0)
    x, cost, n_iter, converged, residuals, n = _fit_branches(
        track, use_plus, use_minus, (g0, omega0))
    cov, _ = _covariance(residuals, x, n)

    band = None
    if joint and n_plus >= 2 and n_minus >= 2:
        xu = _fit_branches(track, True, False, (abs(x[0]), x[1]))[0]
        xl = _fit_branches(track, False, True, (abs(x[0]), x[1]))[0]
        band = (abs(float(xu[0])), abs(float(xl[0])))

    return CrossingFit(
        g=abs(float(x[0])), omega_m=float(x[1]),
        stderr_g=math.sqrt(max(cov[0, 0], 0.0)),
        stderr_omega_m=math.sqrt(max(cov[1, 1], 0.0)),
        band=band, joint=joint, converged=converged, n_iter=n_iter)


# Position sinusoid fit ----------------------------------------------------


def fit_position_sinusoid(y0: np.ndarray, g_abs: np.ndarray,
                          lambda_c: float) -> SinusoidFit:
    """Fit |g_max sin(2 pi (y0 - y_off) / lambda_c)| with fixed period.

    Requires >= 6 points spanning at least lambda_c / 4.  Raises
    DegenerateFit when the points land at the nodes of the fitted sinusoid
    (amplitude unidentifiable).
    """
    y0 = np.asarray(y0, dtype=float)
    g_abs = np.asarray(g_abs, dtype=float)
    if y0.size < 6:
        raise InsufficientPoints("need >= 6 points")
    if y0.max() - y0.min() < lambda_c / 4.0 - 1e-15:
        raise InsufficientPoints("y0 span must be >= lambda_c/4")

    def model(x, y):
        g_max, y_off = x
        return np.abs(g_max * np.sin(2.0 * math.pi * (y - y_off) / lambda_c))

    def residuals(x):
        return model(x, y0) - g_abs

    # coarse offset scan (period lambda_c/2 in the absolute value), linear
    # LS amplitude at each offset
    best = None
    for y_off in np.linspace(0.0, lambda_c / 2.0, 33)[:-1]:
        m = np.abs(np.sin(2.0 * math.pi * (y0 - y_off) / lambda_c))
        denom = float(m @ m)
        if denom < 1e-12:
            continue
        g_max = float(m @ g_abs) / denom
        r = g_max * m - g_abs
        cost = float(r @ r)
        if best is None or cost < best[0]:
            best = (cost, g_max, y_off)
    if best is None:
        raise DegenerateFit("all points at sinusoid nodes")
    _, g_init, off_init = best

    x, cost, n_iter, converged = levenberg_marquardt(
        residuals, np.array([g_init, off_init]))
    m_fit = np.abs(np.sin(2.0 * math.pi * (y0 - x[1]) / lambda_c))
    if float(m_fit @ m_fit) < 1e-6 * y0.size:
        raise DegenerateFit("points cluster at nodes of the fitted sinusoid")
    cov, _ = _covariance(residuals, x, y0.size)
    return SinusoidFit(
        g_max=abs(float(x[0])),
        y_offset=float(x[1]) % (lambda_c / 2.0),
        stderr_g_max=math.sqrt(max(cov[0, 0], 0.0)),
        stderr_y_offset=math.sqrt(max(cov[1, 1], 0.0)),
        converged=converged, n_iter=n_iter)
