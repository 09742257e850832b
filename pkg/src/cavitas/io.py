"""File formats: CSV for series and maps, JSON for scalar reports.

Files carry ordinary frequencies in Hz; conversion to/from the internal
angular rad/s happens here.  All writers are atomic (temp file + rename).
"""

from __future__ import annotations

import json
import math
import os
import tempfile

import numpy as np

from .constants import TWO_PI
from .errors import ParseError
from .fitting import CrossingFit, FitResult, SinusoidFit
from .spectrum import PsdSeries


def atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".cavitas-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def psd_series_to_csv(series: PsdSeries) -> str:
    lines = [f"# n_avg={series.n_avg}", "freq_hz,psd_m2_per_hz"]
    for f, v in zip(series.freqs, series.values):
        lines.append(f"{float(f / TWO_PI)!r},{float(v)!r}")
    return "\n".join(lines) + "\n"


def read_psd_csv(path: str) -> PsdSeries:
    n_avg = 1
    freqs = []
    values = []
    try:
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    if "n_avg=" in line:
                        n_avg = int(line.split("n_avg=")[1])
                    continue
                if line[0].isalpha():
                    continue  # header
                f, v = line.split(",")
                freqs.append(float(f) * TWO_PI)
                values.append(float(v))
    except FileNotFoundError:
        raise ParseError(f"input file not found: {path}") from None
    except ValueError as exc:
        raise ParseError(f"malformed CSV {path}: {exc}") from None
    if not freqs:
        raise ParseError(f"no data rows in {path}")
    return PsdSeries(np.array(freqs), np.array(values), n_avg=n_avg)


def timeseries_to_csv(t: np.ndarray, q: np.ndarray) -> str:
    lines = ["t_s,q_m"]
    for ti, qi in zip(t, q):
        lines.append(f"{float(ti)!r},{float(qi)!r}")
    return "\n".join(lines) + "\n"


def map_to_csv(axis_name: str, axis_values: np.ndarray,
               freq_grid: np.ndarray, rows: np.ndarray) -> str:
    """2D PSD map: first column the sweep axis in SI, header in Hz."""
    header = axis_name + "," + ",".join(f"{float(f / TWO_PI)!r}" for f in freq_grid)
    lines = [header]
    for a, row in zip(axis_values, rows):
        lines.append(f"{float(a)!r}," + ",".join(f"{float(v)!r}" for v in row))
    return "\n".join(lines) + "\n"


def read_branch_csv(path: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Branch track CSV: axis_si, omega_plus_hz, omega_minus_hz (blank = missing)."""
    axis, plus, minus = [], [], []
    try:
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#") or line[0].isalpha():
                    continue
                cells = line.split(",")
                axis.append(float(cells[0]))
                plus.append(float(cells[1]) * TWO_PI if cells[1] else math.nan)
                minus.append(float(cells[2]) * TWO_PI if len(cells) > 2 and cells[2]
                             else math.nan)
    except FileNotFoundError:
        raise ParseError(f"input file not found: {path}") from None
    except (ValueError, IndexError) as exc:
        raise ParseError(f"malformed CSV {path}: {exc}") from None
    if not axis:
        raise ParseError(f"no data rows in {path}")
    return np.array(axis), np.array(plus), np.array(minus)


def read_position_csv(path: str) -> tuple[np.ndarray, np.ndarray]:
    """Position track CSV: y0_m, g_abs_hz."""
    y0, g = [], []
    try:
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#") or line[0].isalpha():
                    continue
                a, b = line.split(",")[:2]
                y0.append(float(a))
                g.append(float(b) * TWO_PI)
    except FileNotFoundError:
        raise ParseError(f"input file not found: {path}") from None
    except ValueError as exc:
        raise ParseError(f"malformed CSV {path}: {exc}") from None
    if not y0:
        raise ParseError(f"no data rows in {path}")
    return np.array(y0), np.array(g)


def _hz(x: float) -> float:
    return x / TWO_PI


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def fit_result_to_json(result: FitResult) -> str:
    p = result.params
    doc = {
        "params_rad_s": {
            "omega_x": p.omega_x, "omega_y": p.omega_y, "omega_z": p.omega_z,
            "gamma_m": p.gamma_m, "g_y": p.g_y, "kappa": p.kappa,
            "delta": p.delta,
        },
        "params": {
            "omega_x_hz": _hz(p.omega_x), "omega_y_hz": _hz(p.omega_y),
            "omega_z_hz": _hz(p.omega_z), "gamma_m_hz": _hz(p.gamma_m),
            "g_y_hz": _hz(p.g_y), "kappa_hz": _hz(p.kappa),
            "delta_hz": _hz(p.delta),
        },
        "amplitudes": {"a_x": p.a_x, "a_y": p.a_y, "a_z": p.a_z,
                       "background": p.background},
        "stderr_rad_s": result.stderr,
        "chi2_reduced": result.chi2_reduced,
        "n_iter": result.n_iter,
        "converged": result.converged,
        "cost": result.cost,
    }
    return json.dumps(doc, indent=2, default=_json_default) + "\n"


def crossing_fit_to_json(fit: CrossingFit) -> str:
    doc = {
        "g_rad_s": fit.g, "g_hz": _hz(fit.g),
        "omega_m_rad_s": fit.omega_m, "omega_m_hz": _hz(fit.omega_m),
        "stderr_g_hz": _hz(fit.stderr_g),
        "stderr_omega_m_hz": _hz(fit.stderr_omega_m),
        "band_g_hz": [_hz(b) for b in fit.band] if fit.band else None,
        "joint": fit.joint,
        "converged": fit.converged,
        "n_iter": fit.n_iter,
    }
    return json.dumps(doc, indent=2, default=_json_default) + "\n"


def sinusoid_fit_to_json(fit: SinusoidFit) -> str:
    doc = {
        "g_max_rad_s": fit.g_max, "g_max_hz": _hz(fit.g_max),
        "y_offset_m": fit.y_offset,
        "stderr_g_max_hz": _hz(fit.stderr_g_max),
        "stderr_y_offset_m": fit.stderr_y_offset,
        "converged": fit.converged,
        "n_iter": fit.n_iter,
    }
    return json.dumps(doc, indent=2, default=_json_default) + "\n"
