"""Fixed-table unit parsing for configuration values.

A quantity is either a bare number (interpreted in the SI base unit of its
dimension) or a string ``"<number> <suffix>"``.  The suffix table is total:
every accepted suffix maps to exactly one SI factor, anything else raises
:class:`UnitError`.

Frequency-like fields are special: files and the CLI carry ordinary
frequencies (Hz and friends), which are converted to angular rad/s with an
explicit factor 2*pi on input.  A ``rad/s`` suffix bypasses the 2*pi so the
serializer can round-trip angular values bit-exactly.
"""

from __future__ import annotations

import math

from .constants import TWO_PI
from .errors import UnitError

# suffix -> (dimension, factor to SI base)
_TABLE: dict[str, tuple[str, float]] = {
    # length -> m
    "m": ("length", 1.0),
    "cm": ("length", 1e-2),
    "mm": ("length", 1e-3),
    "um": ("length", 1e-6),
    "µm": ("length", 1e-6),
    "nm": ("length", 1e-9),
    "pm": ("length", 1e-12),
    # power -> W
    "W": ("power", 1.0),
    "mW": ("power", 1e-3),
    "uW": ("power", 1e-6),
    "kW": ("power", 1e3),
    # ordinary frequency -> Hz (converted to rad/s by the caller for
    # angular fields)
    "Hz": ("frequency", 1.0),
    "kHz": ("frequency", 1e3),
    "MHz": ("frequency", 1e6),
    "GHz": ("frequency", 1e9),
    "THz": ("frequency", 1e12),
    # angular frequency, already rad/s
    "rad/s": ("angular_frequency", 1.0),
    # pressure -> Pa
    "Pa": ("pressure", 1.0),
    "hPa": ("pressure", 1e2),
    "kPa": ("pressure", 1e3),
    "bar": ("pressure", 1e5),
    "mbar": ("pressure", 1e2),
    # temperature -> K (absolute scales only)
    "K": ("temperature", 1.0),
    # mass -> kg
    "kg": ("mass", 1.0),
    "g": ("mass", 1e-3),
    "ug": ("mass", 1e-9),
    "ng": ("mass", 1e-12),
    # density -> kg/m^3
    "kg/m^3": ("density", 1.0),
    "kg/m3": ("density", 1.0),
    "g/cm^3": ("density", 1e3),
    "g/cm3": ("density", 1e3),
    # angle -> rad
    "rad": ("angle", 1.0),
    "mrad": ("angle", 1e-3),
    "deg": ("angle", math.pi / 180.0),
    # time -> s
    "s": ("time", 1.0),
    "ms": ("time", 1e-3),
    "us": ("time", 1e-6),
    "ns": ("time", 1e-9),
}

# dimensions for which a bare number is acceptable, mapped to their SI base
_BARE_OK = {
    "length", "power", "frequency", "pressure", "temperature",
    "mass", "density", "angle", "time", "dimensionless",
}


def parse_quantity(value, dimension: str, field: str = "") -> float:
    """Convert a config value to SI.

    ``dimension`` is the expected physical dimension; for ``"frequency"``
    the result is angular (rad/s), i.e. Hz input is multiplied by 2*pi.
    """
    where = f" (field {field!r})" if field else ""
    if isinstance(value, bool):
        raise UnitError(f"boolean is not a quantity{where}")
    if isinstance(value, (int, float)):
        num = float(value)
        if dimension == "frequency":
            return num * TWO_PI
        return num
    if not isinstance(value, str):
        raise UnitError(f"cannot parse quantity of type {type(value).__name__}{where}")

    parts = value.strip().split(None, 1)
    if len(parts) == 1:
        # unit-less string, e.g. "1.45"
        try:
            num = float(parts[0])
        except ValueError:
            raise UnitError(f"malformed quantity {value!r}{where}") from None
        if dimension == "frequency":
            return num * TWO_PI
        return num

    num_str, suffix = parts
    try:
        num = float(num_str)
    except ValueError:
        raise UnitError(f"malformed quantity {value!r}{where}") from None
    suffix = suffix.strip()
    if suffix not in _TABLE:
        raise UnitError(f"unknown unit suffix {suffix!r}{where}")
    dim, factor = _TABLE[suffix]
    if dimension == "frequency":
        if dim == "frequency":
            return num * factor * TWO_PI
        if dim == "angular_frequency":
            return num * factor
        raise UnitError(f"unit {suffix!r} is not a frequency{where}")
    if dim != dimension:
        raise UnitError(f"unit {suffix!r} is not a {dimension}{where}")
    return num * factor


def format_angular_frequency(omega: float) -> str:
    """Serialize an angular frequency, preferring Hz when exact.

    Emits ``"<x> Hz"`` when x*2*pi reproduces ``omega`` bitwise; otherwise
    falls back to ``"<omega> rad/s"`` so serialize -> load round-trips are
    bit-identical.
    """
    hz = omega / TWO_PI
    if hz * TWO_PI == omega:
        return f"{hz!r} Hz"
    return f"{omega!r} rad/s"
