"""Experiment configuration: types, validation, JSON ingestion.

The JSON schema (version 1) mirrors the dataclass fields below.  Quantities
are numbers in SI or suffixed strings ("150 mW", "5.4 GHz").  Frequency
fields are ordinary frequencies in files and become angular (rad/s)
internally.  ``CAVITAS_CONFIG`` provides a default config path for the CLI.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, replace
from importlib import resources

from .constants import AIR_MOLECULE_MASS, SILICA_DENSITY, TWO_PI
from .errors import ParseError, UnknownKey, ValidationError
from .units import format_angular_frequency, parse_quantity

SCHEMA_VERSION = 1
CONFIG_ENV_VAR = "CAVITAS_CONFIG"


@dataclass(frozen=True)
class ParticleSpec:
    radius: float            # m
    mass: float              # kg
    refractive_index: float  # dimensionless


@dataclass(frozen=True)
class TrapSpec:
    wavelength: float          # m
    power: float               # W
    waist_x: float             # m
    waist_y: float             # m
    polarization_angle: float = 0.0  # rad; only 0 supported in v1
    na: float = 0.0            # informational


@dataclass(frozen=True)
class CavitySpec:
    wavelength: float  # m
    finesse: float     # dimensionless
    fsr: float         # rad/s (angular free spectral range)
    waist: float       # m

    @property
    def length(self) -> float:
        """Cavity length from the free spectral range."""
        from .constants import CONST
        return math.pi * CONST.c / self.fsr

    @property
    def linewidth(self) -> float:
        """Angular linewidth kappa = FSR / finesse."""
        return self.fsr / self.finesse


@dataclass(frozen=True)
class EnvironmentSpec:
    pressure: float            # Pa
    temperature: float         # K
    gas_molecular_mass: float = AIR_MOLECULE_MASS  # kg
    recoil_rate: float = 0.0   # rad/s, user supplied


@dataclass(frozen=True)
class ParticlePosition:
    y0: float        # m along the cavity axis; lambda_c/4 = intensity minimum
    dz: float = 0.0  # m, axial offset from the cavity waist plane
    dx: float = 0.0  # m, transverse offset


@dataclass(frozen=True)
class MechanicalModes:
    omega_x: float  # rad/s
    omega_y: float  # rad/s
    omega_z: float  # rad/s


@dataclass(frozen=True)
class ExperimentSpec:
    particle: ParticleSpec
    trap: TrapSpec
    cavity: CavitySpec
    env: EnvironmentSpec
    position: ParticlePosition
    modes: MechanicalModes
    detuning: float  # rad/s; red detuning is negative


def validate(spec: ExperimentSpec) -> list[str]:
    """Return every invariant violation as a "field: rule" string."""
    v: list[str] = []
    p = spec.particle
    if not p.radius > 0:
        v.append("radius: must be > 0")
    if not p.mass > 0:
        v.append("mass: must be > 0")
    if not p.refractive_index > 1:
        v.append("refractive_index: must be > 1")
    t = spec.trap
    if not t.wavelength > 0:
        v.append("trap.wavelength: must be > 0")
    if not t.power > 0:
        v.append("power: must be > 0")
    if not (t.waist_x > 0 and t.waist_y > 0):
        v.append("waist: trap waists must be > 0")
    if t.polarization_angle != 0.0:
        v.append("polarization_angle: only theta=0 supported")
    c = spec.cavity
    if not (c.wavelength > 0 and c.finesse > 0 and c.fsr > 0 and c.waist > 0):
        v.append("cavity: wavelength, finesse, fsr and waist must be > 0")
    e = spec.env
    if e.pressure < 0:
        v.append("pressure: must be >= 0")
    if not e.temperature > 0:
        v.append("temperature: must be > 0")
    if not e.gas_molecular_mass > 0:
        v.append("gas_molecular_mass: must be > 0")
    if e.recoil_rate < 0:
        v.append("recoil_rate: must be >= 0")
    m = spec.modes
    if not (m.omega_x > 0 and m.omega_y > 0 and m.omega_z > 0):
        v.append("modes: eigenfrequencies must be > 0")
    for name in ("y0", "dz", "dx"):
        if not math.isfinite(getattr(spec.position, name)):
            v.append(f"{name}: must be finite")
    if not math.isfinite(spec.detuning):
        v.append("detuning: must be finite")
    return v


def _section(doc: dict, name: str) -> dict:
    sec = doc.get(name)
    if not isinstance(sec, dict):
        raise ParseError(f"missing or malformed section {name!r}")
    return sec


def _require(sec: dict, name: str, dimension: str) -> float:
    if name not in sec:
        raise ParseError(f"missing field {name!r}")
    return parse_quantity(sec[name], dimension, field=name)


def _optional(sec: dict, name: str, dimension: str, default: float) -> float:
    if name not in sec:
        return default
    return parse_quantity(sec[name], dimension, field=name)


def spec_from_dict(doc: dict) -> ExperimentSpec:
    """Build and validate an :class:`ExperimentSpec` from a schema-1 dict."""
    if doc.get("schema") != SCHEMA_VERSION:
        raise ParseError(f"unsupported schema version {doc.get('schema')!r}")

    psec = _section(doc, "particle")
    radius = _require(psec, "radius", "length")
    has_mass = "mass" in psec
    has_density = "density" in psec
    if has_mass == has_density:
        raise ParseError("particle: exactly one of {mass, density} required")
    if has_mass:
        mass = parse_quantity(psec["mass"], "mass", field="mass")
    else:
        density = parse_quantity(psec["density"], "density", field="density")
        if not density > 0:
            raise ValidationError("density: must be > 0")
        mass = 4.0 / 3.0 * math.pi * radius**3 * density
    particle = ParticleSpec(radius, mass, float(psec.get("refractive_index", 0.0)))

    tsec = _section(doc, "trap")
    trap = TrapSpec(
        wavelength=_require(tsec, "wavelength", "length"),
        power=_require(tsec, "power", "power"),
        waist_x=_require(tsec, "waist_x", "length"),
        waist_y=_require(tsec, "waist_y", "length"),
        polarization_angle=_optional(tsec, "polarization_angle", "angle", 0.0),
        na=float(tsec.get("na", 0.0)),
    )

    csec = _section(doc, "cavity")
    cavity = CavitySpec(
        wavelength=_require(csec, "wavelength", "length"),
        finesse=float(csec["finesse"]) if "finesse" in csec else _raise_missing("finesse"),
        fsr=_require(csec, "fsr", "frequency"),
        waist=_require(csec, "waist", "length"),
    )

    esec = _section(doc, "environment")
    env = EnvironmentSpec(
        pressure=_require(esec, "pressure", "pressure"),
        temperature=_require(esec, "temperature", "temperature"),
        gas_molecular_mass=_optional(esec, "gas_molecular_mass", "mass",
                                     AIR_MOLECULE_MASS),
        recoil_rate=_optional(esec, "recoil_rate", "frequency", 0.0),
    )

    possec = _section(doc, "position")
    position = ParticlePosition(
        y0=_require(possec, "y0", "length"),
        dz=_optional(possec, "dz", "length", 0.0),
        dx=_optional(possec, "dx", "length", 0.0),
    )

    msec = _section(doc, "modes")
    modes = MechanicalModes(
        omega_x=_require(msec, "freq_x", "frequency"),
        omega_y=_require(msec, "freq_y", "frequency"),
        omega_z=_require(msec, "freq_z", "frequency"),
    )

    if "detuning" not in doc:
        raise ParseError("missing field 'detuning'")
    detuning = parse_quantity(doc["detuning"], "frequency", field="detuning")

    spec = ExperimentSpec(particle, trap, cavity, env, position, modes, detuning)
    violations = validate(spec)
    if violations:
        raise ValidationError("; ".join(violations))
    return spec


def _raise_missing(name: str):
    raise ParseError(f"missing field {name!r}")


def load_spec(path: str | os.PathLike) -> ExperimentSpec:
    """Load, validate and SI-normalize an experiment config file."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ParseError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON in {path}: {exc}") from None
    if not isinstance(doc, dict):
        raise ParseError(f"config root must be an object: {path}")
    return spec_from_dict(doc)


def spec_to_dict(spec: ExperimentSpec) -> dict:
    """Serialize to the schema-1 dict form.

    Plain SI dimensions are emitted as bare numbers; angular frequencies go
    through :func:`format_angular_frequency` so a reload is bit-identical.
    """
    return {
        "schema": SCHEMA_VERSION,
        "particle": {
            "radius": spec.particle.radius,
            "mass": spec.particle.mass,
            "refractive_index": spec.particle.refractive_index,
        },
        "trap": {
            "wavelength": spec.trap.wavelength,
            "power": spec.trap.power,
            "waist_x": spec.trap.waist_x,
            "waist_y": spec.trap.waist_y,
            "polarization_angle": spec.trap.polarization_angle,
            "na": spec.trap.na,
        },
        "cavity": {
            "wavelength": spec.cavity.wavelength,
            "finesse": spec.cavity.finesse,
            "fsr": format_angular_frequency(spec.cavity.fsr),
            "waist": spec.cavity.waist,
        },
        "environment": {
            "pressure": spec.env.pressure,
            "temperature": spec.env.temperature,
            "gas_molecular_mass": spec.env.gas_molecular_mass,
            "recoil_rate": format_angular_frequency(spec.env.recoil_rate),
        },
        "position": {
            "y0": spec.position.y0,
            "dz": spec.position.dz,
            "dx": spec.position.dx,
        },
        "modes": {
            "freq_x": format_angular_frequency(spec.modes.omega_x),
            "freq_y": format_angular_frequency(spec.modes.omega_y),
            "freq_z": format_angular_frequency(spec.modes.omega_z),
        },
        "detuning": format_angular_frequency(spec.detuning),
    }


def serialize(spec: ExperimentSpec) -> str:
    return json.dumps(spec_to_dict(spec), indent=2)


# CLI override handling ------------------------------------------------------

# dotted override key -> (section, field, dimension); top-level detuning has
# section None.
_OVERRIDE_DIMS: dict[str, str] = {
    "particle.radius": "length",
    "particle.mass": "mass",
    "particle.refractive_index": "dimensionless",
    "trap.wavelength": "length",
    "trap.power": "power",
    "trap.waist_x": "length",
    "trap.waist_y": "length",
    "trap.polarization_angle": "angle",
    "trap.na": "dimensionless",
    "cavity.wavelength": "length",
    "cavity.finesse": "dimensionless",
    "cavity.fsr": "frequency",
    "cavity.waist": "length",
    "environment.pressure": "pressure",
    "environment.temperature": "temperature",
    "environment.gas_molecular_mass": "mass",
    "environment.recoil_rate": "frequency",
    "position.y0": "length",
    "position.dz": "length",
    "position.dx": "length",
    "modes.freq_x": "frequency",
    "modes.freq_y": "frequency",
    "modes.freq_z": "frequency",
    "detuning": "frequency",
}

_FIELD_ALIASES = {
    "environment.pressure": ("env", "pressure"),
    "environment.temperature": ("env", "temperature"),
    "environment.gas_molecular_mass": ("env", "gas_molecular_mass"),
    "environment.recoil_rate": ("env", "recoil_rate"),
    "modes.freq_x": ("modes", "omega_x"),
    "modes.freq_y": ("modes", "omega_y"),
    "modes.freq_z": ("modes", "omega_z"),
}


def apply_overrides(spec: ExperimentSpec, overrides: dict[str, object]) -> ExperimentSpec:
    """Return a copy of ``spec`` with dotted-key overrides applied.

    Keys and unit parsing match the config file schema, e.g.
    ``{"environment.pressure": "3e-7 mbar"}``.
    """
    out = spec
    for key, raw in overrides.items():
        if key not in _OVERRIDE_DIMS:
            raise UnknownKey(f"unknown config key {key!r}")
        value = parse_quantity(raw, _OVERRIDE_DIMS[key], field=key)
        if key == "detuning":
            out = replace(out, detuning=value)
            continue
        attr, field = _FIELD_ALIASES.get(
            key, (key.split(".")[0], key.split(".")[1]))
        section = replace(getattr(out, attr), **{field: value})
        out = replace(out, **{attr: section})
    violations = validate(out)
    if violations:
        raise ValidationError("; ".join(violations))
    return out


def paper_baseline_path() -> str:
    """Path of the shipped baseline configuration."""
    return str(resources.files("cavitas").joinpath("data/paper_baseline.json"))


def default_config_path() -> str | None:
    return os.environ.get(CONFIG_ENV_VAR)
