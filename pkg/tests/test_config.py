import dataclasses
import json
import math
import os

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cavitas import (apply_overrides, load_spec, paper_baseline_path,
                     serialize, validate)
from cavitas.config import spec_from_dict, spec_to_dict
from cavitas.constants import TWO_PI
from cavitas.errors import ParseError, UnitError, UnknownKey, ValidationError
from cavitas.units import parse_quantity

SILICA = 1850.0


def baseline_doc():
    with open(paper_baseline_path()) as fh:
        return json.load(fh)


# loading ------------------------------------------------------------------

def test_baseline_values(baseline):
    assert baseline.particle.mass == pytest.approx(6.4e-18)
    assert baseline.cavity.fsr == pytest.approx(TWO_PI * 5.4e9)
    assert baseline.cavity.finesse == pytest.approx(5.4e5)
    assert baseline.env.pressure == pytest.approx(140.0)  # 1.4 mbar in Pa
    assert baseline.modes.omega_y == pytest.approx(TWO_PI * 197e3)
    assert baseline.position.y0 == pytest.approx(baseline.cavity.wavelength / 4)
    assert baseline.detuning < 0


def test_baseline_validates_clean(baseline):
    assert validate(baseline) == []


def test_mass_from_density():
    doc = baseline_doc()
    doc["particle"] = {"radius": "90 nm", "density": SILICA,
                       "refractive_index": 1.45}
    spec = spec_from_dict(doc)
    expected = 4.0 / 3.0 * math.pi * (90e-9) ** 3 * SILICA
    assert spec.particle.mass == pytest.approx(expected)
    assert spec.particle.mass == pytest.approx(5.65e-18, rel=1e-2)


def test_mass_and_density_both_rejected():
    doc = baseline_doc()
    doc["particle"]["density"] = SILICA
    with pytest.raises(ParseError, match="mass"):
        spec_from_dict(doc)


def test_bad_refractive_index():
    doc = baseline_doc()
    doc["particle"]["refractive_index"] = 0.9
    with pytest.raises(ValidationError, match="refractive_index"):
        spec_from_dict(doc)


def test_negative_pressure_flagged(baseline):
    spec = dataclasses.replace(
        baseline, env=dataclasses.replace(baseline.env, pressure=-1.0))
    assert any(v.startswith("pressure") for v in validate(spec))


def test_nonzero_polarization_flagged(baseline):
    spec = dataclasses.replace(
        baseline, trap=dataclasses.replace(baseline.trap,
                                           polarization_angle=0.3))
    assert any("polarization_angle" in v for v in validate(spec))


def test_missing_file_is_parse_error(tmp_path):
    with pytest.raises(ParseError, match="not found"):
        load_spec(tmp_path / "nope.json")


def test_malformed_json_is_parse_error(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ParseError, match="malformed"):
        load_spec(bad)


def test_wrong_schema_rejected():
    doc = baseline_doc()
    doc["schema"] = 2
    with pytest.raises(ParseError, match="schema"):
        spec_from_dict(doc)


# round trip -----------------------------------------------------------------

def test_serialize_round_trip_bit_identical(baseline, tmp_path):
    path = tmp_path / "spec.json"
    path.write_text(serialize(baseline))
    again = load_spec(path)
    assert again == baseline  # frozen dataclasses: field-wise bit equality


@settings(max_examples=25, deadline=None)
@given(
    radius=st.floats(10e-9, 500e-9),
    power=st.floats(1e-3, 10.0),
    pressure=st.floats(1e-7, 1e3),
    y0=st.floats(0.0, 1e-6),
    detuning=st.floats(-3e6, -1e3),
)
def test_round_trip_random_specs(radius, power, pressure, y0, detuning):
    doc = baseline_doc()
    doc["particle"]["radius"] = radius
    doc["trap"]["power"] = power
    doc["environment"]["pressure"] = pressure
    doc["position"]["y0"] = y0
    doc["detuning"] = f"{detuning} Hz"
    spec = spec_from_dict(doc)
    assert spec_from_dict(json.loads(serialize(spec))) == spec


def test_spec_to_dict_inverts_from_dict(baseline):
    assert spec_from_dict(spec_to_dict(baseline)) == baseline


# units ----------------------------------------------------------------------

def test_unit_table_spot_checks():
    assert parse_quantity("1.4 mbar", "pressure") == pytest.approx(140.0)
    assert parse_quantity("150 mW", "power") == pytest.approx(0.15)
    assert parse_quantity("1064 nm", "length") == pytest.approx(1.064e-6)
    assert parse_quantity("5.4 GHz", "frequency") == pytest.approx(TWO_PI * 5.4e9)
    assert parse_quantity("1 rad/s", "frequency") == 1.0
    assert parse_quantity(298, "temperature") == 298.0


def test_unknown_suffix_errors():
    with pytest.raises(UnitError):
        parse_quantity("10 furlongs", "length")


def test_dimension_mismatch_errors():
    with pytest.raises(UnitError):
        parse_quantity("10 kHz", "pressure")


@settings(max_examples=50, deadline=None)
@given(st.text(alphabet="abcdefgXYZ/%^", min_size=1, max_size=6))
def test_unit_table_is_total(suffix):
    from cavitas.units import _TABLE
    if suffix in _TABLE:
        dim, _factor = _TABLE[suffix]
        assert parse_quantity(f"1 {suffix}", dim) != 0.0
    else:
        with pytest.raises(UnitError):
            parse_quantity(f"1 {suffix}", "length")


# overrides --------------------------------------------------------------------

def test_empty_overrides_identity(baseline):
    assert apply_overrides(baseline, {}) == baseline


def test_pressure_override_scales_damping(baseline):
    from cavitas.coupling import gas_damping
    low = apply_overrides(baseline, {"environment.pressure": "3e-7 mbar"})
    assert baseline == apply_overrides(baseline, {})  # original untouched
    ratio = gas_damping(low.particle, low.env) / \
        gas_damping(baseline.particle, baseline.env)
    assert ratio == pytest.approx(3e-7 / 1.4, rel=1e-12)


def test_unknown_override_key(baseline):
    with pytest.raises(UnknownKey):
        apply_overrides(baseline, {"cavity.quality": 1.0})


def test_cavitas_config_env(baseline, tmp_path, monkeypatch):
    from cavitas.config import default_config_path
    path = tmp_path / "spec.json"
    path.write_text(serialize(baseline))
    monkeypatch.setenv("CAVITAS_CONFIG", str(path))
    assert default_config_path() == str(path)
    assert load_spec(default_config_path()) == baseline
    monkeypatch.delenv("CAVITAS_CONFIG")
    assert default_config_path() is None
