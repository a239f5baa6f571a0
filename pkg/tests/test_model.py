import dataclasses
import json
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qmfs import budget
from qmfs.errors import ConfigError, RegimeWarning
from qmfs.model import (CavityMode, MechanicalMode, QuadratureSelector, SystemConfig, ToneSet,
                        collective, dumps, fold_phase, generalized, hz, load, load_preset,
                        loads, paper_default_config, parse_quadrature, preset_names, save,
                        single, to_dict, to_hz, validate)


def test_paper_device_accepted_without_warnings():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        cfg = paper_default_config()
    assert to_hz(cfg.mech[0].omega) == pytest.approx(6.692e6)
    assert to_hz(cfg.mech[1].omega) == pytest.approx(9.032e6)
    assert to_hz(cfg.pump_cavity.kappa) == pytest.approx(1.58e6)
    assert to_hz(cfg.pump_cavity.kappa_ext) == pytest.approx(1.45e6)
    assert to_hz(cfg.pump_cavity.kappa_int) == pytest.approx(130e3)


def test_default_device_thermal_and_mean_gamma():
    cfg = paper_default_config()
    assert budget.thermal_variance(cfg.mech[0].n_thermal, cfg.mech[1].n_thermal) == 28.5
    assert to_hz(cfg.gamma_intrinsic_mean) == pytest.approx(69.5)


def test_undamped_cavity_rejected(device):
    cav = dataclasses.replace(device.pump_cavity, kappa_ext=0.0, kappa_int=0.0)
    with pytest.raises(ConfigError, match="cavity undamped"):
        validate(device.replace(pump_cavity=cav))


def test_degenerate_oscillators_warn(device):
    m2 = dataclasses.replace(device.mech[1], omega=device.mech[0].omega)
    with pytest.warns(RegimeWarning, match="sideband separation violates RWA"):
        validate(device.replace(mech=(device.mech[0], m2)))


@pytest.mark.parametrize("field,value", [
    ("n_thermal", -1.0), ("gamma_intrinsic", 0.0), ("omega", float("nan")),
])
def test_bad_mechanics_name_field(device, field, value):
    m = dataclasses.replace(device.mech[0], **{field: value})
    with pytest.raises(ConfigError) as err:
        validate(device.replace(mech=(m, device.mech[1])))
    assert field in err.value.field


def test_cooled_gamma_below_intrinsic_rejected(device):
    m = dataclasses.replace(device.mech[0], gamma_effective=0.5 * device.mech[0].gamma_intrinsic)
    with pytest.raises(ConfigError, match="gamma_effective"):
        validate(device.replace(mech=(m, device.mech[1])))


def test_probe_tones_need_probe_cavity(tomo):
    with pytest.raises(ConfigError, match="probe cavity"):
        validate(tomo.replace(probe_cavity=None))


def test_phases_fold():
    assert fold_phase(-math.pi / 2) == pytest.approx(1.5 * math.pi)
    assert fold_phase(2 * math.pi) == 0.0
    ts = ToneSet.uniform(1.0, 1.0, (4 * math.pi, -math.pi, 0.0, 7.0))
    assert all(0.0 <= p < 2 * math.pi for p in ts.phases)


def test_blue_ratio():
    ts = ToneSet.uniform(2.0, 1.0, blue_ratio=0.37)
    assert ts.amplitudes == (2.0, 0.74, 2.0, 0.74)


# -- serialization ------------------------------------------------------------

pos = st.floats(min_value=1e-3, max_value=1e9, allow_nan=False, allow_infinity=False)
occ = st.floats(min_value=0.0, max_value=1e3, allow_nan=False)
phase = st.floats(min_value=-20.0, max_value=20.0, allow_nan=False)


@st.composite
def configs(draw):
    mech = []
    for _ in range(2):
        g0 = draw(pos)
        mech.append(MechanicalMode(draw(pos), g0, g0 * draw(st.floats(1.0, 100.0)), draw(occ)))
    cav = CavityMode(draw(pos), draw(pos), draw(pos), draw(occ))
    tones = ToneSet.uniform(draw(pos), draw(pos), [draw(phase) for _ in range(4)],
                            draw(st.floats(0.0, 2.0)))
    probe = draw(st.booleans())
    return SystemConfig(
        tuple(mech), cav, tones,
        probe_cavity=CavityMode(draw(pos), draw(pos), draw(pos), draw(occ)) if probe else None,
        probe_tones=ToneSet.uniform(draw(pos), tones.detuning) if probe else None,
        amplifier_noise=draw(occ))


@settings(max_examples=200, deadline=None)
@given(configs())
def test_round_trip_byte_identical(cfg):
    text = dumps(cfg)
    assert dumps(loads(text)) == text


def test_round_trip_file(tmp_path, tomo):
    path = tmp_path / "c.json"
    save(tomo, path)
    again = load(path)
    assert dumps(again) == path.read_text()
    assert again.probe_tones.amplitudes == pytest.approx(tomo.probe_tones.amplitudes, rel=1e-15)


def test_malformed_json_names_location():
    with pytest.raises(ConfigError) as err:
        loads('{"schema_version": 1,')
    assert err.value.field == "<json>"
    assert "line 1" in str(err.value)


def test_missing_field_named(device):
    doc = to_dict(device)
    del doc["pump_cavity"]["kappa_ext_hz"]
    with pytest.raises(ConfigError) as err:
        loads(json.dumps(doc))
    assert err.value.field == "pump_cavity.kappa_ext_hz"


def test_wrong_type_named(device):
    doc = to_dict(device)
    doc["mechanical"][1]["n_thermal"] = "hot"
    with pytest.raises(ConfigError, match=r"mechanical\[2\]\.n_thermal"):
        loads(json.dumps(doc))


def test_schema_version_mismatch(device):
    doc = to_dict(device)
    doc["schema_version"] = 99
    with pytest.raises(ConfigError, match="schema version 99"):
        loads(json.dumps(doc))


def test_presets_load_and_validate():
    names = preset_names()
    assert {"paper_device", "fig2_weak", "fig2_strong", "fig3", "fig3_tomography", "fig4"} <= set(names)
    for name in names:
        validate(load_preset(name))
    with pytest.raises(ConfigError, match="unknown preset"):
        load_preset("nope")


def test_fig2_presets_match_stated_parameters(weak, strong):
    assert budget.thermal_variance(weak.mech[0].n_thermal, weak.mech[1].n_thermal) == pytest.approx(3.2)
    assert to_hz(weak.gamma_mean) == pytest.approx(630.0)
    assert to_hz(weak.detuning) == pytest.approx(10e3)
    assert budget.thermal_variance(strong.mech[0].n_thermal, strong.mech[1].n_thermal) == pytest.approx(1.0)
    assert to_hz(strong.gamma_mean) == pytest.approx(4.6e3)
    assert to_hz(strong.detuning) == pytest.approx(200e3)


# -- selectors ----------------------------------------------------------------

def test_selector_vectors():
    s = 1 / math.sqrt(2)
    np.testing.assert_allclose(collective("+", "X").vector(), [s, 0, s, 0])
    np.testing.assert_allclose(collective("-", "P").vector(), [0, s, 0, -s])
    np.testing.assert_allclose(single(2, "P").vector(), [0, 0, 0, 1])
    g = generalized("X+", "P-", math.pi)
    np.testing.assert_allclose(g.vector(), collective("-", "P").vector(), atol=1e-16)


def test_generalized_pair_restricted():
    with pytest.raises(ConfigError):
        generalized("X+", "X-", 1.0)
    with pytest.raises(ConfigError):
        QuadratureSelector("collective", "X1")


def test_parse_quadrature():
    assert parse_quadrature("X+:P-@0.5") == generalized("X+", "P-", 0.5)
    assert parse_quadrature("P2") == single(2, "P")
    assert str(parse_quadrature("P-")) == "P-"
    with pytest.raises(ConfigError):
        parse_quadrature("X+:P-@abc")


def test_hz_round_trip():
    assert to_hz(hz(6.692e6)) == 6.692e6
