import json

import pytest

from reduxsim.config import ConfigError, bundled_names, load_config, parse_config
from reduxsim.minkowski import BoundaryStrategy
from reduxsim.state import MeasurementMode


def _write(tmp_path, text):
    p = tmp_path / "cfg.json"
    p.write_text(text)
    return str(p)


def test_every_bundled_scenario_loads():
    names = bundled_names()
    assert {"observed_sequential", "objective_dual", "symmetric", "ratio_2to1", "gaussian_pulse",
            "window", "mixed", "causality", "no_capture"} <= set(names)
    for n in names:
        cfg = load_config(n)
        assert cfg.name == n
        cfg.template()


def test_defaults():
    cfg = parse_config({})
    assert cfg.mode is MeasurementMode.OBSERVED
    assert cfg.strategy is BoundaryStrategy.HELLWIG_KRAUS
    assert (cfg.x_a, cfg.x_b, cfg.t_end, cfg.dt) == (0.0, 10.0, 1.0, 0.01)


def test_error_points_at_line(tmp_path):
    text = '{\n  "mode": "observed",\n  "dt": -0.5\n}\n'
    with pytest.raises(ConfigError) as info:
        load_config(_write(tmp_path, text))
    assert info.value.line == 3
    assert ":3:" in str(info.value)


def test_invalid_json_reports_line(tmp_path):
    with pytest.raises(ConfigError) as info:
        load_config(_write(tmp_path, '{\n  "mode": "observed",\n  oops\n}'))
    assert info.value.line == 3


@pytest.mark.parametrize("data", [
    {"bogus": 1},
    {"mode": "quantum"},
    {"strategy": "mine"},
    {"t_end": 0},
    {"dt": "small"},
    {"frames": [0.5, 1.0]},
    {"seed": -1},
    {"seed": 1.5},
    {"currents": {"00->10": {"kind": "constant", "rate": -1}}},
    {"currents": {"00->22": {"kind": "constant", "rate": 1}}},
    {"currents": {"00->11": {"kind": "constant", "rate": 1}}, "mode": "objective"},
    {"allow_direct_fourth": True},
    {"selection_rule": True},
    {"hits": {"a": [1.0]}},
    {"causality": {"a_edge": "10->11"}},
])
def test_rejects(data):
    with pytest.raises(ConfigError):
        parse_config(data, json.dumps(data))


def test_missing_file():
    with pytest.raises(ConfigError):
        load_config("/nonexistent/nowhere.json")


def test_to_dict_round_trip():
    cfg = load_config("causality")
    again = parse_config(cfg.to_dict())
    assert again == cfg
