import json

import pytest

from nehari_flow.config import ConfigError, ExperimentConfig, build_initial, parse_config
from nehari_flow.functionals import evaluate

BASE = {
    "domain": {"lengths": [1.0, 1.0, 1.0], "m": 9},
    "p": 2.5,
    "flow": {"T_horizon": 1.0, "cfl_c": 0.5},
    "initial": {"kind": "bumps", "bumps": [{"center": [0.5, 0.5, 0.5], "radius": 0.3, "amplitude": 2.0}]},
    "seed": 4,
    "output": "runs/x",
}


@pytest.mark.parametrize("initial", [
    BASE["initial"],
    {"kind": "stationary_scaled", "scale": 1.5},
    {"kind": "lemma54", "profile": "stationary"},
    {"kind": "theorem12", "M_over_d": 10},
    {"kind": "theorem12", "M": 250.0},
])
def test_roundtrip_is_identity(initial):
    doc = dict(BASE, initial=initial, sweep={"min": 0.25, "max": 2.0, "points": 4})
    cfg = parse_config(doc)
    again = parse_config(cfg.dumps())
    assert again == cfg
    assert again.dumps() == cfg.dumps()


def test_defaults():
    cfg = parse_config("{}")
    assert cfg == ExperimentConfig()


@pytest.mark.parametrize("bad", [
    "not json",
    "[]",
    {"bogus": 1},
    {"domain": {"lengths": [1, 2, 1], "m": 31}},
    {"domain": {"m": 3.5}},
    {"p": 0.5},
    {"flow": {"dt_min": 1.0}},
    {"flow": {"nope": 1}},
    {"initial": {"kind": "other"}},
    {"initial": {"kind": "bumps", "bumps": [{"center": [0.5, 0.5], "radius": 1, "amplitude": 1}]}},
    {"initial": {"kind": "theorem12", "M": 1, "M_over_d": 1}},
    {"p": 1.5, "initial": {"kind": "theorem12", "M": 10}},
    {"p": 3.5, "initial": {"kind": "stationary_scaled", "scale": 1}},
    {"seed": -1},
    {"threads": 0},
])
def test_invalid_configs(bad):
    with pytest.raises(ConfigError):
        parse_config(bad if isinstance(bad, str) else json.dumps(bad))


def test_build_initial_kinds():
    cfg = parse_config(BASE)
    u0, _ = build_initial(cfg)
    assert u0.values.max() == pytest.approx(2.0, rel=0.05)
    cfg = parse_config(dict(BASE, domain={"lengths": [1, 1, 1], "m": 15},
                            initial={"kind": "stationary_scaled", "scale": 0.5}))
    u0, info = build_initial(cfg)
    assert evaluate(u0, 2.5).I > 0 and info["stationary"]["residual_rel"] < 1e-6
