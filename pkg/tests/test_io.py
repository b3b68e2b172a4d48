import json
import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from nehari_flow import io
from nehari_flow.domain import ScalarField
from nehari_flow.flow import FlowConfig, run

from conftest import random_field


def test_trace_roundtrip(tmp_path, star15, params):
    res = run(star15.u_star * 0.5, params, FlowConfig(T_horizon=0.01))
    io.write_trace_csv(tmp_path / "trace.csv", res.trace)
    back = io.read_trace_csv(tmp_path / "trace.csv")
    assert back.rows == res.trace.rows


def test_trace_header_checked(tmp_path):
    (tmp_path / "bad.csv").write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        io.read_trace_csv(tmp_path / "bad.csv")


def test_json_is_strict_and_sorted(tmp_path):
    io.write_json(tmp_path / "x.json", {"b": math.inf, "a": np.float64(1.5), "c": np.bool_(True), "d": (1, 2)})
    text = (tmp_path / "x.json").read_text()
    doc = json.loads(text, parse_constant=lambda c: pytest.fail(f"non-strict constant {c}"))
    assert doc == {"a": 1.5, "b": "inf", "c": True, "d": [1, 2]}
    assert text.index('"a"') < text.index('"b"')


def test_field_roundtrip_and_checksum(tmp_path, dom8, rng):
    u = random_field(dom8, rng)
    io.write_field(tmp_path / "u", u, 2.5, {"note": "x"})
    back, meta = io.read_field(tmp_path / "u")
    assert np.array_equal(back.values, u.values) and back.domain == dom8
    assert meta["p"] == 2.5 and meta["note"] == "x"
    raw = bytearray((tmp_path / "u.bin").read_bytes())
    raw[5] ^= 0xFF
    (tmp_path / "u.bin").write_bytes(bytes(raw))
    with pytest.raises(ValueError, match="checksum"):
        io.read_field(tmp_path / "u")


def test_svg_is_wellformed(tmp_path):
    x = np.linspace(0, 1, 20)
    io.svg_lines(tmp_path / "p.svg", x, {"a<b": x**2, "gap": np.where(x > 0.5, np.nan, x)}, title="t & u")
    root = ET.parse(tmp_path / "p.svg").getroot()
    assert root.tag.endswith("svg") and root.get("viewBox")
    assert len([e for e in root.iter() if e.tag.endswith("polyline")]) >= 2


def test_trace_plots(tmp_path, dom8, params):
    res = run(ScalarField.zeros(dom8), params)
    io.trace_plots(tmp_path, res.trace)
    for name in ("J.svg", "I.svg", "norms.svg"):
        ET.parse(tmp_path / name)
