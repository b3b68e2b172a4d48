"""Persistence: trace CSV, JSON reports, binary field files and SVG line plots."""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .domain import DomainSpec, ScalarField
from .flow import TRACE_COLUMNS, FlowTrace


def fmt(x) -> str:
    """17 significant digits; integers stay integers."""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return format(float(x), ".17g")


def write_trace_csv(path, trace: FlowTrace):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for row in trace.rows:
            w.writerow([fmt(v) for v in row])


def read_trace_csv(path) -> FlowTrace:
    tr = FlowTrace()
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if tuple(header) != TRACE_COLUMNS:
            raise ValueError(f"unexpected trace header {header}")
        for row in r:
            tr.append(*[float(v) for v in row])
    return tr


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        # JSON has no inf/nan
        return x if math.isfinite(x) else str(x)
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def write_json(path, obj):
    Path(path).write_text(dumps(obj))


def read_json(path):
    return json.loads(Path(path).read_text())


def checksum(values: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(values, dtype="<f8").tobytes()).hexdigest()


def write_field(stem, u: ScalarField, p: float | None = None, extra: dict | None = None):
    """Write ``stem.bin`` (little-endian float64, row-major interior order) and ``stem.json``."""
    stem = str(stem)
    data = np.ascontiguousarray(u.values, dtype="<f8")
    with open(stem + ".bin", "wb") as fh:
        fh.write(data.tobytes())
    meta = {
        "domain": u.domain.to_dict(),
        "p": p,
        "dtype": "float64-le",
        "order": "row-major (x, y, z) interior nodes",
        "shape": list(u.domain.shape),
        "sha256": checksum(data),
    }
    if extra:
        meta.update(extra)
    write_json(stem + ".json", meta)


def read_field(stem, verify: bool = True) -> tuple[ScalarField, dict]:
    stem = str(stem)
    meta = read_json(stem + ".json")
    dom = DomainSpec(tuple(meta["domain"]["lengths"]), meta["domain"]["m"])
    raw = np.fromfile(stem + ".bin", dtype="<f8")
    if raw.size != dom.m**3:
        raise ValueError("field file size does not match its sidecar")
    vals = raw.reshape(dom.shape)
    if verify and checksum(vals) != meta["sha256"]:
        raise ValueError(f"checksum mismatch for {stem}.bin")
    return ScalarField(vals, dom), meta


# -- SVG ---------------------------------------------------------------------

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def svg_lines(path, x, series: dict, title: str = "", xlabel: str = "", ylabel: str = "",
              width: int = 640, height: int = 400, markers: bool = False):
    """Piecewise-linear plot of one or more series against ``x`` on a fixed viewbox."""
    x = np.asarray(x, dtype=float)
    pad_l, pad_r, pad_t, pad_b = 70, 20, 30, 45
    pw, ph = width - pad_l - pad_r, height - pad_t - pad_b
    ys = [np.asarray(v, dtype=float) for v in series.values()]
    finite = np.concatenate([y[np.isfinite(y)] for y in ys] + [np.zeros(0)])
    xf = x[np.isfinite(x)]
    x0, x1 = (float(xf.min()), float(xf.max())) if xf.size else (0.0, 1.0)
    y0, y1 = (float(finite.min()), float(finite.max())) if finite.size else (0.0, 1.0)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0

    def sx(v):
        return pad_l + (v - x0) / (x1 - x0) * pw

    def sy(v):
        return pad_t + ph - (v - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {width} {height}" width="{width}" height="{height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{pad_l}" y="{pad_t}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>',
        f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<text x="{width / 2:.1f}" y="{height - 8}" text-anchor="middle" font-size="12">{escape(xlabel)}</text>',
        f'<text x="14" y="{pad_t + ph / 2:.1f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 14 {pad_t + ph / 2:.1f})">{escape(ylabel)}</text>',
    ]
    for frac in (0.0, 0.5, 1.0):
        xv, yv = x0 + frac * (x1 - x0), y0 + frac * (y1 - y0)
        out.append(f'<text x="{sx(xv):.1f}" y="{pad_t + ph + 16}" text-anchor="middle" font-size="10">{xv:.4g}</text>')
        out.append(f'<text x="{pad_l - 6}" y="{sy(yv) + 4:.1f}" text-anchor="end" font-size="10">{yv:.4g}</text>')
    for i, (name, y) in enumerate(zip(series, ys)):
        col = _COLORS[i % len(_COLORS)]
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x, y) if math.isfinite(a) and math.isfinite(b))
        out.append(f'<polyline fill="none" stroke="{col}" stroke-width="1.5" points="{pts}"/>')
        if markers:
            for a, b in zip(x, y):
                if math.isfinite(a) and math.isfinite(b):
                    out.append(f'<circle cx="{sx(a):.2f}" cy="{sy(b):.2f}" r="3" fill="{col}"/>')
        out.append(f'<text x="{pad_l + 8}" y="{pad_t + 14 + 14 * i}" font-size="11" fill="{col}">{escape(name)}</text>')
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n")


def trace_plots(outdir, trace: FlowTrace):
    t = trace.column("t")
    svg_lines(os.path.join(outdir, "J.svg"), t, {"J": trace.column("J")}, "energy", "t", "J")
    svg_lines(os.path.join(outdir, "I.svg"), t, {"I": trace.column("I")}, "Nehari functional", "t", "I")
    svg_lines(
        os.path.join(outdir, "norms.svg"),
        t,
        {"log10 ||u||": _log10(trace.column("l2")), "log10 ||grad u||": _log10(trace.column("h1")),
         "log10 sup|u|": _log10(trace.column("sup"))},
        "norms", "t", "log10",
    )


def _log10(a):
    with np.errstate(divide="ignore"):
        return np.log10(np.asarray(a, dtype=float))
