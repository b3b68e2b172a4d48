"""JSON experiment configuration and initial-data construction."""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field, fields

import numpy as np

from .domain import DomainSpec, ModelParams, ScalarField
from .flow import FlowConfig

INITIAL_KINDS = ("bumps", "stationary_scaled", "lemma54", "theorem12")
BUMP_PROFILES = ("cos2", "gauss")
LEMMA54_PROFILES = ("sine", "stationary")


class ConfigError(ValueError):
    pass


def _validate_initial(init: dict, params: ModelParams) -> dict:
    if not isinstance(init, dict) or init.get("kind") not in INITIAL_KINDS:
        raise ConfigError(f"initial.kind must be one of {INITIAL_KINDS}")
    kind = init["kind"]
    out = {"kind": kind}
    if kind == "bumps":
        bumps = init.get("bumps", [])
        if not isinstance(bumps, list):
            raise ConfigError("initial.bumps must be a list")
        clean = []
        for b in bumps:
            try:
                center = [float(c) for c in b["center"]]
                radius = float(b["radius"])
                amp = float(b["amplitude"])
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"bad bump entry {b!r}") from exc
            prof = b.get("profile", "cos2")
            if len(center) != 3 or radius <= 0 or prof not in BUMP_PROFILES or not math.isfinite(amp):
                raise ConfigError(f"bad bump entry {b!r}")
            clean.append({"center": center, "radius": radius, "amplitude": amp, "profile": prof})
        out["bumps"] = clean
    elif kind == "stationary_scaled":
        try:
            out["scale"] = float(init["scale"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError("stationary_scaled needs a numeric scale") from exc
        if not params.subcritical_nl:
            raise ConfigError(f"stationary states need p < {params.p_nl:g}")
    elif kind == "lemma54":
        prof = init.get("profile", "sine")
        if prof not in LEMMA54_PROFILES:
            raise ConfigError(f"lemma54.profile must be one of {LEMMA54_PROFILES}")
        if not (2 < params.p < params.p_nl):
            raise ConfigError("the blow-up criterion datum needs 2 < p < p_nl")
        out["profile"] = prof
    elif kind == "theorem12":
        if ("M" in init) == ("M_over_d" in init):
            raise ConfigError("theorem12 needs exactly one of M or M_over_d")
        key = "M" if "M" in init else "M_over_d"
        try:
            val = float(init[key])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"theorem12.{key} must be numeric") from exc
        if not val > 0:
            raise ConfigError(f"theorem12.{key} must be positive")
        if not params.high_energy_range:
            raise ConfigError("the high-energy construction needs 2 < p < 3")
        out[key] = val
    return out


@dataclass
class ExperimentConfig:
    lengths: tuple = (1.0, 1.0, 1.0)
    m: int = 31
    p: float = 2.5
    flow: FlowConfig = field(default_factory=FlowConfig)
    initial: dict = field(default_factory=lambda: {"kind": "stationary_scaled", "scale": 0.5})
    seed: int = 0
    output: str = "runs/out"
    n_starts: int = 8
    sweep_scales: list | None = None
    threads: int = 1

    @property
    def domain(self) -> DomainSpec:
        return DomainSpec(tuple(self.lengths), self.m)

    @property
    def params(self) -> ModelParams:
        return ModelParams(self.p)

    def to_dict(self) -> dict:
        d = {
            "domain": {"lengths": list(self.lengths), "m": self.m},
            "p": self.p,
            "flow": self.flow.to_dict(),
            "initial": copy.deepcopy(self.initial),
            "seed": self.seed,
            "output": self.output,
            "depth": {"n_starts": self.n_starts},
            "threads": self.threads,
        }
        if self.sweep_scales is not None:
            d["sweep"] = {"scales": list(self.sweep_scales)}
        return d

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def parse_config(doc) -> ExperimentConfig:
    """Validate a config document (dict or JSON text); raises ``ConfigError``."""
    if isinstance(doc, (str, bytes)):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    known = {"domain", "p", "flow", "initial", "seed", "output", "depth", "sweep", "threads"}
    extra = set(doc) - known
    if extra:
        raise ConfigError(f"unknown config keys: {sorted(extra)}")
    try:
        dom = doc.get("domain", {})
        lengths = tuple(float(v) for v in dom.get("lengths", (1.0, 1.0, 1.0)))
        m = dom.get("m", 31)
        if not isinstance(m, int) or isinstance(m, bool):
            raise ConfigError("domain.m must be an integer")
        DomainSpec(lengths, m)
        params = ModelParams(float(doc.get("p", 2.5)))
        flow_doc = doc.get("flow", {})
        names = {f.name for f in fields(FlowConfig)}
        if set(flow_doc) - names:
            raise ConfigError(f"unknown flow keys: {sorted(set(flow_doc) - names)}")
        flow = FlowConfig(**flow_doc)
        initial = _validate_initial(doc.get("initial", {"kind": "stationary_scaled", "scale": 0.5}), params)
        seed = doc.get("seed", 0)
        if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        n_starts = int(doc.get("depth", {}).get("n_starts", 8))
        threads = int(doc.get("threads", 1))
        if threads < 1:
            raise ConfigError("threads must be >= 1")
        scales = None
        if "sweep" in doc:
            sw = doc["sweep"]
            if "scales" in sw:
                scales = [float(s) for s in sw["scales"]]
            else:
                lo, hi, n = float(sw["min"]), float(sw["max"]), int(sw["points"])
                scales = [float(s) for s in np.linspace(lo, hi, n)] if n > 0 else []
    except ConfigError:
        raise
    except (TypeError, ValueError, KeyError, AttributeError) as exc:
        raise ConfigError(str(exc)) from exc
    return ExperimentConfig(
        lengths=lengths, m=m, p=params.p, flow=flow, initial=initial, seed=seed,
        output=str(doc.get("output", "runs/out")), n_starts=n_starts, sweep_scales=scales, threads=threads,
    )


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read())


def bump_field(domain: DomainSpec, bumps) -> ScalarField:
    X = domain.mesh()
    vals = np.zeros(domain.shape)
    for b in bumps:
        r = np.sqrt(sum((x - c) ** 2 for x, c in zip(X, b["center"])))
        R = b["radius"]
        if b["profile"] == "cos2":
            prof = np.where(r < R, np.cos(0.5 * math.pi * r / R) ** 2, 0.0)
        else:
            prof = np.exp(-((r / R) ** 2))
        vals += b["amplitude"] * prof
    return ScalarField(vals, domain)


def build_initial(cfg: ExperimentConfig):
    """Return ``(u0, info)`` for the configured initial data."""
    from .construct import high_energy_datum, lemma54_datum
    from .variational import default_seed, stationary_solve, well_depth

    dom, params = cfg.domain, cfg.params
    init = cfg.initial
    kind = init["kind"]
    if kind == "bumps":
        return bump_field(dom, init["bumps"]), {}
    if kind == "stationary_scaled":
        st = stationary_solve(params, default_seed(dom))
        return st.u_star * init["scale"], {"stationary": st.to_dict()}
    if kind == "lemma54":
        if init["profile"] == "sine":
            prof = default_seed(dom)
        else:
            prof = stationary_solve(params, default_seed(dom)).u_star
        return lemma54_datum(params, prof), {}
    info = {}
    if "M" in init:
        M = init["M"]
    else:
        de = well_depth(params, dom, cfg.n_starts, cfg.seed, threads=cfg.threads)
        M = init["M_over_d"] * de.d_est
        info["depth"] = de.to_dict()
    recipe = high_energy_datum(M, params, dom)
    info["recipe"] = recipe.to_dict()
    return recipe.u_M, info
