"""Experiment drivers shared by the CLI and the acceptance suite."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .construct import blowup_criterion, lemma54_datum
from .domain import DomainSpec, ModelParams, ScalarField, l2_norm
from .flow import FlowConfig, Verdict, run
from .functionals import evaluate, laplacian_symbol
from .variational import default_seed, lambda_closed, thresholds

PHASE_COLUMNS = ("s", "J0", "I0", "l2_0", "verdict", "t_final")


@dataclass
class SweepRow:
    s: float
    J0: float
    I0: float
    l2_0: float
    verdict: str
    t_final: float
    error: str = ""

    def as_tuple(self):
        return (self.s, self.J0, self.I0, self.l2_0, self.verdict, self.t_final)


def sweep(params: ModelParams, profile: ScalarField, scales, config: FlowConfig | None = None,
          threads: int = 1) -> list[SweepRow]:
    """Run the flow from ``s * profile`` for every ``s``; rows keep the input order."""
    scales = [float(s) for s in scales]
    if not scales:
        raise ValueError("empty scale grid")

    def one(s):
        u0 = profile * s
        rep = evaluate(u0, params.p)
        try:
            res = run(u0, params, config)
            return SweepRow(s, rep.J, rep.I, math.sqrt(rep.l2_sq), res.verdict.value, res.t_final)
        except Exception as exc:  # recorded per row
            return SweepRow(s, rep.J, rep.I, math.sqrt(rep.l2_sq), "Error", math.nan, repr(exc))

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(one, scales))
    return [one(s) for s in scales]


def verdict_transitions(rows) -> list[int]:
    """Indices ``i`` where row ``i`` and ``i + 1`` carry different verdicts."""
    return [i for i in range(len(rows) - 1) if rows[i].verdict != rows[i + 1].verdict]


def sine_mode(domain: DomainSpec, k) -> ScalarField:
    vals = np.ones(domain.shape)
    for axis, (x, L, kk) in enumerate(zip(domain.axes(), domain.lengths, k)):
        shape = [1, 1, 1]
        shape[axis] = -1
        vals = vals * np.sin(math.pi * kk * x / L).reshape(shape)
    return ScalarField(vals, domain)


@dataclass
class GlobalCase:
    u0: ScalarField
    a: float
    lambda_sample: float
    Lambda_sample: float
    J0: float
    I0: float
    norm0: float
    mode: tuple
    high_energy: bool
    safety: float

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d.pop("u0")
        d["mode"] = list(self.mode)
        return d


def small_norm_global_datum(params: ModelParams, domain: DomainSpec, d_est: float, a_factor: float = 3.0,
                            safety: float = 0.5, n_samples: int = 64, seed: int = 0) -> GlobalCase:
    """Positive-``I`` datum with ``||u0|| = safety * lambda_sample(a)`` and ``J(u0) <= a``.

    Sine modes are tried in order of frequency; the first one whose energy lands
    in ``(d_est, a]`` is taken (a genuinely high-energy datum). If none does,
    the lowest mode with ``J <= a`` is used.
    """
    a = a_factor * d_est
    rep_t = thresholds(a, params, domain, n_samples, seed, d_est=d_est)
    if not rep_t.sample_count:
        raise RuntimeError("no Nehari samples below the energy cap")
    target = safety * rep_t.lambda_sample
    sym = laplacian_symbol(domain)
    kmax = min(domain.m, 6)
    modes = sorted(
        ((i + 1, j + 1, k + 1) for i in range(kmax) for j in range(kmax) for k in range(kmax)),
        key=lambda t: sym[t[0] - 1, t[1] - 1, t[2] - 1],
    )
    fallback = None
    for mode in modes:
        psi = sine_mode(domain, mode)
        u0 = psi * (target / l2_norm(psi))
        rep = evaluate(u0, params.p)
        if not (rep.I > 0 and rep.J <= a):
            continue
        if fallback is None:
            fallback = (u0, rep, mode)
        if rep.J > d_est:
            return GlobalCase(u0, a, rep_t.lambda_sample, rep_t.Lambda_sample, rep.J, rep.I, target, mode, True,
                              safety)
    if fallback is None:
        raise RuntimeError("no sine mode gives a positive-I datum below the cap")
    u0, rep, mode = fallback
    return GlobalCase(u0, a, rep_t.lambda_sample, rep_t.Lambda_sample, rep.J, rep.I, target, mode, False, safety)


@dataclass
class BlowupCase:
    u0: ScalarField
    J0: float
    I0: float
    norm0: float
    Lambda_closed: float
    criterion_lhs: float
    criterion_rhs: float

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d.pop("u0")
        return d


def large_norm_blowup_datum(params: ModelParams, profile: ScalarField | None = None) -> BlowupCase:
    """Datum on the boundary of the blow-up criterion, so ``||u0|| >= Lambda_closed(J(u0))``."""
    if profile is None:
        raise ValueError("profile required")
    u0 = lemma54_datum(params, profile)
    rep = evaluate(u0, params.p)
    lhs, rhs = blowup_criterion(u0, params, rep)
    closed = lambda_closed(rep.J, params, u0.domain) if rep.J > 0 else 0.0
    return BlowupCase(u0, rep.J, rep.I, math.sqrt(rep.l2_sq), closed, lhs, rhs)


def classify(u0: ScalarField, params: ModelParams, config: FlowConfig | None = None):
    res = run(u0, params, config)
    return res, res.verdict is Verdict.GLOBAL_DECAY, res.verdict is Verdict.BLOW_UP


__all__ = [
    "sweep",
    "SweepRow",
    "verdict_transitions",
    "small_norm_global_datum",
    "large_norm_blowup_datum",
    "sine_mode",
    "default_seed",
    "PHASE_COLUMNS",
]
