"""Exit criteria of the laboratory, runnable at baseline or reduced size.

Each criterion returns a :class:`CriterionResult`; ``run_suite`` collects them.
The pytest module and the ``selftest`` subcommand both drive this file.
"""

from __future__ import annotations

import math
import tempfile
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import potential
from .construct import dichotomy_pair, high_energy_datum
from .domain import DomainSpec, ModelParams, ScalarField, make_domain
from .experiments import large_norm_blowup_datum, small_norm_global_datum
from .flow import FlowConfig, Verdict, check_bounds, equilibrium_residual, run, verify_identities
from .functionals import evaluate, fibering_t_star, first_eigenvalue, mountain_level, residual
from .variational import default_seed, nehari_samples, random_bump, stationary_solve, well_depth


@dataclass(frozen=True)
class Scale:
    m: int = 31
    p: float = 2.5
    op_sizes: tuple = (8, 16)
    op_fields: int = 100
    pairs: int = 50
    fields: int = 100
    grad_pairs: int = 20
    n_starts: int = 8
    samples: int = 64
    sweep_points: int = 16
    refine_dt: float = 1e-3
    refine_T: float = 0.02
    threads: int = 4


BASELINE = Scale()
REDUCED = Scale(m=15, op_sizes=(6, 8), op_fields=10, pairs=10, fields=20, grad_pairs=5, samples=24, threads=2)


@dataclass
class CriterionResult:
    id: int
    name: str
    passed: bool
    metrics: dict = field(default_factory=dict)
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.id:2d} {self.name}: {self.detail}"

    def to_dict(self) -> dict:
        return {"id": self.id, "name": self.name, "passed": self.passed, "metrics": self.metrics}


class Context:
    """Shared state: domain, parameters, and expensive products computed once."""

    def __init__(self, scale: Scale = BASELINE, seed: int = 0):
        self.scale = scale
        self.seed = seed
        self.params = ModelParams(scale.p)
        self.domain: DomainSpec = make_domain((1.0, 1.0, 1.0), scale.m)

    def rng(self, tag: int) -> np.random.Generator:
        return np.random.default_rng([self.seed, tag])

    @cached_property
    def stationary(self):
        return stationary_solve(self.params, default_seed(self.domain))

    @cached_property
    def depth(self):
        return well_depth(self.params, self.domain, self.scale.n_starts, self.seed)

    @cached_property
    def dichotomy_runs(self):
        u_plus, u_minus = dichotomy_pair(self.params, self.stationary.u_star, self.depth.d_est)
        return run(u_plus, self.params), run(u_minus, self.params), u_plus, u_minus


def _rand_field(dom, rng, amp=None):
    a = rng.uniform(0.1, 10.0) if amp is None else amp
    return ScalarField(a * rng.standard_normal(dom.shape), dom)


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def c01_operator(ctx: Context) -> CriterionResult:
    p = 2.0
    worst = 0.0
    problems = []
    for m in ctx.scale.op_sizes:
        dom = make_domain((1.0, 1.0, 1.0), m)
        problems += potential.kernel_table(dom).check()
        rng = ctx.rng(100 + m)
        for _ in range(ctx.scale.op_fields):
            u = _rand_field(dom, rng)
            zd = potential.riesz_direct(u, p).values
            zf = potential.riesz_fast(u, p).values
            worst = max(worst, float(np.max(np.abs(zf - zd) / np.abs(zd))))
    n = 400
    c1, c2 = potential.self_cell_average_midpoint(n), potential.self_cell_average_midpoint(2 * n)
    refine = abs(c1 - c2) / c2
    frozen = abs(potential.C_SELF - potential.self_cell_average_gauss()) / potential.C_SELF
    ok = worst <= 1e-10 and not problems and refine < 1e-6 and frozen < 1e-13
    return CriterionResult(1, "riesz_fast == riesz_direct", ok,
                           {"max_rel": worst, "kernel_problems": sorted(set(problems)),
                            "c_self_refine": refine, "c_self_frozen_dev": frozen},
                           f"max rel {worst:.2e} (tol 1e-10); kernel {'ok' if not problems else problems}")


def c02_interaction(ctx: Context) -> CriterionResult:
    dom, p = ctx.domain, ctx.params.p
    rng = ctx.rng(2)
    sym = hom = 0.0
    for _ in range(ctx.scale.pairs):
        u, v = _rand_field(dom, rng), _rand_field(dom, rng)
        duv, dvu = potential.interaction(u, v, p), potential.interaction(v, u, p)
        sym = max(sym, abs(duv - dvu) / abs(duv))
        t = rng.uniform(0.1, 3.0)
        hom = max(hom, _rel(potential.interaction(u * t, u, p), t**p * potential.interaction(u, u, p)))
    ok = sym <= 1e-12 and hom <= 1e-12
    return CriterionResult(2, "interaction symmetry and homogeneity", ok, {"sym_rel": sym, "hom_rel": hom},
                           f"sym {sym:.2e}, hom {hom:.2e} (tol 1e-12)")


def c03_identity(ctx: Context) -> CriterionResult:
    dom, p = ctx.domain, ctx.params.p
    rng = ctx.rng(3)
    worst = 0.0
    for _ in range(ctx.scale.fields):
        r = evaluate(_rand_field(dom, rng), p)
        rhs = r.I / (2 * p) + (0.5 - 0.5 / p) * r.grad_sq
        worst = max(worst, abs(r.J - rhs) / max(abs(r.J), abs(rhs), 1e-300))
    return CriterionResult(3, "J = I/(2p) + (1/2 - 1/(2p))||grad u||^2", worst <= 1e-12, {"max_rel": worst},
                           f"max rel {worst:.2e} (tol 1e-12)")


def c04_fibering(ctx: Context) -> CriterionResult:
    dom, p = ctx.domain, ctx.params.p
    rng = ctx.rng(4)
    zero = lvl = 0.0
    for _ in range(ctx.scale.fields):
        u = _rand_field(dom, rng)
        t = fibering_t_star(u, p)
        r = evaluate(u * t, p)
        zero = max(zero, abs(r.I) / r.grad_sq)
        lvl = max(lvl, _rel(mountain_level(u, p), r.J))
    ok = zero <= 1e-10 and lvl <= 1e-10
    return CriterionResult(4, "fibering lands on N", ok, {"nehari_rel": zero, "level_rel": lvl},
                           f"|I(t*u)|/|grad|^2 {zero:.2e}, level {lvl:.2e} (tol 1e-10)")


def gradient_orders(u: ScalarField, phi: ScalarField, p: float, eps=(1e-3, 5e-4, 2.5e-4)):
    """Central-difference errors against ``<grad J, phi>`` and the observed orders."""
    dom = u.domain
    exact = dom.cell * float(np.sum(residual(u, p).values * phi.values))
    errs = []
    for e in eps:
        fd = (evaluate(u + phi * e, p).J - evaluate(u - phi * e, p).J) / (2 * e)
        errs.append(abs(fd - exact))
    orders = [math.log(errs[i] / errs[i + 1]) / math.log(eps[i] / eps[i + 1]) for i in range(len(eps) - 1)]
    return exact, errs, orders


def c05_gradient(ctx: Context) -> CriterionResult:
    dom, p = ctx.domain, ctx.params.p
    rng = ctx.rng(5)
    worst = math.inf
    for _ in range(ctx.scale.grad_pairs):
        u = random_bump(dom, rng) * rng.uniform(1.0, 5.0)
        phi = random_bump(dom, rng, dominant=False) * rng.uniform(0.5, 2.0)
        _, _, orders = gradient_orders(u, phi, p)
        worst = min(worst, min(orders))
    return CriterionResult(5, "finite-difference gradient check", worst >= 1.9, {"min_order": worst},
                           f"min observed order {worst:.3f} (need >= 1.9)")


def c06_dissipation(ctx: Context) -> CriterionResult:
    u0 = ctx.stationary.u_star * 0.5
    dt, T = ctx.scale.refine_dt, ctx.scale.refine_T
    reps = []
    for d in (dt, dt / 2):
        res = run(u0, ctx.params, FlowConfig.fixed(d, T_horizon=T))
        reps.append(verify_identities(res.trace, ctx.params))
    re = reps[0].energy_defect / reps[1].energy_defect
    rl = reps[0].l2_defect / reps[1].l2_defect
    ok = re >= 1.8 and rl >= 1.8
    return CriterionResult(6, "dissipation identities, dt refinement", ok,
                           {"energy_ratio": re, "l2_ratio": rl,
                            "energy_defect": [r.energy_defect for r in reps],
                            "l2_defect": [r.l2_defect for r in reps]},
                           f"defect ratios energy {re:.3f}, l2 {rl:.3f} (need >= 1.8)")


def c07_stationary(ctx: Context) -> CriterionResult:
    st = ctx.stationary
    p = ctx.params.p
    i_rel = abs(st.I_star) / evaluate(st.u_star, p).grad_sq
    mu_rel = _rel(st.mu, st.psi_min / p)
    ok = st.residual_rel <= 1e-6 and i_rel <= 1e-6 and st.positive and mu_rel <= 1e-10
    return CriterionResult(7, "stationary solution", ok,
                           {"residual_rel": st.residual_rel, "I_rel": i_rel, "positive": st.positive,
                            "min_value": float(np.min(st.u_star.values)), "mu_rel": mu_rel,
                            "J_star": st.J_star},
                           f"residual {st.residual_rel:.2e}, |I|/|grad|^2 {i_rel:.2e}, min u* "
                           f"{np.min(st.u_star.values):.3e}, mu dev {mu_rel:.1e}")


def c08_depth(ctx: Context) -> CriterionResult:
    de, st = ctx.depth, ctx.stationary
    p = ctx.params.p
    worst_level = worst_grad = math.inf
    n = 0
    for _u, rep in nehari_samples(ctx.params, ctx.domain, ctx.scale.samples, ctx.seed + 1):
        n += 1
        worst_level = min(worst_level, rep.J / de.d_est)
        worst_grad = min(worst_grad, rep.grad_sq / (2 * p * de.d_est / (p - 1)))
    ok = (de.spread_rel <= 0.02 and de.d_est <= st.J_star + 1e-8 and worst_level >= 0.98 and worst_grad >= 0.98)
    return CriterionResult(8, "potential-well depth", ok,
                           {"d_est": de.d_est, "spread_rel": de.spread_rel, "J_star": st.J_star,
                            "min_level_ratio": worst_level, "min_grad_ratio": worst_grad, "samples": n},
                           f"d_est {de.d_est:.6g}, spread {de.spread_rel:.1e}, J(u*) {st.J_star:.6g}, "
                           f"min sample level/d {worst_level:.3f}")


def c09_dichotomy(ctx: Context) -> CriterionResult:
    dec, blow, _, _ = ctx.dichotomy_runs
    res = equilibrium_residual(dec, ctx.params)
    ok = (dec.verdict is Verdict.GLOBAL_DECAY and dec.bounds["I_sign_persisted"] and res <= 1e-6
          and blow.verdict is Verdict.BLOW_UP and blow.bounds["I_sign_persisted"] and math.isfinite(blow.t_final))
    return CriterionResult(9, "low-energy dichotomy", ok,
                           {"decay_verdict": dec.verdict.value, "decay_residual": res,
                            "decay_I_positive": dec.bounds["I_sign_persisted"],
                            "blow_verdict": blow.verdict.value, "blow_t_final": blow.t_final,
                            "blow_I_negative": blow.bounds["I_sign_persisted"]},
                           f"0.5u* -> {dec.verdict.value} (residual {res:.1e}); "
                           f"1.5u* -> {blow.verdict.value} at t={blow.t_final:.4g}")


def c10_bounds(ctx: Context) -> CriterionResult:
    dec, _, u_plus, _ = ctx.dichotomy_runs
    lam = first_eigenvalue(ctx.domain)
    r1 = check_bounds(dec.trace, ctx.params, evaluate(u_plus, ctx.params.p).J, lam)
    low = ModelParams(1.5)
    st = stationary_solve(low, default_seed(ctx.domain))
    u0 = st.u_star * 0.5
    res = run(u0, low)
    r2 = check_bounds(res.trace, low, evaluate(u0, 1.5).J, lam)
    ok = (dec.verdict is Verdict.GLOBAL_DECAY and r1.ok and res.verdict is Verdict.GLOBAL_DECAY and r2.ok
          and r2.h1_bounded_applies and math.isfinite(r2.max_h1))
    return CriterionResult(10, "bounds on global solutions", ok,
                           {"violations_p25": len(r1.violations), "violations_p15": len(r2.violations),
                            "max_h1_p15": r2.max_h1, "p15_verdict": res.verdict.value},
                           f"p=2.5 rows ok: {r1.ok}; p=1.5 rows ok: {r2.ok}, sup ||grad u|| = {r2.max_h1:.4g}")


def c11_norm_thresholds(ctx: Context) -> CriterionResult:
    p = ctx.params
    bcase = large_norm_blowup_datum(p, default_seed(ctx.domain))
    bres = run(bcase.u0, p)
    gcase = small_norm_global_datum(p, ctx.domain, ctx.depth.d_est, n_samples=ctx.scale.samples, seed=ctx.seed)
    gres = run(gcase.u0, p)
    ok = (bcase.I0 < 0 and bcase.norm0 >= bcase.Lambda_closed * (1 - 1e-12) and bres.verdict is Verdict.BLOW_UP
          and bres.bounds["I_sign_persisted"]
          and gcase.I0 > 0 and gres.verdict is Verdict.GLOBAL_DECAY and gres.bounds["I_sign_persisted"])
    return CriterionResult(11, "norm-threshold criteria", ok,
                           {"blow": {**bcase.to_dict(), "verdict": bres.verdict.value},
                            "global": {**gcase.to_dict(), "verdict": gres.verdict.value}},
                           f"||u0||={bcase.norm0:.4g} >= Lambda={bcase.Lambda_closed:.4g} -> {bres.verdict.value}; "
                           f"||u0||={gcase.norm0:.4g} (0.5 lambda_s), J0/d={gcase.J0 / ctx.depth.d_est:.3g} "
                           f"-> {gres.verdict.value}")


def c12_high_energy(ctx: Context) -> CriterionResult:
    M = 10 * ctx.depth.d_est
    rec = high_energy_datum(M, ctx.params, ctx.domain)
    res = run(rec.u_M, ctx.params)
    rel = abs(rec.J_check - M) / M
    ok = rel <= 1e-6 and rec.I_check < 0 and rec.criterion_lhs >= rec.criterion_rhs and res.verdict is Verdict.BLOW_UP
    return CriterionResult(12, "arbitrarily high energy blow-up", ok,
                           {**rec.to_dict(), "verdict": res.verdict.value, "t_final": res.t_final},
                           f"|J-M|/M {rel:.1e}, I {rec.I_check:.4g}, lhs/rhs {rec.criterion_lhs / rec.criterion_rhs:.4g}, "
                           f"-> {res.verdict.value}")


def c13_sweep(ctx: Context) -> CriterionResult:
    import csv
    import json
    import os

    from .cli import main as cli_main
    from .io import write_field

    scales = [float(s) for s in np.linspace(0.25, 2.0, ctx.scale.sweep_points)]
    with tempfile.TemporaryDirectory() as tmp:
        cfg = {"domain": {"lengths": [1.0, 1.0, 1.0], "m": ctx.scale.m}, "p": ctx.params.p,
               "sweep": {"scales": scales}, "seed": ctx.seed, "output": tmp}
        cfg_path = os.path.join(tmp, "config.json")
        with open(cfg_path, "w") as fh:
            json.dump(cfg, fh)
        # reuse the cached stationary profile so the sweep does not re-solve it
        write_field(os.path.join(tmp, "profile"), ctx.stationary.u_star, ctx.params.p)
        code = cli_main(["sweep", "--config", cfg_path, "--out", tmp, "--threads", str(ctx.scale.threads),
                         "--profile", os.path.join(tmp, "profile")])
        with open(os.path.join(tmp, "phase.csv")) as fh:
            rows = list(csv.DictReader(fh))
    verdicts = [r["verdict"] for r in rows]
    flips = [i for i in range(len(verdicts) - 1) if verdicts[i] != verdicts[i + 1]]
    d = ctx.depth.d_est
    low_ok = all(r["verdict"] == "GlobalDecay" for r in rows if float(r["I0"]) > 0 and float(r["J0"]) < d)
    ok = code == 0 and len(flips) == 1 and low_ok
    where = None
    if len(flips) == 1:
        i = flips[0]
        s_lo, s_hi = scales[i], scales[i + 1]
        cell = scales[1] - scales[0]
        where = (s_lo, s_hi)
        ok = ok and verdicts[i] == "GlobalDecay" and verdicts[i + 1] == "BlowUp" and (s_lo - cell <= 1.0 <= s_hi + cell)
    return CriterionResult(13, "sweep dichotomy", ok,
                           {"verdicts": verdicts, "transitions": len(flips), "between": where, "exit": code},
                           f"{len(flips)} transition(s) between s={where}")


CRITERIA = [c01_operator, c02_interaction, c03_identity, c04_fibering, c05_gradient, c06_dissipation,
            c07_stationary, c08_depth, c09_dichotomy, c10_bounds, c11_norm_thresholds, c12_high_energy, c13_sweep]


def run_criterion(func, ctx: Context) -> CriterionResult:
    try:
        return func(ctx)
    except Exception as exc:  # a crash is a failed criterion, not a crashed suite
        cid = CRITERIA.index(func) + 1
        return CriterionResult(cid, func.__name__, False, {"error": repr(exc)}, f"error: {exc!r}")


def run_suite(scale: Scale = REDUCED, seed: int = 0, only=None) -> list[CriterionResult]:
    ctx = Context(scale, seed)
    out = []
    for i, func in enumerate(CRITERIA, start=1):
        if only is not None and i not in only:
            continue
        out.append(run_criterion(func, ctx))
    return out


def summary(results, scale: Scale, seed: int) -> dict:
    return {
        "scale": scale.__dict__,
        "seed": seed,
        "criteria": [r.to_dict() for r in results],
        "all_passed": all(r.passed for r in results),
    }


