"""Ground state by constrained minimization, potential-well depth, norm thresholds.

Both minimizers use the H^1_0 (Sobolev) gradient: the L^2 gradient is
preconditioned with ``(-Delta_h)^{-1}``, so iteration counts do not grow
with the grid.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .domain import DomainSpec, ModelParams, ScalarField, h1_seminorm_sq, l2_norm, neg_laplacian
from .functionals import (
    evaluate,
    fibering_t_star,
    inverse_laplacian,
    mountain_level_from,
    residual_rel,
    source,
)
from .potential import convolve_fast, source_density


class ConvergenceError(RuntimeError):
    """Iterative solver hit its cap without meeting the tolerance."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


@dataclass
class SolveOptions:
    tol: float = 1e-9
    max_iter: int = 2000
    abs_projection: bool = True
    tau0: float = 1.0
    min_tau: float = 1e-12


@dataclass
class StationaryResult:
    u_star: ScalarField
    mu: float
    psi_min: float
    residual_rel: float
    J_star: float
    I_star: float
    positive: bool
    iterations: int
    phi_defect_max: float
    psi_history: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "mu": self.mu,
            "psi_min": self.psi_min,
            "residual_rel": self.residual_rel,
            "J_star": self.J_star,
            "I_star": self.I_star,
            "positive": self.positive,
            "iterations": self.iterations,
            "phi_defect_max": self.phi_defect_max,
            "min_value": float(np.min(self.u_star.values)),
            "sup": float(np.max(np.abs(self.u_star.values))),
        }


def _phi(values, dom, p, z=None):
    q = source_density(values, p)
    if z is None:
        z = convolve_fast(q, dom)
    return dom.cell * float(np.sum(z * q)) / (2 * p), z


def _normalize(values, dom, p):
    """Rescale onto ``{Phi = 1}``; returns (values, z, Phi-after)."""
    phi, _ = _phi(values, dom, p)
    values = values / phi ** (1.0 / (2 * p))
    phi, z = _phi(values, dom, p)
    return values, z, phi


def _sobolev_direction(w, z, dom, p):
    """``G = w - mu (-Delta)^{-1} f(w)`` with ``mu = ||grad w||^2 / D(w, w)``.

    Also returns the strong-form relative size ``||-Delta w - mu f|| / ||Delta w||``.
    """
    f = source(w, dom, p, z)
    g = h1_seminorm_sq(ScalarField(w, dom))
    D = dom.cell * float(np.sum(z * source_density(w, p)))
    mu = g / D
    G = w - mu * inverse_laplacian(f, dom)

    lap = neg_laplacian(w, dom)
    strong = lap - mu * f
    rel = math.sqrt(float(np.sum(strong * strong)) / float(np.sum(lap * lap)))
    return G, mu, g, D, rel


def stationary_solve(params: ModelParams, seed_field: ScalarField, opts: SolveOptions | None = None) -> StationaryResult:
    """Minimize ``Psi = ||grad u||^2 / 2`` over ``{Phi = D(u, u) / 2p = 1}``, then rescale.

    The minimizer ``w`` satisfies ``Psi'(w) = mu Phi'(w)`` and
    ``u* = mu^(1 / (2p - 2)) w`` solves ``-Delta_h u = z(u) |u|^(p-2) u``.
    """
    opts = opts or SolveOptions()
    p = params.p
    dom = seed_field.domain
    w0 = seed_field.values
    if opts.abs_projection:
        w0 = np.abs(w0)
    phi0, _ = _phi(w0, dom, p)
    if not phi0 > 0:
        raise ValueError("seed has zero self-interaction")
    w, z, phi = _normalize(w0, dom, p)
    phi_defect = abs(phi - 1.0)
    G, mu, g, D, rel = _sobolev_direction(w, z, dom, p)
    psi = 0.5 * g
    history = [psi]
    tau = opts.tau0
    it = 0
    while rel > opts.tol and it < opts.max_iter:
        it += 1
        while True:
            trial = w - tau * G
            if opts.abs_projection:
                trial = np.abs(trial)
            tw, tz, tphi = _normalize(trial, dom, p)
            tpsi = 0.5 * h1_seminorm_sq(ScalarField(tw, dom))
            if tpsi <= psi * (1 + 1e-15) or tau <= opts.min_tau:
                break
            tau *= 0.5
        w, z = tw, tz
        phi_defect = max(phi_defect, abs(tphi - 1.0))
        G, mu, g, D, rel = _sobolev_direction(w, z, dom, p)
        psi = 0.5 * g
        history.append(psi)
        tau = min(opts.tau0, 2 * tau)

    t = mu ** (1.0 / (2 * p - 2))
    u_star = ScalarField(t * w, dom)
    rep = evaluate(u_star, p)
    res = StationaryResult(
        u_star=u_star,
        mu=mu,
        psi_min=psi,
        residual_rel=residual_rel(u_star, p),
        J_star=rep.J,
        I_star=rep.I,
        positive=bool(np.min(u_star.values) > 0),
        iterations=it,
        phi_defect_max=phi_defect,
        psi_history=history,
    )
    if rel > opts.tol:
        raise ConvergenceError(f"stationary solve stalled at relative gradient {rel:.3e}", res)
    return res


def default_seed(dom: DomainSpec) -> ScalarField:
    """Product of first sine modes: positive with zero trace."""
    X = dom.mesh()
    vals = np.ones(dom.shape)
    for x, L in zip(X, dom.lengths):
        vals = vals * np.sin(math.pi * x / L)
    return ScalarField(vals, dom)


def random_bump(dom: DomainSpec, rng: np.random.Generator, kmax: int = 4, spread: float | None = None,
                dominant: bool = True) -> ScalarField:
    """Smoothed random combination of sine-mode products.

    Coefficients decay like ``exp(-|k|^2 / spread^2)``; with ``dominant`` the
    ground mode gets an extra positive weight.
    """
    if spread is None:
        spread = rng.uniform(1.5, 3.5)
    k = np.arange(1, kmax + 1)
    K0, K1, K2 = np.meshgrid(k, k, k, indexing="ij")
    coef = rng.standard_normal((kmax,) * 3) * np.exp(-(K0**2 + K1**2 + K2**2 - 3) / spread**2)
    if dominant:
        coef[0, 0, 0] = 1.0 + abs(coef[0, 0, 0])
    modes = [np.sin(math.pi * np.outer(k, x) / L) for x, L in zip(dom.axes(), dom.lengths)]
    vals = np.einsum("abc,ai,bj,ck->ijk", coef, *modes)
    return ScalarField(vals, dom)


def local_bump(dom: DomainSpec, rng: np.random.Generator) -> ScalarField:
    """``sin^2`` bump on a random sub-box (width 20-100% of each side)."""
    vals = np.ones(dom.shape)
    for x, L in zip(dom.axes(), dom.lengths):
        width = L * rng.uniform(0.2, 1.0)
        a = rng.uniform(0, L - width)
        s = np.clip((x - a) / width, 0, 1)
        vals = vals * np.sin(math.pi * s) ** 2
    if not np.any(vals):
        return random_bump(dom, rng)
    return ScalarField(vals, dom)


@dataclass
class DepthEstimate:
    d_est: float
    starts: int
    converged: int
    spread_rel: float
    levels: list
    best_field: ScalarField | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "d_est": self.d_est,
            "starts": self.starts,
            "converged": self.converged,
            "spread_rel": self.spread_rel,
            "levels": list(self.levels),
        }


@dataclass
class DescentRun:
    level: float
    converged: bool
    iterations: int
    history: list
    field: ScalarField


def minimize_mountain_level(u0: ScalarField, p: float, tol: float = 1e-7, max_iter: int = 2000) -> DescentRun:
    """Preconditioned gradient descent on the 0-homogeneous fiber maximum.

    The preconditioned gradient of the fiber maximum is parallel to
    ``u - (||grad u||^2 / D) (-Delta)^{-1} f(u)``; iterates are kept at unit H^1 norm.
    """
    dom = u0.domain
    w = u0.values / math.sqrt(h1_seminorm_sq(u0))
    z = convolve_fast(source_density(w, p), dom)
    G, mu, g, D, rel = _sobolev_direction(w, z, dom, p)
    level = mountain_level_from(g, D, p)
    history = [level]
    tau = 1.0
    it = 0
    while rel > tol and it < max_iter:
        it += 1
        while True:
            trial = w - tau * G
            tg = h1_seminorm_sq(ScalarField(trial, dom))
            trial /= math.sqrt(tg)
            tz = convolve_fast(source_density(trial, p), dom)
            tD = dom.cell * float(np.sum(tz * source_density(trial, p)))
            tlevel = mountain_level_from(1.0, tD, p)
            if tlevel <= level * (1 + 1e-15) or tau < 1e-12:
                break
            tau *= 0.5
        w, z = trial, tz
        G, mu, g, D, rel = _sobolev_direction(w, z, dom, p)
        level = mountain_level_from(g, D, p)
        history.append(level)
        tau = min(1.0, 2 * tau)
    return DescentRun(level, rel <= tol, it, history, ScalarField(w, dom))


def _child_rngs(seed: int, n: int):
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def well_depth(params: ModelParams, domain: DomainSpec, n_starts: int = 8, seed: int = 0,
               tol: float = 1e-7, max_iter: int = 2000, threads: int = 1) -> DepthEstimate:
    """Multi-start estimate of ``d = inf {J(u) : I(u) = 0}``."""
    if n_starts < 8:
        raise ValueError("well_depth needs at least 8 starts")
    p = params.p
    starts = [random_bump(domain, rng) for rng in _child_rngs(seed, n_starts)]

    def one(u):
        return minimize_mountain_level(u, p, tol, max_iter)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            runs = list(pool.map(one, starts))
    else:
        runs = [one(u) for u in starts]
    levels = [r.level for r in runs if r.converged]
    if len(levels) < 2:
        raise ConvergenceError(f"only {len(levels)} of {n_starts} starts converged")
    best = min((r for r in runs if r.converged), key=lambda r: r.level)
    d_est = best.level
    t = fibering_t_star(best.field, p)
    return DepthEstimate(
        d_est=d_est,
        starts=n_starts,
        converged=len(levels),
        spread_rel=(max(levels) - min(levels)) / d_est,
        levels=[r.level for r in runs],
        best_field=best.field * t,
    )


def lambda_closed(a: float, params: ModelParams, domain: DomainSpec) -> float:
    """Upper bound for ``Lambda_a``: ``(2p/(p-1) |Omega|^(p-2) gamma^(n-2) a)^(1/2p)``."""
    p = params.p
    base = 2 * p / (p - 1) * domain.vol ** (p - 2) * domain.gamma ** params.kernel_power * a
    return base ** (1.0 / (2 * p))


def criterion_constant(params: ModelParams, domain: DomainSpec) -> float:
    """``2p/(p-1) |Omega|^(p-2) gamma^(n-2)`` of the blow-up criterion."""
    p = params.p
    return 2 * p / (p - 1) * domain.vol ** (p - 2) * domain.gamma ** params.kernel_power


@dataclass
class ThresholdReport:
    a: float
    Lambda_closed: float
    lambda_sample: float
    Lambda_sample: float
    sample_count: int
    drawn: int
    norms: list = field(default_factory=list, repr=False)
    levels: list = field(default_factory=list, repr=False)
    nehari_defect_max: float = 0.0
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "a": self.a,
            "Lambda_closed": self.Lambda_closed,
            "lambda_sample": self.lambda_sample,
            "Lambda_sample": self.Lambda_sample,
            "sample_count": self.sample_count,
            "drawn": self.drawn,
            "nehari_defect_max": self.nehari_defect_max,
            "note": self.note,
        }


def nehari_samples(params: ModelParams, domain: DomainSpec, n: int, seed: int = 0):
    """Random fields mapped onto the Nehari manifold by fibering.

    Yields ``(field_on_N, report)``; half the draws are global sine-mode mixes,
    half localized bumps.
    """
    p = params.p
    for i, rng in enumerate(_child_rngs(seed, n)):
        if i % 2 == 0:
            v = random_bump(domain, rng, kmax=6, dominant=bool(rng.integers(2)))
        else:
            v = local_bump(domain, rng)
        rep = evaluate(v, p)
        if rep.D <= 0:
            continue
        u = v * fibering_t_star(v, p, rep)
        yield u, evaluate(u, p)


def thresholds(a: float, params: ModelParams, domain: DomainSpec, n_samples: int = 64, seed: int = 0,
               d_est: float | None = None) -> ThresholdReport:
    """Closed-form ``Lambda_a`` bound plus sampled norm range over ``N_a``."""
    if d_est is not None and not a > d_est:
        raise ValueError(f"N_a is empty unless a > d (a={a}, d_est={d_est})")
    p = params.p
    norms, levels = [], []
    defect = 0.0
    for u, rep in nehari_samples(params, domain, n_samples, seed):
        defect = max(defect, abs(rep.I) / rep.grad_sq)
        if rep.J < a:
            norms.append(l2_norm(u))
            levels.append(rep.J)
    closed = lambda_closed(a, params, domain)
    if not norms:
        return ThresholdReport(a, closed, math.nan, math.nan, 0, n_samples, nehari_defect_max=defect,
                               note="no sample landed in N_a")
    return ThresholdReport(a, closed, min(norms), max(norms), len(norms), n_samples, norms, levels, defect)


__all__ = [
    "ConvergenceError",
    "SolveOptions",
    "StationaryResult",
    "DepthEstimate",
    "ThresholdReport",
    "stationary_solve",
    "well_depth",
    "thresholds",
    "lambda_closed",
    "criterion_constant",
    "minimize_mountain_level",
    "nehari_samples",
    "default_seed",
    "random_bump",
    "local_bump",
]
