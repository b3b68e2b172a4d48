"""Initial data for the blow-up and dichotomy experiments."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .domain import DomainSpec, ModelParams, ScalarField, h1_seminorm_sq, l2_norm_sq
from .functionals import evaluate
from .potential import convolve_fast, interaction, source_density
from .variational import criterion_constant


class ConstructionError(RuntimeError):
    pass


def dichotomy_pair(params: ModelParams, u_star: ScalarField, d_ref: float | None = None,
                   scales=(0.5, 1.5)):
    """``(0.5 u*, 1.5 u*)``: below the well with ``I > 0`` and ``I < 0`` respectively."""
    p = params.p
    star = evaluate(u_star, p)
    if d_ref is None:
        d_ref = star.J
    u_plus, u_minus = u_star * scales[0], u_star * scales[1]
    rp, rm = evaluate(u_plus, p), evaluate(u_minus, p)
    if not (rp.I > 0 and rp.J < d_ref):
        raise ConstructionError(f"scaled-down datum off the stable side: I={rp.I}, J={rp.J}, d={d_ref}")
    if not (rm.I < 0 and rm.J <= d_ref):
        raise ConstructionError(f"scaled-up datum off the unstable side: I={rm.I}, J={rm.J}, d={d_ref}")
    return u_plus, u_minus


def blowup_criterion(u: ScalarField, params: ModelParams, report=None) -> tuple[float, float]:
    """``(||u||^(2p), 2p/(p-1) |Omega|^(p-2) gamma^(n-2) J(u))``; blow-up when lhs >= rhs."""
    rep = report or evaluate(u, params.p)
    lhs = rep.l2_sq**params.p
    rhs = criterion_constant(params, u.domain) * rep.J
    return lhs, rhs


def lemma54_datum(params: ModelParams, profile: ScalarField, rel_tol: float = 1e-10,
                  s_max: float = 1e150) -> ScalarField:
    """Scale ``profile`` onto the boundary of the blow-up criterion region.

    With ``A = ||grad u||^2``, ``B = D(u, u)``, ``L = ||u||^(2p)`` the gap
    ``lhs - rhs`` at scale ``s`` is ``s^2 (s^(2p-2) (L + C B / 2p) - C A / 2)``,
    negative below a single crossing and positive above it. The crossing is
    bracketed by doubling and bisected in ``log s``; the upper end is returned.
    """
    p = params.p
    rep = evaluate(profile, p)
    if rep.l2_sq == 0:
        raise ConstructionError("profile is zero")
    C = criterion_constant(params, profile.domain)
    L, A, B = rep.l2_sq**p, rep.grad_sq, rep.D

    def gap(s):
        return s ** (2 * p - 2) * (L + C * B / (2 * p)) - C * A / 2

    lo, hi = 1.0, 1.0
    while gap(lo) >= 0:
        lo *= 0.5
        if lo < 1 / s_max:
            raise ConstructionError("criterion holds at every scale tried")
    while gap(hi) < 0:
        hi *= 2.0
        if hi > s_max:
            raise ConstructionError("criterion unreachable within scale bounds")
    while hi / lo - 1 > rel_tol:
        mid = math.sqrt(lo * hi)
        if gap(mid) < 0:
            lo = mid
        else:
            hi = mid
    u = profile * hi
    lhs, rhs = blowup_criterion(u, params)
    if not lhs >= rhs:
        # rounding on the boundary: nudge outward
        u = profile * (hi * (1 + 10 * rel_tol))
        lhs, rhs = blowup_criterion(u, params)
    if not (lhs >= rhs and (rhs <= 0 or lhs <= 1.01 * rhs)):
        raise ConstructionError(f"criterion not met at the bracket end: lhs={lhs}, rhs={rhs}")
    return u


def sin2_bump(domain: DomainSpec, box) -> np.ndarray:
    """Product of ``sin^2`` on ``box = [(a0, b0), (a1, b1), (a2, b2)]``, zero outside."""
    vals = np.ones(domain.shape)
    for axis, (x, (a, b)) in enumerate(zip(domain.axes(), box)):
        s = (x - a) / (b - a)
        prof = np.where((s > 0) & (s < 1), np.sin(math.pi * s) ** 2, 0.0)
        shape = [1, 1, 1]
        shape[axis] = -1
        vals = vals * prof.reshape(shape)
    return vals


def oscillatory_bump(domain: DomainSpec, box, kappa: float) -> np.ndarray:
    """``sin^2`` bump times ``prod cos(kappa pi (x - centre) / width)``, scaled to unit sup."""
    vals = sin2_bump(domain, box)
    for axis, (x, (a, b)) in enumerate(zip(domain.axes(), box)):
        c = 0.5 * (a + b)
        osc = np.cos(kappa * math.pi * (x - c) / (b - a))
        shape = [1, 1, 1]
        shape[axis] = -1
        vals = vals * osc.reshape(shape)
    top = float(np.max(np.abs(vals)))
    if top == 0:
        raise ConstructionError("oscillatory bump vanished on the grid")
    return vals / top


def split_boxes(domain: DomainSpec):
    """Two sub-boxes split along x at a grid node; supports end up 2h apart."""
    m, h = domain.m, domain.h
    c = (m + 1) // 2
    Lx, Ly, Lz = domain.lengths
    box1 = [(0.0, c * h), (0.0, Ly), (0.0, Lz)]
    box2 = [(c * h, Lx), (0.0, Ly), (0.0, Lz)]
    return box1, box2


@dataclass
class BracketStep:
    lo: float
    hi: float
    x_lo: float
    x_hi: float


@dataclass
class BlowupRecipe:
    M: float
    alpha: float
    v: ScalarField
    w: ScalarField
    u_M: ScalarField
    J_check: float
    I_check: float
    criterion_lhs: float
    criterion_rhs: float
    c0: float
    kappa: float
    J_alpha_v: float
    X_target: float
    cross_term: float
    decomposition_defect: float
    retries: int
    bracket_log: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "M": self.M,
            "alpha": self.alpha,
            "J_check": self.J_check,
            "I_check": self.I_check,
            "criterion_lhs": self.criterion_lhs,
            "criterion_rhs": self.criterion_rhs,
            "c0": self.c0,
            "kappa": self.kappa,
            "J_alpha_v": self.J_alpha_v,
            "X_target": self.X_target,
            "cross_term": self.cross_term,
            "decomposition_defect": self.decomposition_defect,
            "retries": self.retries,
            "relative_energy_error": abs(self.J_check - self.M) / self.M,
        }


@dataclass
class HighEnergyOptions:
    c0: float = 1.0
    max_retries: int = 8
    alpha_margin: float = 1e-6
    rel_tol: float = 1e-9
    max_bisect: int = 200


def high_energy_datum(M: float, params: ModelParams, domain: DomainSpec,
                      opts: HighEnergyOptions | None = None) -> BlowupRecipe:
    """Blow-up datum ``u_M = alpha v + w`` with ``J(u_M) = M`` and negative Nehari value.

    ``v`` sits in the left sub-box and is scaled until ``J(alpha v) <= 0`` and
    ``||alpha v||^(2p) >= C M``. ``w = c0 psi(kappa)`` sits in the right
    sub-box; ``kappa`` is bisected so that
    ``X(w) = J(w) - D(w, alpha v) / p`` hits ``M - J(alpha v)``.
    """
    opts = opts or HighEnergyOptions()
    p = params.p
    if not M > 0:
        raise ValueError("M must be positive")
    if not params.high_energy_range:
        raise ValueError(f"construction needs 2 < p < 3, got p={p}")
    box1, box2 = split_boxes(domain)
    v = ScalarField(sin2_bump(domain, box1), domain)
    rv = evaluate(v, p)
    C = criterion_constant(params, domain)

    alpha_energy = (p * rv.grad_sq / rv.D) ** (1.0 / (2 * p - 2))
    alpha_norm = (C * M) ** (1.0 / (2 * p)) / math.sqrt(rv.l2_sq)
    alpha = max(alpha_energy, alpha_norm) * (1 + opts.alpha_margin)
    if not math.isfinite(alpha):
        raise ConstructionError("alpha growth left the floating-point range at this resolution")
    av = v * alpha
    rav = evaluate(av, p)
    if not (rav.J <= 0 and rav.l2_sq**p >= C * M):
        raise ConstructionError("alpha v does not meet both requirements")
    z_av = convolve_fast(source_density(av.values, p), domain)
    target = M - rav.J

    def X(kappa, c0):
        w = ScalarField(c0 * oscillatory_bump(domain, box2, kappa), domain)
        rw = evaluate(w, p)
        cross = interaction(av, w, p, z_u=z_av)
        return rw.J - cross / p, w, rw, cross

    kappa_max = (box2[0][1] - box2[0][0]) / domain.h
    c0 = opts.c0
    retries = 0
    optimised = False
    while True:
        x_lo, x_hi = X(0.0, c0)[0], X(kappa_max, c0)[0]
        if x_lo < target <= x_hi:
            break
        if x_lo >= target and retries < opts.max_retries:
            c0 *= 2.0
        elif x_hi < target and not optimised:
            # X(kappa_max, c) = c^2 g/2 - c^(2p) D/(2p) - c^p A/p exactly; take the maximising c
            _, _, r1, a1 = X(kappa_max, 1.0)
            poly = lambda t: -(math.exp(2 * t) * r1.grad_sq / 2 - math.exp(2 * p * t) * r1.D / (2 * p)
                               - math.exp(p * t) * a1 / p)
            best = minimize_scalar(poly, bounds=(-40.0, 40.0), method="bounded", options={"xatol": 1e-10})
            c0 = math.exp(best.x)
            optimised = True
        else:
            raise ConstructionError(
                f"infeasible at this resolution (m={domain.m}): need X = {target:.6g} but "
                f"X ranges over [{x_lo:.6g}, {x_hi:.6g}] at c0 = {c0:.6g}")
        retries += 1

    lo, hi = 0.0, kappa_max
    log = [BracketStep(lo, hi, x_lo - target, x_hi - target)]
    for _ in range(opts.max_bisect):
        mid = 0.5 * (lo + hi)
        xm = X(mid, c0)[0]
        if xm < target:
            lo, x_lo = mid, xm
        else:
            hi, x_hi = mid, xm
        log.append(BracketStep(lo, hi, x_lo - target, x_hi - target))
        if abs(x_hi - target) <= opts.rel_tol * M or hi - lo <= 1e-15 * kappa_max:
            break
    kappa = hi
    xval, w, rw, cross = X(kappa, c0)
    u_M = av + w
    rep = evaluate(u_M, p)
    lhs, rhs = blowup_criterion(u_M, params, rep)
    decomposition = rav.J + rw.J - cross / p
    recipe = BlowupRecipe(
        M=M, alpha=alpha, v=v, w=w, u_M=u_M,
        J_check=rep.J, I_check=rep.I,
        criterion_lhs=lhs, criterion_rhs=rhs,
        c0=c0, kappa=kappa, J_alpha_v=rav.J, X_target=target,
        cross_term=cross, decomposition_defect=abs(rep.J - decomposition),
        retries=retries, bracket_log=log,
    )
    problems = certify(recipe, params)
    if problems:
        raise ConstructionError("; ".join(problems))
    return recipe


def certify(recipe: BlowupRecipe, params: ModelParams) -> list[str]:
    """List the violated recipe invariants (empty when certified)."""
    out = []
    dom = recipe.u_M.domain
    av = recipe.v * recipe.alpha
    sv = np.abs(av.values) > 0
    sw = np.abs(recipe.w.values) > 0
    idx_v = np.nonzero(np.any(sv, axis=(1, 2)))[0]
    idx_w = np.nonzero(np.any(sw, axis=(1, 2)))[0]
    if len(idx_v) and len(idx_w) and (idx_w.min() - idx_v.max()) * dom.h < 2 * dom.h - 1e-12:
        out.append("supports closer than 2h")
    if abs(recipe.J_check - recipe.M) > 1e-6 * recipe.M:
        out.append(f"J(u_M) = {recipe.J_check} misses M = {recipe.M}")
    if not recipe.I_check < 0:
        out.append("I(u_M) is not negative")
    if not recipe.criterion_lhs >= recipe.criterion_rhs:
        out.append("blow-up criterion fails")
    if recipe.decomposition_defect > 1e-10 * (1 + abs(recipe.M)):
        out.append(f"energy decomposition defect {recipe.decomposition_defect:.3e}")
    g_sum = h1_seminorm_sq(av) + h1_seminorm_sq(recipe.w)
    if abs(h1_seminorm_sq(recipe.u_M) - g_sum) > 1e-12 * g_sum:
        out.append("gradient energies do not split")
    l_sum = l2_norm_sq(av) + l2_norm_sq(recipe.w)
    if abs(l2_norm_sq(recipe.u_M) - l_sum) > 1e-12 * l_sum:
        out.append("L2 norms do not split")
    return out


__all__ = [
    "ConstructionError",
    "BlowupRecipe",
    "HighEnergyOptions",
    "dichotomy_pair",
    "lemma54_datum",
    "high_energy_datum",
    "blowup_criterion",
    "certify",
    "split_boxes",
    "sin2_bump",
    "oscillatory_bump",
]

