"""IMEX time stepping of ``u_t = Delta u + z(u) |u|^(p-2) u`` with run classification.

Diffusion is implicit (exact sine-basis solve), the nonlocal source explicit.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .domain import ModelParams, ScalarField
from .functionals import evaluate, first_eigenvalue, residual, solve_shifted, source
from .potential import convolve_fast, source_density

TRACE_COLUMNS = ("step", "t", "dt", "l2", "h1", "sup", "J", "I", "ut_l2")


class Verdict(str, enum.Enum):
    GLOBAL_DECAY = "GlobalDecay"
    BLOW_UP = "BlowUp"
    UNDETERMINED = "Undetermined"


@dataclass
class FlowConfig:
    dt_init: float = 1e-3
    dt_min: float = 1e-8
    dt_max: float = 1e-2
    cfl_c: float = 1.0
    T_horizon: float = 5.0
    blowup_sup_threshold: float = 1e8
    decay_l2_threshold: float = 1e-8
    trace_stride: int = 1
    energy_backtrack: bool = True
    max_steps: int = 1_000_000

    def __post_init__(self):
        if not (0 < self.dt_min <= self.dt_init <= self.dt_max):
            raise ValueError("need 0 < dt_min <= dt_init <= dt_max")
        if self.blowup_sup_threshold <= 0 or self.decay_l2_threshold <= 0:
            raise ValueError("thresholds must be positive")
        if self.cfl_c <= 0 or self.T_horizon <= 0:
            raise ValueError("cfl_c and T_horizon must be positive")
        if int(self.trace_stride) < 1:
            raise ValueError("trace_stride must be >= 1")

    @classmethod
    def fixed(cls, dt: float, **kw) -> "FlowConfig":
        """Uniform step ``dt`` (controller pinned)."""
        return cls(dt_init=dt, dt_min=dt, dt_max=dt, **kw)

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class FlowTrace:
    rows: list[tuple] = field(default_factory=list)

    def append(self, *row):
        self.rows.append(tuple(float(v) if i else int(v) for i, v in enumerate(row)))

    def column(self, name: str) -> np.ndarray:
        k = TRACE_COLUMNS.index(name)
        return np.array([r[k] for r in self.rows], dtype=float)

    def __len__(self):
        return len(self.rows)


@dataclass
class ClassificationResult:
    verdict: Verdict
    t_final: float
    certificate: str
    trace: FlowTrace
    bounds: dict
    final: ScalarField
    steps: int = 0
    rejected: int = 0

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "t_final": self.t_final,
            "certificate": self.certificate,
            "bounds": self.bounds,
        }


def step(u: ScalarField, dt: float, params, z: np.ndarray | None = None) -> ScalarField:
    """One IMEX step: solve ``(Id - dt Delta_h) u+ = u + dt f(u)``."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    p = params.p if isinstance(params, ModelParams) else float(params)
    rhs = u.values + dt * source(u.values, u.domain, p, z)
    return ScalarField(solve_shifted(rhs, u.domain, 1.0, dt), u.domain)


def _row(k, t, dt, rep, ut):
    return (k, t, dt, math.sqrt(rep.l2_sq), math.sqrt(rep.grad_sq), rep.sup, rep.J, rep.I, ut)


def run(u0: ScalarField, params: ModelParams, config: FlowConfig | None = None) -> ClassificationResult:
    """Advance from ``u0`` until a threshold fires or the horizon is reached."""
    cfg = config or FlowConfig()
    p = params.p
    dom = u0.domain
    lam1 = first_eigenvalue(dom)

    u = u0.values.copy()
    z = convolve_fast(source_density(u, p), dom)
    rep = evaluate(u0, p, z)
    J0, I0 = rep.J, rep.I
    trace = FlowTrace()
    trace.append(*_row(0, 0.0, 0.0, rep, 0.0))

    bounds = {
        "J_nonneg": rep.J >= 0,
        "J_le_J0": True,
        "l2_bound": (p - 1) * lam1 * rep.l2_sq <= 2 * p * J0 * (1 + 1e-12) + 1e-300,
        "energy_monotone": True,
        "I_sign_persisted": True,
        "I0_sign": int(np.sign(I0)),
        "max_h1": math.sqrt(rep.grad_sq),
    }

    t = 0.0
    k = 0
    rejected = 0
    pin_sup = None
    verdict, cert = None, ""
    last_row_step = 0

    def finish(v, c):
        if last_row_step != k:
            trace.append(*_row(k, t, last_dt, rep, last_ut))
        if v is Verdict.BLOW_UP:
            bounds["J_nonneg"] = bounds["J_le_J0"] = bounds["l2_bound"] = None
        return ClassificationResult(v, t, c, trace, bounds, ScalarField(u, dom), k, rejected)

    last_dt, last_ut = 0.0, 0.0
    while True:
        if rep.sup <= cfg.decay_l2_threshold:
            verdict, cert = Verdict.GLOBAL_DECAY, f"sup<={cfg.decay_l2_threshold:g}"
        elif rep.sup >= cfg.blowup_sup_threshold:
            verdict, cert = Verdict.BLOW_UP, f"sup>={cfg.blowup_sup_threshold:g}"
        elif t >= cfg.T_horizon * (1 - 1e-12):
            verdict, cert = Verdict.UNDETERMINED, "horizon"
        elif k >= cfg.max_steps:
            verdict, cert = Verdict.UNDETERMINED, "max_steps"
        if verdict is not None:
            return finish(verdict, cert)

        f = source(u, dom, p, z)
        dt = cfg.cfl_c / (1.0 + float(np.max(np.abs(f))))
        dt = min(max(dt, cfg.dt_min), cfg.dt_max)
        if k == 0:
            dt = max(min(dt, cfg.dt_init), cfg.dt_min)
        dt = min(dt, max(cfg.T_horizon - t, cfg.dt_min * 1e-6))

        while True:
            with np.errstate(over="ignore", invalid="ignore"):
                unew = solve_shifted(u + dt * f, dom, 1.0, dt)
                finite = bool(np.all(np.isfinite(unew)))
                if finite:
                    znew = convolve_fast(source_density(unew, p), dom)
                    finite = bool(np.all(np.isfinite(znew)))
            if not finite:
                k += 1
                t += dt
                return finish(Verdict.BLOW_UP, "non-finite state")
            new = evaluate(ScalarField(unew, dom), p, znew)
            tol = 1e-10 * (1 + abs(rep.J))
            if cfg.energy_backtrack and new.J > rep.J + tol and dt > cfg.dt_min:
                dt = max(0.5 * dt, cfg.dt_min)
                rejected += 1
                continue
            break

        diff = unew - u
        ut = math.sqrt(dom.cell * float(np.sum(diff * diff))) / dt
        if new.J > rep.J + 1e-10 * (1 + abs(rep.J)):
            bounds["energy_monotone"] = False
        if I0 != 0 and np.sign(new.I) != np.sign(I0):
            bounds["I_sign_persisted"] = False
        if new.J < 0:
            bounds["J_nonneg"] = False
        if new.J > J0 * (1 + 1e-12) + 1e-12:
            bounds["J_le_J0"] = False
        if (p - 1) * lam1 * new.l2_sq > 2 * p * J0 * (1 + 1e-12) + 1e-300:
            bounds["l2_bound"] = False
        bounds["max_h1"] = max(bounds["max_h1"], math.sqrt(new.grad_sq))

        if dt <= cfg.dt_min * (1 + 1e-12) and cfg.dt_min < cfg.dt_max:
            if pin_sup is None:
                pin_sup = rep.sup
        else:
            pin_sup = None

        u, z, rep = unew, znew, new
        t += dt
        k += 1
        last_dt, last_ut = dt, ut
        if k % cfg.trace_stride == 0:
            trace.append(*_row(k, t, dt, rep, ut))
            last_row_step = k
        if pin_sup is not None and rep.sup >= 2 * pin_sup:
            return finish(Verdict.BLOW_UP, "dt pinned at dt_min and sup doubled")


@dataclass
class IdentityReport:
    energy_defect: float
    l2_defect: float
    energy_defect_rel: float
    l2_defect_rel: float
    intervals: int
    max_dJ: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def verify_identities(trace: FlowTrace, params) -> IdentityReport:
    """Discrete defects of ``dJ/dt = -||u_t||^2`` and ``d||u||^2/dt = -2 I``."""
    rows = trace.rows
    steps = [r[0] for r in rows]
    if len(rows) >= 2:
        gaps = np.diff(steps)
        # a trailing off-stride row (written at termination) is ignored
        if len(gaps) > 1 and gaps[-1] != gaps[0]:
            rows = rows[:-1]
            gaps = gaps[:-1]
        if np.any(gaps != gaps[0]):
            raise ValueError("trace rows are not at a uniform stride")
    if len(rows) < 3:
        raise ValueError("trace too short: need at least 3 rows")
    t = np.array([r[1] for r in rows])
    l2 = np.array([r[3] for r in rows])
    J = np.array([r[6] for r in rows])
    I = np.array([r[7] for r in rows])
    ut = np.array([r[8] for r in rows])
    dt = np.diff(t)
    dJ = np.diff(J)
    e = np.abs(dJ / dt + ut[1:] ** 2)
    q = np.abs(np.diff(l2**2) / dt + (I[1:] + I[:-1]))
    escale = max(float(np.max(ut[1:] ** 2)), 1e-300)
    qscale = max(float(np.max(np.abs(I))), 1e-300)
    return IdentityReport(
        energy_defect=float(np.max(e)),
        l2_defect=float(np.max(q)),
        energy_defect_rel=float(np.max(e)) / escale,
        l2_defect_rel=float(np.max(q)) / qscale,
        intervals=len(dt),
        max_dJ=float(np.max(dJ)),
    )


@dataclass
class BoundsReport:
    ok: bool
    violations: list = field(default_factory=list)
    max_h1: float = 0.0
    h1_bounded_applies: bool = False

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def check_bounds(trace: FlowTrace, params: ModelParams, J0: float, lam1: float) -> BoundsReport:
    """Row-wise scan for ``0 <= J <= J0`` and ``(p-1) lam1 ||u||^2 <= 2p J0``."""
    p = params.p
    viol = []
    tol = 1e-12 * (1 + abs(J0))
    for r in trace.rows:
        k, l2, J = r[0], r[3], r[6]
        if J < -tol:
            viol.append((k, "J<0", J))
        if J > J0 + tol:
            viol.append((k, "J>J0", J))
        if (p - 1) * lam1 * l2 * l2 > 2 * p * J0 + tol:
            viol.append((k, "l2 bound", l2))
    h1 = trace.column("h1")
    max_h1 = float(np.max(h1)) if len(h1) else 0.0
    applies = params.h1_bounded_range
    if applies and not math.isfinite(max_h1):
        viol.append((-1, "h1 unbounded", max_h1))
    return BoundsReport(not viol, viol, max_h1, applies)


def equilibrium_residual(result: ClassificationResult, params) -> float:
    """L^2 norm of the strong residual at the final state."""
    r = residual(result.final, params)
    return math.sqrt(r.domain.cell * float(np.sum(r.values**2)))


__all__ = [
    "FlowConfig",
    "FlowTrace",
    "ClassificationResult",
    "Verdict",
    "step",
    "run",
    "verify_identities",
    "check_bounds",
    "equilibrium_residual",
    "TRACE_COLUMNS",
]

