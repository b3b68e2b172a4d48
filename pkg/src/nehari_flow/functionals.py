"""Energy ``J``, Nehari functional ``I``, fibering map and the strong-form residual."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .domain import DomainSpec, ModelParams, ScalarField, h1_seminorm_sq, l2_norm_sq, neg_laplacian
from .potential import convolve_fast, source_density


@dataclass(frozen=True)
class FunctionalReport:
    J: float
    I: float
    grad_sq: float
    l2_sq: float
    D: float
    sup: float

    def to_dict(self) -> dict:
        return asdict(self)


def _p(params) -> float:
    return params.p if isinstance(params, ModelParams) else float(params)


def self_interaction(u: ScalarField, p: float, z: np.ndarray | None = None) -> float:
    if z is None:
        z = convolve_fast(source_density(u.values, p), u.domain)
    return u.domain.cell * float(np.sum(z * source_density(u.values, p)))


def evaluate(u: ScalarField, params, z: np.ndarray | None = None) -> FunctionalReport:
    """All scalar diagnostics of ``u``; ``z`` may carry a precomputed potential."""
    p = _p(params)
    g = h1_seminorm_sq(u)
    D = self_interaction(u, p, z)
    return FunctionalReport(
        J=0.5 * g - D / (2 * p),
        I=g - D,
        grad_sq=g,
        l2_sq=l2_norm_sq(u),
        D=D,
        sup=float(np.max(np.abs(u.values))),
    )


def energy(u: ScalarField, params) -> float:
    return evaluate(u, params).J


def nehari(u: ScalarField, params) -> float:
    return evaluate(u, params).I


def source(values: np.ndarray, domain: DomainSpec, p: float, z: np.ndarray | None = None) -> np.ndarray:
    """Nonlocal source ``f(u) = z(u) |u|^(p-2) u`` as a raw array."""
    if z is None:
        z = convolve_fast(source_density(values, p), domain)
    return z * np.sign(values) * np.abs(values) ** (p - 1)


def residual(u: ScalarField, params) -> ScalarField:
    """``r = -Delta_h u - f(u)``.

    ``r`` is the L^2 gradient of the discrete energy, so the flow reads
    ``u_t = -r`` and stationary points have ``r = 0``.
    """
    p = _p(params)
    return ScalarField(neg_laplacian(u) - source(u.values, u.domain, p), u.domain)


def residual_rel(u: ScalarField, params) -> float:
    """``||r|| / ||Delta_h u||``; zero for the zero field."""
    lap = neg_laplacian(u)
    den = math.sqrt(float(np.sum(lap * lap)))
    if den == 0:
        return 0.0
    r = residual(u, params).values
    return math.sqrt(float(np.sum(r * r))) / den


def fibering_t_star(u: ScalarField, params, report: FunctionalReport | None = None) -> float:
    """Scale ``t*`` with ``I(t* u) = 0``: ``(grad_sq / D)^(1 / (2p - 2))``."""
    p = _p(params)
    rep = report or evaluate(u, params)
    if rep.D <= 0 or rep.grad_sq <= 0:
        raise ValueError("fibering map undefined: u has no self-interaction")
    return (rep.grad_sq / rep.D) ** (1.0 / (2 * p - 2))


def mountain_level_from(grad_sq: float, D: float, p: float) -> float:
    """Closed form of ``max_t J(t u) = J(t* u)`` from ``||grad u||^2`` and ``D(u, u)``."""
    if D <= 0:
        raise ValueError("fibering map undefined: u has no self-interaction")
    return (p - 1) / (2 * p) * grad_sq ** (p / (p - 1)) / D ** (1 / (p - 1))


def mountain_level(u: ScalarField, params, report: FunctionalReport | None = None) -> float:
    rep = report or evaluate(u, params)
    return mountain_level_from(rep.grad_sq, rep.D, _p(params))


def first_eigenvalue(spec: DomainSpec) -> float:
    """Smallest eigenvalue of the 7-point Dirichlet ``-Delta_h`` on the box."""
    h = spec.h
    return sum(4.0 / h**2 * math.sin(math.pi * h / (2 * L)) ** 2 for L in spec.lengths)


def laplacian_symbol(spec: DomainSpec) -> np.ndarray:
    """Eigenvalues of ``-Delta_h`` on the sine basis, shape ``m^3``."""
    h = spec.h
    k = np.arange(1, spec.m + 1)
    parts = [4.0 / h**2 * np.sin(math.pi * k * h / (2 * L)) ** 2 for L in spec.lengths]
    return parts[0][:, None, None] + parts[1][None, :, None] + parts[2][None, None, :]


def first_eigenvector(spec: DomainSpec) -> ScalarField:
    """Discrete ground mode ``prod sin(pi x_a / L_a)``, unit L^2 norm."""
    X = spec.mesh()
    vals = np.ones(spec.shape)
    for x, L in zip(X, spec.lengths):
        vals = vals * np.sin(math.pi * x / L)
    vals /= math.sqrt(spec.cell * float(np.sum(vals * vals)))
    return ScalarField(vals, spec)


def inverse_power_eigenvalue(spec: DomainSpec, iters: int = 200, seed: int = 0) -> float:
    """Independent estimate of the first eigenvalue by inverse iteration with CG."""
    from scipy.sparse.linalg import LinearOperator, cg

    n = spec.m**3
    op = LinearOperator((n, n), matvec=lambda x: neg_laplacian(x.reshape(spec.shape), spec).ravel(), dtype=float)
    x = np.random.default_rng(seed).random(n) + 0.5
    lam = 0.0
    for _ in range(iters):
        y, info = cg(op, x, rtol=1e-14, atol=0.0, maxiter=2000)
        if info != 0:
            raise RuntimeError("CG did not converge in inverse iteration")
        y /= np.linalg.norm(y)
        new = float(y @ op.matvec(y))
        if abs(new - lam) <= 1e-15 * new:
            lam = new
            break
        lam, x = new, y
    return lam


def solve_shifted(rhs: np.ndarray, spec: DomainSpec, a: float, b: float) -> np.ndarray:
    """Solve ``(a I + b (-Delta_h)) x = rhs`` exactly in the sine basis."""
    import scipy.fft as sfft

    coef = sfft.dstn(rhs, type=1, norm="ortho")
    coef /= a + b * laplacian_symbol(spec)
    return sfft.idstn(coef, type=1, norm="ortho")


def inverse_laplacian(rhs: np.ndarray, spec: DomainSpec) -> np.ndarray:
    """``(-Delta_h)^{-1} rhs`` with zero Dirichlet data."""
    return solve_shifted(rhs, spec, 0.0, 1.0)
