"""Newtonian potential ``z(u)(x) = int |u(y)|^p / |x - y| dy`` on the box.

``riesz_direct`` sums against the kernel table node by node (O(N^2)) and is the
reference. ``riesz_fast`` zero-pads ``|u|^p`` to a ``(2m)^3`` grid and does the
same discrete convolution with real FFTs.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft as sfft

from . import kernels
from .domain import DomainSpec, ScalarField

# Mean of 1/|r| over the unit cube centred at the origin. Frozen from
# ``self_cell_average_gauss``; closed form 3 ln(2 + sqrt 3) - pi/2.
C_SELF = 2.380077363979553

_FAULT_ENV = "NEHARI_FLOW_FAULT"
_table_hook = None


def set_table_hook(func):
    """Install ``func(table) -> table`` applied to every freshly built offset table.

    Test hook for fault injection; pass ``None`` to remove it.
    """
    global _table_hook
    _table_hook = func
    _kernel_cache.cache_clear()


def self_cell_average_midpoint(n: int) -> float:
    """Mean of 1/|r| over the unit cube by an ``n x n`` midpoint rule.

    Uses the 48-fold symmetry of the cube and the substitution
    ``y = x s, z = x t`` which leaves the smooth integrand
    ``6 * int_0^1 int_0^s (1 + s^2 + t^2)^(-1/2) dt ds``.
    """
    k = (np.arange(n) + 0.5) / n
    s, tau = np.meshgrid(k, k, indexing="ij")
    # t = s * tau maps the triangle onto the unit square, Jacobian s
    f = s / np.sqrt(1.0 + s * s + (s * tau) ** 2)
    return 6.0 * float(np.sum(f)) / n**2


def self_cell_average_gauss(order: int = 60) -> float:
    """Same integral as :func:`self_cell_average_midpoint` with tensor Gauss-Legendre."""
    x, w = np.polynomial.legendre.leggauss(order)
    s = 0.5 * (x + 1.0)
    w = 0.5 * w
    S, T = np.meshgrid(s, s, indexing="ij")
    f = S / np.sqrt(1.0 + S * S + (S * T) ** 2)
    return 6.0 * float(np.einsum("i,j,ij->", w, w, f))


def _offset_weights(offsets: np.ndarray, h: float) -> np.ndarray:
    """Kernel weight for integer offset vectors given as three broadcast arrays."""
    o0, o1, o2 = offsets
    r = h * np.sqrt(o0 * o0 + o1 * o1 + o2 * o2)
    with np.errstate(divide="ignore"):
        w = 1.0 / r
    w[r == 0] = C_SELF / h
    return w


@dataclass(frozen=True)
class KernelTable:
    """Weights ``w(delta)`` for all offsets of an ``m^3`` grid with spacing ``h``.

    ``table`` is indexed by ``delta + m - 1`` (shape ``(2m-1)^3``); ``spectrum``
    is the real FFT of the same weights laid out cyclically on ``(2m)^3``.
    """

    m: int
    h: float
    table: np.ndarray
    spectrum: np.ndarray

    @property
    def self_weight(self) -> float:
        c = self.m - 1
        return float(self.table[c, c, c])

    def weight(self, delta) -> float:
        c = self.m - 1
        return float(self.table[delta[0] + c, delta[1] + c, delta[2] + c])

    def check(self) -> list[str]:
        """Return violated invariants (empty when the table is sound)."""
        problems = []
        t = self.table
        if not np.all(t > 0):
            problems.append("non-positive kernel weight")
        if not np.array_equal(t, t[::-1, ::-1, ::-1]):
            problems.append("kernel not even")
        if np.max(t) != self.self_weight:
            problems.append("self weight is not the largest")
        return problems


@lru_cache(maxsize=16)
def _kernel_cache(m: int, h: float) -> KernelTable:
    d = np.arange(-(m - 1), m)
    table = _offset_weights(np.meshgrid(d, d, d, indexing="ij", sparse=True), h)
    hook = _table_hook
    if hook is None and os.environ.get(_FAULT_ENV) == "negative-kernel":
        hook = _negative_injection
    if hook is not None:
        table = hook(table.copy())
    table = np.ascontiguousarray(table)
    table.setflags(write=False)

    # cyclic layout on (2m)^3: index k <-> offset k (k < m) or k - 2m (k >= m)
    n = 2 * m
    c = np.arange(n)
    c = np.where(c < m, c, c - n)
    # offset -m is never reached by interior pairs; fold it onto +m-1 sized table
    idx = np.clip(c, -(m - 1), m - 1) + m - 1
    cyc = table[np.ix_(idx, idx, idx)]
    spectrum = sfft.rfftn(cyc)
    spectrum.setflags(write=False)
    return KernelTable(m, h, table, spectrum)


def _negative_injection(table):
    c = (table.shape[0] - 1) // 2
    table[c + 1, c, c] = -abs(table[c + 1, c, c])
    return table


def kernel_table(domain: DomainSpec) -> KernelTable:
    return _kernel_cache(domain.m, domain.h)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("NEHARI_FLOW_THREADS", "1")))
    except ValueError:
        return 1


def source_density(values: np.ndarray, p: float) -> np.ndarray:
    return np.abs(values) ** p


def convolve_fast(q: np.ndarray, domain: DomainSpec) -> np.ndarray:
    """``h^3 sum_j w(i - j) q_j`` through the padded FFT."""
    kt = kernel_table(domain)
    m = domain.m
    if not np.any(q):
        return np.zeros(domain.shape)
    qhat = sfft.rfftn(q, s=(2 * m,) * 3, workers=_threads())
    full = sfft.irfftn(qhat * kt.spectrum, s=(2 * m,) * 3, workers=_threads())
    return domain.cell * full[:m, :m, :m]


def convolve_direct(q: np.ndarray, domain: DomainSpec) -> np.ndarray:
    kt = kernel_table(domain)
    return domain.cell * kernels.direct_convolve(np.ascontiguousarray(q), kt.table)


def riesz_direct(u: ScalarField, p: float) -> ScalarField:
    """Reference potential by exact summation against the kernel table."""
    if p <= 1:
        raise ValueError("p must exceed 1")
    return ScalarField(convolve_direct(source_density(u.values, p), u.domain), u.domain)


def riesz_fast(u: ScalarField, p: float) -> ScalarField:
    if p <= 1:
        raise ValueError("p must exceed 1")
    return ScalarField(convolve_fast(source_density(u.values, p), u.domain), u.domain)


def interaction(u: ScalarField, v: ScalarField, p: float, z_u: np.ndarray | None = None) -> float:
    """Pairing ``D(u, v) = int z(u) |v|^p``; symmetric in ``u`` and ``v``.

    ``z_u`` may carry a precomputed potential of ``u`` as a raw array.
    """
    if u.domain != v.domain:
        raise ValueError("fields live on different domains")
    if z_u is None:
        z_u = convolve_fast(source_density(u.values, p), u.domain)
    return u.domain.cell * float(np.sum(z_u * source_density(v.values, p)))


def cube_center_potential(n: int = 400) -> float:
    """``int_[0,1]^3 dy / |c - y|`` at the centre ``c`` of the unit cube."""
    # by scaling, the centred unit-cube integral equals the self-cell mean
    return self_cell_average_midpoint(n)


__all__ = [
    "C_SELF",
    "KernelTable",
    "kernel_table",
    "riesz_direct",
    "riesz_fast",
    "interaction",
    "self_cell_average_midpoint",
    "self_cell_average_gauss",
    "set_table_hook",
]

