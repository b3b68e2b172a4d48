"""Box domain, interior-node fields and the discrete norms built on them.

All integrals use node value times ``h**3`` weights over the interior nodes.
The zero Dirichlet trace is never stored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels

N_DIM = 3


@dataclass(frozen=True)
class DomainSpec:
    """Box ``[0, Lx] x [0, Ly] x [0, Lz]`` with ``m`` interior nodes per axis."""

    lengths: tuple[float, float, float]
    m: int
    h: float = field(init=False)
    vol: float = field(init=False)
    gamma: float = field(init=False)

    def __post_init__(self):
        lengths = tuple(float(v) for v in self.lengths)
        if len(lengths) != 3:
            raise ValueError("a box domain needs exactly three side lengths")
        if any(not math.isfinite(v) or v <= 0 for v in lengths):
            raise ValueError(f"side lengths must be positive, got {lengths}")
        if int(self.m) != self.m or self.m < 1:
            raise ValueError(f"m must be a positive integer, got {self.m}")
        spacings = [v / (self.m + 1) for v in lengths]
        if max(spacings) - min(spacings) > 1e-12 * max(spacings):
            raise ValueError(f"grid spacing differs across axes: {spacings}")
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "h", spacings[0])
        object.__setattr__(self, "vol", lengths[0] * lengths[1] * lengths[2])
        object.__setattr__(self, "gamma", math.sqrt(sum(v * v for v in lengths)))

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.m, self.m, self.m)

    @property
    def cell(self) -> float:
        """Quadrature weight of a single node."""
        return self.h**3

    def axes(self) -> list[np.ndarray]:
        """Interior node coordinates along each axis."""
        return [self.h * np.arange(1, self.m + 1) for _ in range(3)]

    def mesh(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return tuple(np.meshgrid(*self.axes(), indexing="ij"))

    def to_dict(self) -> dict:
        return {"lengths": list(self.lengths), "m": self.m}


def make_domain(lengths, m: int) -> DomainSpec:
    """Build a :class:`DomainSpec`; raises ``ValueError`` on bad input."""
    return DomainSpec(tuple(lengths), m)


class ScalarField:
    """Grid function on the interior nodes of a domain.

    Values are copied and frozen on construction, and must be finite.
    """

    __slots__ = ("values", "domain")

    def __init__(self, values, domain: DomainSpec):
        arr = np.array(values, dtype=np.float64, copy=True)
        if arr.shape != domain.shape:
            raise ValueError(f"field shape {arr.shape} does not match domain {domain.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("field contains NaN or Inf")
        arr.setflags(write=False)
        self.values = arr
        self.domain = domain

    @classmethod
    def zeros(cls, domain: DomainSpec) -> "ScalarField":
        return cls(np.zeros(domain.shape), domain)

    @classmethod
    def from_function(cls, func, domain: DomainSpec) -> "ScalarField":
        return cls(func(*domain.mesh()), domain)

    def with_values(self, values) -> "ScalarField":
        return ScalarField(values, self.domain)

    def _check(self, other: "ScalarField"):
        if other.domain != self.domain:
            raise ValueError("fields live on different domains")

    def __mul__(self, c: float) -> "ScalarField":
        return ScalarField(self.values * float(c), self.domain)

    __rmul__ = __mul__

    def __neg__(self) -> "ScalarField":
        return self * -1.0

    def __add__(self, other: "ScalarField") -> "ScalarField":
        self._check(other)
        return ScalarField(self.values + other.values, self.domain)

    def __sub__(self, other: "ScalarField") -> "ScalarField":
        self._check(other)
        return ScalarField(self.values - other.values, self.domain)

    def __repr__(self):
        return f"ScalarField(m={self.domain.m}, sup={np.max(np.abs(self.values)):.6g})"


@dataclass(frozen=True)
class ModelParams:
    """Exponent ``p`` of the nonlocal source; the dimension is fixed at 3."""

    p: float
    n: int = N_DIM

    def __post_init__(self):
        if self.n != N_DIM:
            raise ValueError("only n = 3 is supported")
        if not (math.isfinite(self.p) and self.p > 1):
            raise ValueError(f"p must exceed 1, got {self.p}")

    @property
    def p_nl(self) -> float:
        n = self.n
        return 2 * n / ((n - 1) * (n - 2))

    @property
    def kernel_power(self) -> int:
        return self.n - 2

    @property
    def subcritical_nl(self) -> bool:
        """``p < p_nl``: range of the global/blow-up criteria and stationary existence."""
        return self.p < self.p_nl

    @property
    def high_energy_range(self) -> bool:
        """``2 < p < 3``: range of the arbitrary-energy blow-up construction."""
        return 2 < self.p < 3

    @property
    def h1_bounded_range(self) -> bool:
        """``p <= (n+2)/n``: global solutions stay bounded in H^1_0."""
        return self.p <= (self.n + 2) / self.n

    def flags(self) -> dict:
        return {
            "subcritical_nl": self.subcritical_nl,
            "high_energy_range": self.high_energy_range,
            "h1_bounded_range": self.h1_bounded_range,
        }


def _vals(u) -> np.ndarray:
    return u.values if isinstance(u, ScalarField) else np.asarray(u, dtype=np.float64)


def l2_norm_sq(u: ScalarField) -> float:
    return u.domain.cell * float(np.sum(u.values * u.values))


def l2_norm(u: ScalarField) -> float:
    return math.sqrt(l2_norm_sq(u))


def inner(u: ScalarField, v: ScalarField) -> float:
    """Discrete L^2 inner product."""
    u._check(v)
    return u.domain.cell * float(np.sum(u.values * v.values))


def h1_seminorm_sq(u: ScalarField) -> float:
    """Discrete Dirichlet energy ``||grad u||^2`` (edge differences, boundary edges included)."""
    h = u.domain.h
    return h * kernels.edge_sum_sq(np.ascontiguousarray(u.values))


def neg_laplacian(u, domain: DomainSpec | None = None) -> np.ndarray:
    """``-Delta_h u`` on the interior nodes as a raw array."""
    if domain is None:
        domain = u.domain
    arr = np.ascontiguousarray(_vals(u))
    return kernels.neg_laplacian(arr, 1.0 / domain.h**2)


def lp_norm(u: ScalarField, q: float) -> float:
    if q < 1:
        raise ValueError(f"L^q norms need q >= 1, got {q}")
    if math.isinf(q):
        return sup_norm(u)
    return (u.domain.cell * float(np.sum(np.abs(u.values) ** q))) ** (1.0 / q)


def sup_norm(u: ScalarField) -> float:
    return float(np.max(np.abs(u.values)))
