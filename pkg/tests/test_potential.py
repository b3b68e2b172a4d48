import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nehari_flow import potential
from nehari_flow.domain import ScalarField, make_domain

from conftest import random_field


def test_self_constant_oracles():
    closed = 3 * math.log(2 + math.sqrt(3)) - math.pi / 2
    assert potential.C_SELF == pytest.approx(closed, rel=1e-15)
    assert potential.self_cell_average_gauss() == pytest.approx(potential.C_SELF, rel=1e-14)
    a, b = potential.self_cell_average_midpoint(400), potential.self_cell_average_midpoint(800)
    assert abs(a - b) / b < 1e-6
    assert b == pytest.approx(potential.C_SELF, rel=1e-6)


def test_kernel_table_invariants(dom8):
    kt = potential.kernel_table(dom8)
    assert kt.check() == []
    assert kt.self_weight == pytest.approx(potential.C_SELF / dom8.h)
    assert kt.weight((1, 2, 3)) == pytest.approx(1 / (dom8.h * math.sqrt(14)))
    assert kt.weight((1, 2, 3)) == kt.weight((-1, -2, -3))
    assert np.min(kt.spectrum.real) > 0


def test_fault_hook_is_detected(dom8):
    try:
        potential.set_table_hook(potential._negative_injection)
        assert "non-positive kernel weight" in potential.kernel_table(dom8).check()
    finally:
        potential.set_table_hook(None)
    assert potential.kernel_table(dom8).check() == []


def test_zero_field_gives_zero_potential(dom8):
    u = ScalarField.zeros(dom8)
    assert not np.any(potential.riesz_direct(u, 2.0).values)
    assert not np.any(potential.riesz_fast(u, 2.0).values)


@pytest.mark.parametrize("m", [8, 16])
def test_fast_matches_direct(m, rng):
    dom = make_domain((1, 1, 1), m)
    for _ in range(5):
        u = random_field(dom, rng, rng.uniform(0.1, 10))
        zd = potential.riesz_direct(u, 2.0).values
        zf = potential.riesz_fast(u, 2.0).values
        assert np.max(np.abs(zf - zd) / np.abs(zd)) <= 1e-10


def test_translation_equivariance():
    dom = make_domain((1, 1, 1), 12)
    X, Y, Z = dom.mesh()
    bump = lambda c: np.where((np.abs(X - c) < 0.2) & (np.abs(Y - 0.5) < 0.2) & (np.abs(Z - 0.5) < 0.2),
                              np.cos(np.pi * (X - c) / 0.4) ** 2, 0.0)
    u0 = ScalarField(bump(0.4), dom)
    u1 = ScalarField(np.roll(u0.values, 1, axis=0), dom)
    z0 = potential.riesz_direct(u0, 2.0).values
    z1 = potential.riesz_fast(u1, 2.0).values
    # compare away from the far wall, where the shifted window loses nothing
    assert np.max(np.abs(z1[1:] - z0[:-1])) <= 1e-10 * np.max(z0)


@settings(max_examples=25, deadline=None)
@given(t=st.floats(-5, 5).filter(lambda x: abs(x) > 1e-3), seed=st.integers(0, 2**31))
def test_homogeneity_of_potential(t, seed):
    dom = make_domain((1, 1, 1), 6)
    u = random_field(dom, np.random.default_rng(seed))
    z = potential.riesz_fast(u, 2.5).values
    zt = potential.riesz_fast(u * t, 2.5).values
    np.testing.assert_allclose(zt, abs(t) ** 2.5 * z, rtol=1e-12)


def test_interaction_symmetry_and_scaling(dom8, rng):
    u, v = random_field(dom8, rng), random_field(dom8, rng)
    duv = potential.interaction(u, v, 2.5)
    assert abs(duv - potential.interaction(v, u, 2.5)) <= 1e-12 * duv
    assert potential.interaction(u, u * 2.0, 2.5) == pytest.approx(2**2.5 * potential.interaction(u, u, 2.5), rel=1e-12)
    assert potential.interaction(u, ScalarField.zeros(dom8), 2.5) == 0.0


def _center_value(m):
    dom = make_domain((1, 1, 1), m)
    u = ScalarField(np.ones(dom.shape), dom)
    c = m // 2
    return potential.riesz_direct(u, 2.0).values[c, c, c], dom.h


def test_center_potential_converges():
    # nodes carry cells covering [h/2, 1 - h/2]^3, whose centre potential is (1 - h)^2 C_SELF
    full = potential.cube_center_potential()
    covered, whole = [], []
    for m in (7, 15, 31):
        val, h = _center_value(m)
        covered.append(abs(val - (1 - h) ** 2 * full) / full)
        whole.append(abs(val - full) / full)
    assert covered[-1] < 5e-5
    assert covered[0] / covered[1] > 3.5 and covered[1] / covered[2] > 3.5
    assert whole[0] / whole[1] > 1.8 and whole[1] / whole[2] > 1.8


@pytest.mark.xfail(strict=True, reason="node quadrature misses the boundary half-cells: 6.1% low at m=31")
def test_center_potential_within_two_percent_of_full_cube():
    val, _ = _center_value(31)
    assert abs(val - potential.cube_center_potential()) / potential.cube_center_potential() <= 0.02
