import math

import numpy as np
import pytest

from nehari_flow.domain import (DomainSpec, ModelParams, ScalarField, h1_seminorm_sq, l2_norm, l2_norm_sq,
                                lp_norm, make_domain, neg_laplacian, sup_norm)

from conftest import random_field


def test_unit_cube_geometry():
    d = make_domain((1, 1, 1), 31)
    assert d.h == 1 / 32
    assert d.vol == 1.0
    assert d.gamma == pytest.approx(1.7320508, abs=1e-7)


def test_doubled_cube_geometry():
    d = make_domain((2, 2, 2), 31)
    assert d.h == 0.0625
    assert d.vol == 8.0
    assert d.gamma == pytest.approx(2 * math.sqrt(3), rel=1e-15)


@pytest.mark.parametrize("lengths,m", [((1, 2, 1), 31), ((1, 1, 0), 4), ((1, 1, 1), 0), ((1, 1), 4)])
def test_bad_domains_rejected(lengths, m):
    with pytest.raises(ValueError):
        make_domain(lengths, m)


def test_field_validation(dom8):
    with pytest.raises(ValueError):
        ScalarField(np.zeros((3, 3, 3)), dom8)
    bad = np.zeros(dom8.shape)
    bad[1, 1, 1] = np.nan
    with pytest.raises(ValueError):
        ScalarField(bad, dom8)
    u = ScalarField.zeros(dom8)
    with pytest.raises(ValueError):
        u.values[0, 0, 0] = 1.0


def test_field_arithmetic_needs_same_domain(dom8, dom15):
    with pytest.raises(ValueError):
        ScalarField.zeros(dom8) + ScalarField.zeros(dom15)


def test_single_node_norms():
    d = make_domain((1, 1, 1), 1)
    u = ScalarField(np.ones((1, 1, 1)), d)
    assert l2_norm_sq(ScalarField.zeros(d)) == 0.0
    assert l2_norm_sq(u) == 0.125
    assert h1_seminorm_sq(u) == 3.0


def test_l2_matches_resummation(dom8, rng):
    u = random_field(dom8, rng)
    naive = 0.0
    for x in u.values.ravel():
        naive += x * x
    assert l2_norm_sq(u) == pytest.approx(naive * dom8.h**3, rel=1e-14)


def test_h1_is_the_stencil_quadratic_form(dom8, rng):
    u = random_field(dom8, rng)
    quad = dom8.h**3 * float(np.sum(neg_laplacian(u) * u.values))
    assert h1_seminorm_sq(u) == pytest.approx(quad, rel=1e-13)
    assert h1_seminorm_sq(ScalarField.zeros(dom8)) == 0.0


def test_lp_norms(dom8, rng):
    m = dom8.m
    one = ScalarField(np.ones(dom8.shape), dom8)
    assert lp_norm(one, 2) == pytest.approx((m / (m + 1)) ** 1.5, rel=1e-14)
    u = random_field(dom8, rng)
    assert lp_norm(u, 2) == pytest.approx(l2_norm(u), rel=1e-15)
    naive = (dom8.h**3 * sum(abs(x) ** 4 for x in u.values.ravel())) ** 0.25
    assert lp_norm(u, 4) == pytest.approx(naive, rel=1e-13)
    assert sup_norm(u) == np.max(np.abs(u.values))
    with pytest.raises(ValueError):
        lp_norm(u, 0.5)


def test_model_flags():
    assert ModelParams(2.5).high_energy_range and ModelParams(2.5).subcritical_nl
    assert not ModelParams(2.5).h1_bounded_range
    assert ModelParams(1.5).h1_bounded_range and not ModelParams(1.5).high_energy_range
    assert not ModelParams(3.5).subcritical_nl
    with pytest.raises(ValueError):
        ModelParams(1.0)


def test_domain_is_hashable_value():
    assert DomainSpec((1.0, 1.0, 1.0), 5) == make_domain([1, 1, 1], 5)
