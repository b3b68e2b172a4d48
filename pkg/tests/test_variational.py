import math

import numpy as np
import pytest

from nehari_flow.domain import ModelParams, l2_norm, make_domain
from nehari_flow.functionals import evaluate, mountain_level
from nehari_flow.variational import (ConvergenceError, SolveOptions, default_seed, lambda_closed,
                                     minimize_mountain_level, nehari_samples, random_bump, stationary_solve,
                                     thresholds, well_depth)


def test_stationary_solution(star15, params):
    st = star15
    assert st.residual_rel <= 1e-6
    assert abs(st.I_star) <= 1e-6 * evaluate(st.u_star, params).grad_sq
    assert st.positive and np.min(st.u_star.values) > 0
    assert abs(st.mu - st.psi_min / params.p) <= 1e-10 * st.mu
    assert st.phi_defect_max < 1e-12


def test_stationary_independent_of_seed_scale(star15, params, dom15):
    other = stationary_solve(params, default_seed(dom15) * 37.0)
    diff = l2_norm(other.u_star - star15.u_star) / l2_norm(star15.u_star)
    assert diff <= 1e-4


def test_stationary_reports_stall(params, dom15):
    with pytest.raises(ConvergenceError) as exc:
        stationary_solve(params, default_seed(dom15), SolveOptions(max_iter=2))
    assert exc.value.result.iterations == 2


def test_stationary_solution_frozen_value(star15):
    # J(u*) at m=15, p=2.5, computed once by this solver
    assert star15.J_star == pytest.approx(24.5747, rel=1e-5)


def test_well_depth(params, dom15, star15):
    de = well_depth(params, dom15, 8, seed=3)
    assert de.converged == 8
    assert de.spread_rel <= 0.02
    assert de.d_est <= star15.J_star + 1e-8
    assert de.d_est == pytest.approx(star15.J_star, rel=1e-6)
    again = well_depth(params, dom15, 8, seed=3, threads=4)
    assert again.d_est == de.d_est and again.levels == de.levels


def test_well_depth_needs_eight_starts(params, dom15):
    with pytest.raises(ValueError):
        well_depth(params, dom15, 4)


def test_depth_descent_is_zero_homogeneous(params, dom15):
    u = random_bump(dom15, np.random.default_rng(5))
    a = minimize_mountain_level(u, params.p, max_iter=50)
    b = minimize_mountain_level(u * 10.0, params.p, max_iter=50)
    assert b.level == pytest.approx(a.level, rel=1e-10)
    assert mountain_level(u * 10.0, params.p) == pytest.approx(mountain_level(u, params.p), rel=1e-12)


def test_nehari_samples_sit_above_depth(params, dom15, star15):
    d = star15.J_star
    p = params.p
    n = 0
    for u, rep in nehari_samples(params, dom15, 16, seed=9):
        n += 1
        assert abs(rep.I) <= 1e-10 * rep.grad_sq
        assert rep.J >= d * 0.98
        assert rep.grad_sq >= 2 * p * d / (p - 1) * 0.98
    assert n == 16


def test_lambda_closed_example():
    val = lambda_closed(10.0, ModelParams(2.5), make_domain((1, 1, 1), 31))
    assert val == pytest.approx(((5 / 1.5) * math.sqrt(3) * 10) ** 0.2, rel=1e-14)
    assert val == pytest.approx(2.250546, abs=1e-6)


def test_thresholds(params, dom15, star15):
    rep = thresholds(3 * star15.J_star, params, dom15, n_samples=24, seed=0, d_est=star15.J_star)
    assert rep.sample_count > 0
    assert rep.lambda_sample > 0
    assert rep.Lambda_sample <= rep.Lambda_closed
    assert all(nm <= rep.Lambda_closed for nm in rep.norms)
    with pytest.raises(ValueError):
        thresholds(0.5 * star15.J_star, params, dom15, d_est=star15.J_star)
