import math

import numpy as np
import pytest

from stekopt.bench import builtin_problem
from stekopt.poly import MonomialPoly, NormalQuartic
from stekopt.solve import (
    SolverConfig,
    TrajectoryStatus,
    certify_endpoint,
    choose_t0,
    minimize_convexified,
    run_algorithm1,
    trajectory,
    write_trace_csv,
)
from stekopt.steklov import steklov_build, steklov_grad_x

F1 = builtin_problem("f1").polynomial
T0_F1 = math.sqrt(2.1)


def test_f1_convexified_minimizer():
    x0 = minimize_convexified(steklov_build(F1), T0_F1)
    np.testing.assert_allclose(x0, [-0.10500662833508, -0.38094363094061], atol=1e-12)


def test_newton_tolerates_start_point():
    S = steklov_build(F1)
    a = minimize_convexified(S, T0_F1)
    b = minimize_convexified(S, T0_F1, x_start=[5.0, -7.0])
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_f1_trajectory_stays_stationary():
    S = steklov_build(F1)
    x0 = minimize_convexified(S, T0_F1)
    tr = trajectory(S, x0, T0_F1)
    assert tr.status is TrajectoryStatus.REACHED_ZERO
    assert tr.t[0] == T0_F1 and tr.t[-1] == 0.0
    assert np.all(np.diff(tr.t) < 0)
    for t, x in tr.samples:
        assert np.abs(steklov_grad_x(S, x, t)).max() < 1e-9
    np.testing.assert_allclose(tr.x_final, [-1.128494496206, -1.477960288995], atol=1e-9)


def test_trace_thinning_keeps_endpoints():
    S = steklov_build(F1)
    x0 = minimize_convexified(S, T0_F1)
    full = trajectory(S, x0, T0_F1)
    thin = trajectory(S, x0, T0_F1, SolverConfig(trace_every=None))
    assert len(thin.t) == 2 and len(full.t) > 10
    np.testing.assert_array_equal(thin.x[-1], full.x[-1])


def test_report_fields_f1():
    rep = run_algorithm1(F1, SolverConfig(t0_mode="user", t0=T0_F1))
    assert rep.success and rep.trajectory_status == "ReachedZero"
    assert rep.f_star == pytest.approx(-1.727802817222, abs=1e-11)
    assert rep.hessian_pd and rep.eig_min > 0
    d = rep.to_dict()
    assert "trajectory" not in d and d["status"] == "Success"


def test_auto_t0_for_f1_reaches_same_point():
    rep = run_algorithm1(F1)
    assert rep.t0_used == pytest.approx(rep.t0_bound + 0.1)
    np.testing.assert_allclose(rep.x_star, [-1.128494496206, -1.477960288995], atol=1e-9)


def test_ball_mode_matches_closed_form_for_normal():
    plan = choose_t0(F1, SolverConfig(t0_mode="ball"))
    assert plan.bound == pytest.approx(choose_t0(F1, SolverConfig()).bound, rel=1e-12)


def test_counterexample_is_flagged():
    f = builtin_problem("counterexample").polynomial
    for tol in (1e-12, 1e-8):
        rep = run_algorithm1(f, SolverConfig(t0_mode="user", t0=0.694, ode_rtol=tol, ode_atol=tol))
        assert not rep.success
        assert rep.trajectory_status == "NearSingularHessian"
        assert 0.58 <= rep.t_stop <= 0.68
        assert "near-singular" in rep.reason or "singular" in rep.reason


def test_refuses_when_c_not_positive_definite():
    rep = run_algorithm1(builtin_problem("rosenbrock:3").polynomial)
    assert not rep.success and "SingularPSD" in rep.reason
    rep = run_algorithm1(MonomialPoly(2, {(2, 0): 1.0, (0, 2): 1.0}))
    assert "Zero" in rep.reason


def test_too_small_user_t0_fails_cleanly():
    # at t0 = 0.3 the smoothed f1 is not convex; whatever happens, the report says why
    rep = run_algorithm1(F1, SolverConfig(t0_mode="user", t0=0.3))
    assert rep.status in ("Success", "Failure")
    if not rep.success:
        assert rep.reason


def test_general_quartic_ball_route():
    # x^4 + y^4 + x^2 y^2 - 2 x^2 - y^2 + 0.1 x: C positive definite, not normal
    f = MonomialPoly(2, {(4, 0): 1.0, (0, 4): 1.0, (2, 2): 1.0, (2, 0): -2.0, (0, 2): -1.0, (1, 0): 0.1})
    assert f.to_normal() is None
    with pytest.raises(ValueError):
        choose_t0(f, SolverConfig())
    rep = run_algorithm1(f, SolverConfig(L=3.0))
    assert rep.success
    grid = np.linspace(-2, 2, 401)
    brute = min(f.evaluate((x, y)) for x in grid[::4] for y in grid[::4])
    assert rep.f_star <= brute + 1e-6


def test_certify_endpoint():
    c = certify_endpoint(F1, [-1.128494496206, -1.477960288995])
    assert c.grad_inf < 1e-10 and c.hessian_pd
    c = certify_endpoint(F1, [0.044197271094, 0.033651793151])
    assert not c.hessian_pd  # local maximum


def test_polish_only_improves():
    f = builtin_problem("q64").polynomial
    plain = run_algorithm1(f, SolverConfig.batch_defaults())
    polished = run_algorithm1(f, SolverConfig.batch_defaults(polish=True))
    assert polished.grad_inf <= plain.grad_inf
    assert polished.f_star == pytest.approx(plain.f_star, abs=1e-8)


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(t0_mode="magic")
    with pytest.raises(ValueError):
        SolverConfig(t0_mode="user")
    with pytest.raises(ValueError):
        SolverConfig(ode_rtol=0.0)
    assert SolverConfig().stall_rcond_value == pytest.approx(1e-6)
    assert SolverConfig.batch_defaults().stall_rcond_value == pytest.approx(1e-4)


def test_separable_reaches_global_minimum():
    # per-coordinate global minimum from the cubic's real roots
    a, b, d = np.array([1.0, 1.5, 2.0]), np.array([-2.0, -0.5, -3.0]), np.array([0.3, -0.2, 0.1])
    f = NormalQuartic(a, np.diag(b), d)
    rep = run_algorithm1(f)
    best = 0.0
    for ai, bi, di in zip(a, b, d):
        r = np.roots([4 * ai, 0, 2 * bi, di])
        r = r[np.abs(r.imag) < 1e-9].real
        best += min(ai * r**4 + bi * r**2 + di * r)
    assert rep.f_star == pytest.approx(best, abs=1e-9)


def test_trace_csv(tmp_path):
    rep = run_algorithm1(F1)
    p = tmp_path / "trace.csv"
    write_trace_csv(rep.trajectory, p)
    rows = p.read_text().splitlines()
    assert rows[0] == "t,x1,x2"
    t_last, *x_last = map(float, rows[-1].split(","))
    assert t_last == 0.0
    assert x_last == rep.x_star
