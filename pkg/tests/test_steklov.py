import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stekopt.poly import MonomialPoly, NormalQuartic
from stekopt.steklov import (
    ORACLE_MAX_DIM,
    quadrature_oracle,
    steklov_build,
    steklov_eval,
    steklov_grad_tx,
    steklov_grad_x,
    steklov_hess_x,
)

from conftest import fd_gradient, fd_jacobian, random_monomial

F1 = NormalQuartic([1, 1], [[-2, -0.35], [-0.35, -4]], [0.2, 0.3], 5.0)


def test_f1_closed_form():
    # mu = f + 2 t^2 (x1^2 + x2^2 - 1) + 0.4 t^4
    S = steklov_build(F1)
    for x, t in [((0, 0), 1.0), ((0.3, -1.2), 0.7), ((2.0, 1.0), 1.9)]:
        expect = F1.evaluate(x) + 2 * t**2 * (x[0] ** 2 + x[1] ** 2 - 1) + 0.4 * t**4
        assert steklov_eval(S, x, t) == pytest.approx(expect, abs=1e-12)
    assert steklov_eval(S, (0, 0), 1.0) == pytest.approx(3.4, abs=1e-14)


def test_f1_derivative_formulas():
    S = steklov_build(F1)
    x, t = np.array([0.4, -0.9]), 1.3
    g = steklov_grad_x(S, x, t)
    np.testing.assert_allclose(g, [4 * x[0] ** 3 + 4 * (t * t - 1) * x[0] - 0.7 * x[1] + 0.2,
                                   4 * x[1] ** 3 + 4 * (t * t - 2) * x[1] - 0.7 * x[0] + 0.3], atol=1e-13)
    H = steklov_hess_x(S, x, t)
    np.testing.assert_allclose(H, [[12 * x[0] ** 2 + 4 * (t * t - 1), -0.7],
                                   [-0.7, 12 * x[1] ** 2 + 4 * (t * t - 2)]], atol=1e-13)
    np.testing.assert_allclose(steklov_grad_tx(S, x, t), 8 * t * x, atol=1e-13)


def test_one_dimensional_moments():
    # average of x^k over [x-t, x+t]
    f = MonomialPoly(1, {(4,): 1.0})
    S = steklov_build(f)
    x, t = 0.7, 0.5
    exact = ((x + t) ** 5 - (x - t) ** 5) / (10 * t)
    assert steklov_eval(S, [x], t) == pytest.approx(exact, rel=1e-14)


def test_t_zero_returns_f(rng):
    f = random_monomial(rng, 3)
    S = steklov_build(f)
    x = rng.uniform(-1, 1, 3)
    assert steklov_eval(S, x, 0.0) == pytest.approx(f.evaluate(x), abs=1e-14)
    np.testing.assert_allclose(steklov_grad_x(S, x, 0.0), f.gradient(x))


def test_negative_t_rejected():
    S = steklov_build(F1)
    with pytest.raises(ValueError):
        steklov_eval(S, (0, 0), -0.1)


def test_oracle_limits():
    f = MonomialPoly(ORACLE_MAX_DIM + 1, {(1,) + (0,) * ORACLE_MAX_DIM: 1.0})
    with pytest.raises(ValueError, match="limited"):
        quadrature_oracle(f, np.zeros(ORACLE_MAX_DIM + 1), 1.0)
    with pytest.raises(ValueError):
        quadrature_oracle(F1, (0, 0), 0.0)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**32 - 1), st.floats(0.01, 3.0))
def test_closed_form_matches_quadrature(n, seed, t):
    rng = np.random.default_rng(seed)
    f = random_monomial(rng, n)
    S = steklov_build(f)
    x = rng.uniform(-2, 2, n)
    v = steklov_eval(S, x, t)
    assert abs(v - quadrature_oracle(f, x, t)) <= 1e-9 * (1 + abs(v))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 3), st.integers(0, 2**32 - 1), st.floats(0.05, 2.0))
def test_derivatives_consistent(n, seed, t):
    rng = np.random.default_rng(seed)
    f = random_monomial(rng, n)
    S = steklov_build(f)
    x = rng.uniform(-1.5, 1.5, n)
    np.testing.assert_allclose(steklov_grad_x(S, x, t), fd_gradient(lambda y: steklov_eval(S, y, t), x), atol=1e-6)
    np.testing.assert_allclose(steklov_hess_x(S, x, t), fd_jacobian(lambda y: steklov_grad_x(S, y, t), x), atol=1e-6)
    h = 1e-6
    dt = (steklov_grad_x(S, x, t + h) - steklov_grad_x(S, x, t - h)) / (2 * h)
    np.testing.assert_allclose(steklov_grad_tx(S, x, t), dt, atol=1e-6)


def test_hessian_shift_is_c_matrix(rng):
    f = random_monomial(rng, 3)
    S = steklov_build(f)
    x = rng.uniform(-1, 1, 3)
    np.testing.assert_allclose(steklov_hess_x(S, x, 1.2) - f.hessian(x), (1.44 / 6) * f.c_matrix(), atol=1e-12)
