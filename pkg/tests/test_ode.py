import numpy as np
import pytest
from scipy.integrate import solve_ivp

from stekopt.ode import StepLimitExceeded, StepSizeUnderflow, dopri5


def test_exponential_decay_backwards():
    res = dopri5(lambda t, y: y, 1.0, 0.0, [np.e], rtol=1e-12, atol=1e-12)
    assert res.t[-1] == 0.0
    assert res.y[-1, 0] == pytest.approx(1.0, rel=1e-11)


def test_polynomial_solution_exact():
    # y = t^4 is reproduced by a fifth-order method up to roundoff
    res = dopri5(lambda t, y: 4 * t**3 * np.ones(1), 0.0, 2.0, [0.0], rtol=1e-6, atol=1e-6)
    assert res.y[-1, 0] == pytest.approx(16.0, rel=1e-13)


def test_harmonic_oscillator_against_closed_form():
    res = dopri5(lambda t, y: np.array([y[1], -y[0]]), 0.0, 10.0, [1.0, 0.0], rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(res.y[-1], [np.cos(10.0), -np.sin(10.0)], atol=1e-8)
    assert res.n_accepted == len(res.t) - 1


def test_rejected_steps_do_not_corrupt_state():
    # a sharp pulse forces rejections; the result must still match a tight reference
    fun = lambda t, y: np.array([-50.0 * (t - 0.5) * y[0] + np.exp(-200 * (t - 0.5) ** 2)])
    res = dopri5(fun, 0.0, 1.0, [1.0], rtol=1e-9, atol=1e-12)
    ref = solve_ivp(fun, (0.0, 1.0), [1.0], method="DOP853", rtol=1e-13, atol=1e-14)
    assert res.n_rejected > 0
    assert res.y[-1, 0] == pytest.approx(ref.y[0, -1], rel=1e-7)


def test_rejection_after_acceptance_restarts_from_accepted_state():
    # the forcing switches on at t = 0.5, so steps crossing it get rejected
    def fun(t, y):
        return -y + (50.0 if t > 0.5 else 0.0)

    res = dopri5(fun, 0.0, 1.0, [1.0], rtol=1e-10, atol=1e-10)
    y_half = np.exp(-0.5)
    exact = 50.0 + (y_half - 50.0) * np.exp(-0.5)
    assert res.n_rejected > 0
    assert res.y[-1, 0] == pytest.approx(exact, rel=1e-8)


def test_on_step_sees_every_accepted_point():
    seen = []
    res = dopri5(lambda t, y: -y, 0.0, 1.0, [1.0], on_step=lambda t, y: seen.append(t))
    assert seen == list(res.t[1:])


def test_step_underflow_at_blowup():
    # y' = y^2 from y(0) = 1 blows up at t = 1
    with pytest.raises(StepSizeUnderflow) as exc:
        dopri5(lambda t, y: y**2, 0.0, 2.0, [1.0], rtol=1e-10, atol=1e-10)
    assert exc.value.t == pytest.approx(1.0, abs=1e-3)


def test_step_limit():
    with pytest.raises(StepLimitExceeded):
        dopri5(lambda t, y: np.array([y[1], -y[0]]), 0.0, 100.0, [1.0, 0.0], rtol=1e-12, atol=1e-12, max_steps=10)


def test_zero_span():
    res = dopri5(lambda t, y: y, 1.0, 1.0, [2.0])
    assert res.n_accepted == 0 and res.y[-1, 0] == 2.0
