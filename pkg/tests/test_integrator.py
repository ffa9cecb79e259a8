import dataclasses
import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from helisoliton.curve import locate_tau_zero
from helisoliton.integrator import (
    DEFAULT_TOL, MaxStepsExceeded, StepUnderflow, fixed_step_solve, integrate_trajectory,
)
from helisoliton.phase import ROTATOR, CurvatureLaw, SolitonParams, phase_rhs


class SingularLaw(CurvatureLaw):
    """Undefined curvature past tau = 0.3, as a broken prescribed law would give."""

    name = "singular"

    def __call__(self, p, params):
        return 0.0 if p[0] < 0.3 else math.nan


def scipy_reference(init, h, s_end, s_eval):
    params = SolitonParams(h)
    sol = solve_ivp(lambda s, y: phase_rhs((y[0], y[1]), params), (0.0, s_end), list(init),
                    method="DOP853", rtol=1e-13, atol=1e-13, t_eval=s_eval)
    return sol.y.T


def test_taylor_start():
    traj = integrate_trajectory((0, 0, 0), SolitonParams(1.0), span=(0.0, 1e-3))
    s = np.linspace(0, 1e-3, 11)
    y = traj(s)
    assert np.all(np.abs(y[:, 0] - s) <= 2 * s ** 2 + 1e-15)
    assert np.all(np.abs(y[:, 1]) <= s ** 3 + 1e-15)


@pytest.mark.parametrize("init, h", [((0, 0, 0), 1.0), ((1, -1, 0), 2.0), ((-2, 0.5, 0.3), 0.5)])
@pytest.mark.parametrize("s_end", [20.0, -20.0])
def test_matches_independent_integrator(init, h, s_end):
    s_eval = np.linspace(0, s_end, 41)
    ref = scipy_reference(init, h, s_end, s_eval)
    traj = integrate_trajectory(init, SolitonParams(h), span=sorted((0.0, s_end)), tol=(1e-12, 1e-12))
    scale = 1 + np.abs(ref)
    assert np.max(np.abs(traj(s_eval) - ref) / scale) <= 1e-8


def test_nodes_and_dense_output_agree(traj_h1):
    assert np.max(np.abs(traj_h1(traj_h1.s) - traj_h1.y)) <= 1e-12
    mid = 0.5 * (traj_h1.s[1:] + traj_h1.s[:-1])
    left = traj_h1(mid - 1e-13)
    right = traj_h1(mid + 1e-13)
    assert np.max(np.abs(left - right)) <= 1e-9


def test_derivative_matches_rhs_at_nodes(traj_h1):
    rhs = np.array([phase_rhs((t, m), traj_h1.params) for t, m in zip(traj_h1.tau, traj_h1.mu)])
    assert np.max(np.abs(traj_h1.derivative(traj_h1.s) - rhs)) <= 1e-6


def test_r2_derivative_is_two_tau(traj_h2):
    s = np.linspace(-19, 19, 3801)
    d = 1e-3

    def r2(x):
        y = traj_h2(x)
        return y[:, 0] ** 2 + y[:, 1] ** 2

    fd = (r2(s - 2 * d) - 8 * r2(s - d) + 8 * r2(s + d) - r2(s + 2 * d)) / (12 * d)
    assert np.max(np.abs(fd - 2 * traj_h2(s)[:, 0])) <= 1e-6


def test_midpoint_consistency(traj_h1):
    assert np.max(traj_h1.midpoint_residuals()) <= 100


def test_samples_cover_span(traj_h1):
    assert traj_h1.span == (-20.0, 20.0)
    assert np.all(np.diff(traj_h1.s) > 0)
    assert np.max(np.abs(traj_h1.step)) <= traj_h1.stats["max_step"] + 1e-15
    assert traj_h1.stats["accepted"] == len(traj_h1.s) - 1
    assert traj_h1.initial == pytest.approx((0, 0, 0), abs=1e-15)


def test_two_value_init_defaults_theta():
    traj = integrate_trajectory((0.2, 0.1), SolitonParams(1.0), span=(-1, 1))
    assert traj.initial[2] == 0.0


def test_trajectory_is_immutable(traj_h1):
    with pytest.raises(dataclasses.FrozenInstanceError):
        traj_h1.s = None


def test_deterministic():
    a = integrate_trajectory((0.5, -1.5, 0), SolitonParams(2.0), span=(-10, 10))
    b = integrate_trajectory((0.5, -1.5, 0), SolitonParams(2.0), span=(-10, 10))
    assert np.array_equal(a.s, b.s) and np.array_equal(a.y, b.y) and np.array_equal(a.Q, b.Q)


def test_theta_shift_is_congruence():
    params = SolitonParams(2.0)
    a = integrate_trajectory((0.5, 1.0, 0.0), params, span=(-10, 10), tol=(1e-12, 1e-12))
    b = integrate_trajectory((0.5, 1.0, 0.9), params, span=(-10, 10), tol=(1e-12, 1e-12))
    s = np.linspace(-10, 10, 1001)
    ya, yb = a(s), b(s)
    assert np.max(np.abs(ya[:, :2] - yb[:, :2])) <= 1e-9
    assert np.max(np.abs(yb[:, 2] - ya[:, 2] - 0.9)) <= 1e-9


@pytest.mark.parametrize("init, h", [((0, 0, 0), 1.0), ((1, -1, 0), 2.0)])
def test_time_reversal(init, h):
    params = SolitonParams(h)
    a = integrate_trajectory(init, params, span=(-20, 20))
    b = integrate_trajectory((-init[0], -init[1], init[2]), params, span=(-20, 20))
    s = np.linspace(-10, 10, 2001)
    assert np.max(np.abs(b(s)[:, :2] + a(-s)[:, :2])) <= 10 * max(DEFAULT_TOL)


def test_mirror_tau_zero():
    params = SolitonParams(1.5)
    a = integrate_trajectory((0.5, 0.5, 0), params)
    b = integrate_trajectory((-0.5, -0.5, 0), params)
    assert locate_tau_zero(b) == pytest.approx(-locate_tau_zero(a), abs=1e-8)


def test_tighter_tolerance_reduces_error():
    s_eval = np.linspace(0, 20, 21)
    ref = scipy_reference((0.3, -0.7, 0), 2.0, 20.0, s_eval)
    errs = []
    for tol in (1e-6, 1e-8, 1e-10):
        traj = integrate_trajectory((0.3, -0.7, 0), SolitonParams(2.0), span=(0, 20),
                                    tol=(tol, tol), max_step=np.inf)
        errs.append(np.max(np.abs(traj(s_eval) - ref)))
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-7


def test_fixed_step_order():
    params = SolitonParams(0.5)
    init = (1.0, 1.0, 0.0)
    ref = scipy_reference(init, 0.5, 10.0, [10.0])[-1]
    ns = np.array([100, 200, 400, 800])
    errs = np.array([np.max(np.abs(fixed_step_solve(init, params, ROTATOR, 10.0, n) - ref)) for n in ns])
    rates = np.log2(errs[:-1] / errs[1:])
    # the propagated solution is the fifth-order member of the pair; the
    # observed rate approaches 5 from above as the step shrinks
    assert np.all(np.diff(rates) < 0)
    assert 4.5 <= rates[-1] <= 6.0


def test_max_steps_cap():
    with pytest.raises(MaxStepsExceeded):
        integrate_trajectory((0, 0, 0), SolitonParams(1.0), span=(-1, 1), max_steps=3)


def test_step_underflow_on_singular_law():
    with pytest.raises(StepUnderflow):
        integrate_trajectory((0, 0, 0), SolitonParams(1.0), SingularLaw(), span=(-1, 1))


@pytest.mark.parametrize("span", [(1, 2), (0, 0), (2, -2)])
def test_rejects_bad_span(span):
    with pytest.raises(ValueError):
        integrate_trajectory((0, 0, 0), SolitonParams(1.0), span=span)


def test_rejects_bad_tol():
    with pytest.raises(ValueError):
        integrate_trajectory((0, 0, 0), SolitonParams(1.0), tol=(0, 1e-10))
