import math

import numpy as np
import pytest

from omnirotor import geometry as geo
from omnirotor.controller import (
    ControllerMode,
    ControllerState,
    Gains,
    TrajectorySample,
    backward_difference,
    commanded_force,
    commanded_moment,
    control_step,
    desired_force,
    desired_moment,
    find_feasible_constants,
    rotational_gain_bound,
    translational_gain_bound,
    validate_gains,
)
from omnirotor.errors import NonPositiveConstant
from omnirotor.plant import RigidBodyState, VehicleParams
from omnirotor.stability import build_rotational_certificate, build_translational_certificate

J = np.diag([0.03, 0.03, 0.03])


def test_hover_desired_force_is_weight():
    F = desired_force(np.zeros(3), np.zeros(3), np.eye(3), np.zeros(3), Gains(), 1.0, 9.81)
    np.testing.assert_allclose(F, [0, 0, 9.81])


def test_desired_force_is_expressed_in_body_frame():
    R = geo.rot_x(math.pi / 2)
    F = desired_force(np.zeros(3), np.zeros(3), R, np.zeros(3), Gains(), 1.0, 9.81)
    # gravity compensation points up in the inertial frame, along -body y here
    np.testing.assert_allclose(R @ F, [0, 0, 9.81], atol=1e-14)
    np.testing.assert_allclose(F, [0, 9.81, 0], atol=1e-14)


def test_desired_moment_pd_terms():
    g = Gains(kR=2.0, komega=0.5)
    M = desired_moment([0.1, 0, 0], [0, 0.2, 0], np.zeros(3), np.eye(3), np.eye(3), np.zeros(3), np.zeros(3), g, J)
    np.testing.assert_allclose(M, [-0.2, -0.1, 0.0])


def test_backward_difference_orders():
    dt = 0.01
    hist = [np.array([0.9]), np.array([0.8])]
    np.testing.assert_allclose(backward_difference(np.array([1.0]), [], dt), [0.0])
    np.testing.assert_allclose(backward_difference(np.array([1.0]), hist, dt, order=1), [10.0])
    # exact for quadratics at second order: y = t^2 at t = 0.02, 0.01, 0
    hist = [np.array([1e-4]), np.array([0.0])]
    np.testing.assert_allclose(backward_difference(np.array([4e-4]), hist, dt, order=2), [0.04], rtol=1e-12)
    # short history falls back to first order
    np.testing.assert_allclose(backward_difference(np.array([1.0]), hist[:1], dt, order=2), [(1 - 1e-4) / dt])


def test_commanded_force_adds_alpha_times_rate():
    st = ControllerState(difference_order=1)
    F0 = commanded_force([0.0, 0.0, 1.0], st, 0.1, 0.01)
    np.testing.assert_allclose(F0, [0, 0, 1.0])
    F1 = commanded_force([0.0, 0.0, 1.5], st, 0.1, 0.01)
    np.testing.assert_allclose(F1, [0, 0, 1.5 + 0.1 * 50.0])


def test_conventional_passes_wrench_through():
    st = ControllerState(mode=ControllerMode.CONVENTIONAL)
    commanded_moment([1.0, 0, 0], st, 0.1, 0.01)
    np.testing.assert_allclose(commanded_moment([2.0, 0, 0], st, 0.1, 0.01), [2.0, 0, 0])


def test_commanded_rejects_bad_dt():
    with pytest.raises(ValueError):
        commanded_force(np.zeros(3), ControllerState(), 0.1, 0.0)


def test_controller_state_reset():
    st = ControllerState()
    commanded_force(np.ones(3), st, 0.1, 0.01)
    commanded_moment(np.ones(3), st, 0.1, 0.01)
    assert st.has_history
    st.reset()
    assert not st.has_history


def test_control_step_zero_error_hover():
    p = VehicleParams()
    sample = TrajectorySample(np.zeros(3), np.zeros(3), np.zeros(3), np.eye(3), np.zeros(3), np.zeros(3))
    out = control_step(RigidBodyState.at_rest(), sample, Gains(), p, ControllerState(), 1e-3)
    np.testing.assert_allclose(out.F_cmd, [0, 0, 9.81])
    np.testing.assert_allclose(out.M_cmd, 0, atol=1e-15)


def test_gains_must_be_positive():
    with pytest.raises(ValueError):
        Gains(kp=0.0)


def test_translational_bound_example():
    # kp bound at kv = 1, c1 = 0.1, m = 1: (0.1 + 0.2 - 0.01) / (4 * 0.9 - 1)
    assert translational_gain_bound(1.0, 0.1, 1.0) == pytest.approx(0.29 / 2.6)
    assert translational_gain_bound(1.0, 0.8, 1.0) == math.inf


def test_rotational_bound_example():
    assert rotational_gain_bound(1.0, 0.05, 0.03) == pytest.approx(0.05 / (0.03 * 2.8))
    assert rotational_gain_bound(1.0, 0.75, 0.03) == math.inf


def test_validate_gains_report():
    r = validate_gains(Gains(), 0.1, 0.05, 1.0, J)
    assert r.translational_ok and r.rotational_ok and r.valid
    assert r.kv_min == pytest.approx(0.35)
    # c2 = 0.1 needs kR > 1.28, which the unit gain does not reach
    assert not validate_gains(Gains(), 0.1, 0.1, 1.0, J).rotational_ok
    with pytest.raises(NonPositiveConstant):
        validate_gains(Gains(), 0.0, 0.05, 1.0, J)


def test_small_kv_is_infeasible():
    assert find_feasible_constants(Gains(kv=0.1), 1.0, J) is None


@pytest.mark.parametrize("alpha", [0.07, 0.1])
def test_feasible_constants_certify(alpha):
    c1, c2 = find_feasible_constants(Gains(), 1.0, J, alpha=alpha)
    assert validate_gains(Gains(), c1, c2, 1.0, J).valid
    assert build_translational_certificate(3.0, 1.0, c1, 1.0, alpha).valid
    assert build_rotational_certificate(1.0, 1.0, c2, J, alpha, 1.9).valid


def test_feasible_constants_deterministic():
    assert find_feasible_constants(Gains(), 1.0, J) == find_feasible_constants(Gains(), 1.0, J)
