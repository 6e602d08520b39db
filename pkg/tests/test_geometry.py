import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from omnirotor import geometry as geo
from omnirotor.errors import DegenerateInput, NonSkewInput

vec3 = st.lists(st.floats(-10, 10, allow_nan=False), min_size=3, max_size=3).map(np.array)


def random_rotation(rng):
    return geo.exp_so3(rng.normal(size=3) * 2.0)


def test_wedge_matches_cross_product():
    a, b = np.array([1.0, -2.0, 0.5]), np.array([0.3, 0.7, -1.1])
    np.testing.assert_allclose(geo.wedge(a) @ b, np.cross(a, b), atol=1e-15)


@given(vec3)
def test_vee_inverts_wedge(v):
    np.testing.assert_allclose(geo.vee(geo.wedge(v)), v, atol=0)


def test_vee_rejects_non_skew():
    with pytest.raises(NonSkewInput):
        geo.vee(np.eye(3))
    with pytest.raises(NonSkewInput):
        geo.vee(np.zeros((2, 2)))


def test_cross3_matches_numpy():
    a, b = np.array([0.2, -1.0, 3.0]), np.array([4.0, 0.5, -0.25])
    np.testing.assert_allclose(geo.cross3(a, b), np.cross(a, b), atol=1e-15)


def test_exp_known_rotations():
    np.testing.assert_allclose(geo.exp_so3([0, 0, math.pi / 2]), geo.rot_z(math.pi / 2), atol=1e-15)
    np.testing.assert_allclose(geo.exp_so3([1.0, 0, 0], dt=0.3), geo.rot_x(0.3), atol=1e-15)
    np.testing.assert_allclose(geo.exp_so3(np.zeros(3)), np.eye(3), atol=0)
    # a full turn about any axis returns to identity
    axis = np.array([1.0, 2.0, -2.0]) / 3.0
    np.testing.assert_allclose(geo.exp_so3(2 * math.pi * axis), np.eye(3), atol=1e-14)


def test_exp_small_angle_branch_is_orthonormal():
    R = geo.exp_so3(np.array([1e-9, -2e-9, 3e-10]))
    assert geo.is_rotation(R, 1e-15)


def test_exp_rejects_negative_dt():
    with pytest.raises(ValueError):
        geo.exp_so3([1, 0, 0], dt=-1.0)


@given(vec3)
@settings(max_examples=200)
def test_exp_lands_on_so3(v):
    assert geo.is_rotation(geo.exp_so3(v), 1e-12)


def test_right_jacobian_inverse_against_finite_difference():
    # d/dt exp(theta(t)) = exp(theta) [Jr(theta) theta_dot]^, so Jr^-1 maps body rate back to theta_dot
    theta = np.array([0.4, -0.9, 1.3])
    w = np.array([0.3, 0.2, -0.5])
    Jinv = geo.right_jacobian_inv(theta)
    theta_dot = Jinv @ w
    h = 1e-6
    R0 = geo.exp_so3(theta)
    dR = (geo.exp_so3(theta + h * theta_dot) - geo.exp_so3(theta - h * theta_dot)) / (2 * h)
    np.testing.assert_allclose(geo._vee(R0.T @ dR), w, atol=1e-8)


def test_right_jacobian_inverse_series_branch_continuous():
    a = geo.right_jacobian_inv(np.array([1e-6, 0, 0]))
    b = geo.right_jacobian_inv(np.array([1.1e-5, 0, 0]))
    np.testing.assert_allclose(a, b, atol=1e-5)


def test_renormalize_projects_and_rejects():
    rng = np.random.default_rng(0)
    R = random_rotation(rng)
    noisy = R + 1e-6 * rng.normal(size=(3, 3))
    out = geo.renormalize(noisy)
    assert geo.is_rotation(out, 1e-12)
    np.testing.assert_allclose(out, R, atol=1e-5)
    with pytest.raises(DegenerateInput):
        geo.renormalize(np.diag([1.0, 1.0, 0.0]))
    with pytest.raises(DegenerateInput):
        geo.renormalize(np.diag([1.0, 1.0, -1.0]))
    with pytest.raises(DegenerateInput):
        geo.renormalize(np.full((3, 3), np.nan))


def test_psi_examples():
    assert geo.psi(np.eye(3), np.eye(3)) == 0.0
    assert geo.psi(geo.rot_x(math.pi), np.eye(3)) == pytest.approx(2.0)
    assert geo.psi(geo.rot_z(math.pi / 2), np.eye(3)) == pytest.approx(1.0)
    # 1 - cos(angle) for a single-axis rotation
    assert geo.psi(geo.rot_y(0.7), np.eye(3)) == pytest.approx(1 - math.cos(0.7))


def test_attitude_error_single_axis():
    # e_R = sin(angle) * axis for a rotation about one axis
    np.testing.assert_allclose(geo.attitude_error(geo.rot_z(0.3), np.eye(3)), [0, 0, math.sin(0.3)], atol=1e-15)
    np.testing.assert_allclose(geo.attitude_error(np.eye(3), geo.rot_z(0.3)), [0, 0, -math.sin(0.3)], atol=1e-15)


def test_angular_velocity_error_zero_when_tracking():
    R = geo.rot_x(0.4)
    np.testing.assert_allclose(geo.angular_velocity_error([1.0, 0, 0], R, R, [1.0, 0, 0]), 0, atol=1e-15)
