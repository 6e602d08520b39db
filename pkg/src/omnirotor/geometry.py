"""SO(3) primitives used by the plant, the controller and the certificates.

Vectors are ``(3,)`` float arrays and matrices ``(3, 3)`` float arrays.
Rotation matrices map body-frame coordinates to inertial coordinates.
"""

import math

import numpy as np

from .errors import DegenerateInput, NonSkewInput

SKEW_TOL = 1e-9
EYE3 = np.eye(3)


def wedge(v):
    """Skew-symmetric matrix ``S`` with ``S @ u == cross(v, u)``."""
    x, y, z = float(v[0]), float(v[1]), float(v[2])
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def _vee(M):
    return np.array([M[2, 1], M[0, 2], M[1, 0]])


def vee(M, tol=SKEW_TOL):
    """Inverse of :func:`wedge`.

    Raises
    ------
    NonSkewInput
        If ``||M + M^T||_F`` exceeds ``tol``.
    """
    M = np.asarray(M, dtype=float)
    if M.shape != (3, 3):
        raise NonSkewInput(f"expected a 3x3 matrix, got shape {M.shape}")
    asym = np.linalg.norm(M + M.T)
    if not asym <= tol:
        raise NonSkewInput(f"matrix is not skew-symmetric (||M + M^T|| = {asym:.3e})")
    return _vee(M)


def cross3(a, b):
    """Cross product of two 3-vectors; much cheaper than ``np.cross`` for single vectors."""
    return np.array([a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]])


def exp_so3(omega, dt=1.0):
    """Rotation reached after spinning at body rate ``omega`` for ``dt`` seconds (Rodrigues)."""
    if dt < 0:
        raise ValueError("dt must be non-negative")
    theta = np.asarray(omega, dtype=float) * dt
    angle = math.sqrt(theta[0] ** 2 + theta[1] ** 2 + theta[2] ** 2)
    K = wedge(theta)
    if angle < 1e-8:
        return EYE3 + K + 0.5 * (K @ K)
    return EYE3 + (math.sin(angle) / angle) * K + ((1.0 - math.cos(angle)) / angle**2) * (K @ K)


def right_jacobian_inv(theta):
    """Inverse right Jacobian of SO(3): maps body rate to the rate of local coordinates."""
    angle = math.sqrt(theta[0] ** 2 + theta[1] ** 2 + theta[2] ** 2)
    K = wedge(theta)
    if angle < 1e-5:
        coeff = 1.0 / 12.0 + angle**2 / 720.0
    else:
        coeff = 1.0 / angle**2 - (1.0 + math.cos(angle)) / (2.0 * angle * math.sin(angle))
    return EYE3 + 0.5 * K + coeff * (K @ K)


def rot_x(angle):
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(angle):
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(angle):
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def is_rotation(R, tol=1e-9):
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3) or not np.all(np.isfinite(R)):
        return False
    return bool(np.linalg.norm(R.T @ R - EYE3) <= tol and abs(np.linalg.det(R) - 1.0) <= tol)


def renormalize(R):
    """Project an approximately orthonormal matrix onto SO(3) (polar factor).

    Raises
    ------
    DegenerateInput
        When the input is rank deficient or has non-positive determinant.
    """
    R = np.asarray(R, dtype=float)
    if not np.all(np.isfinite(R)):
        raise DegenerateInput("matrix has non-finite entries")
    U, s, Vt = np.linalg.svd(R)
    if s[-1] <= 1e-12 * max(s[0], 1e-300):
        raise DegenerateInput("matrix is rank deficient")
    if np.linalg.det(R) <= 0.0:
        raise DegenerateInput("matrix has non-positive determinant")
    return U @ Vt


def psi(R, R_d):
    """Attitude error function ``0.5 * tr(I - R_d^T R)``, clamped to ``[0, 2]``."""
    tr = float(np.einsum("ij,ij->", R_d, R))  # tr(R_d^T R)
    return min(max(0.5 * (3.0 - tr), 0.0), 2.0)


def attitude_error(R, R_d):
    """``e_R = 0.5 * vee(R_d^T R - R^T R_d)``."""
    E = R_d.T @ R
    return 0.5 * _vee(E - E.T)


def angular_velocity_error(omega, R, R_d, omega_d):
    """``e_omega = omega - R^T R_d omega_d``; all rates in their own body frames."""
    return np.asarray(omega, dtype=float) - R.T @ (R_d @ np.asarray(omega_d, dtype=float))
