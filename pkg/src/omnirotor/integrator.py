"""Fixed-step fourth-order Runge-Kutta on ``SO(3) x R^k``.

The attitude is advanced in exponential coordinates around the rotation at
the start of the step (Runge-Kutta-Munthe-Kaas), so every stage and the
result stay on the manifold and the scheme keeps fourth order.
"""

from dataclasses import dataclass

import numpy as np

from .geometry import exp_so3, right_jacobian_inv


@dataclass
class StateBundle:
    """Rotation ``R`` plus a flat vector ``x`` whose slice ``omega_slice`` is the body rate."""

    R: np.ndarray
    x: np.ndarray
    omega_slice: slice = slice(6, 9)


def rk4_step(bundle, f, dt, t=0.0):
    """Advance ``bundle`` by ``dt`` under ``x_dot = f(t, R, x)``, ``R_dot = R [omega]^``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    R0, x0, ws = bundle.R, bundle.x, bundle.omega_slice

    k1 = f(t, R0, x0)
    th1 = x0[ws]

    theta = 0.5 * dt * th1
    x = x0 + 0.5 * dt * k1
    R = R0 @ exp_so3(theta)
    k2 = f(t + 0.5 * dt, R, x)
    th2 = right_jacobian_inv(theta) @ x[ws]

    theta = 0.5 * dt * th2
    x = x0 + 0.5 * dt * k2
    R = R0 @ exp_so3(theta)
    k3 = f(t + 0.5 * dt, R, x)
    th3 = right_jacobian_inv(theta) @ x[ws]

    theta = dt * th3
    x = x0 + dt * k3
    R = R0 @ exp_so3(theta)
    k4 = f(t + dt, R, x)
    th4 = right_jacobian_inv(theta) @ x[ws]

    x_new = x0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    theta_new = (dt / 6.0) * (th1 + 2.0 * th2 + 2.0 * th3 + th4)
    R_new = R0 @ exp_so3(theta_new)
    # one Newton-Schulz polar iteration removes round-off drift away from SO(3)
    R_new = 1.5 * R_new - 0.5 * (R_new @ R_new.T @ R_new)
    return StateBundle(R_new, x_new, ws)
