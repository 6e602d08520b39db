"""Simulated vehicle: Newton-Euler rigid body driven by first-order rotors.

Two rotor models are available:

``TD``
    first-order lag on each rotor's thrust, ``f_dot = (f_cmd - f) / alpha``.
``DCMD``
    first-order lag on each rotor's angular speed, thrust following through
    the quadratic propeller map ``f = mu * sgn(Omega) * Omega**2``.

Both feed the same allocation matrix because the propeller drag torque is
``sigma * (kappa / mu) * f``.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .allocation import build_allocation, default_hex_config
from .errors import DimensionMismatch
from .geometry import cross3

E3 = np.array([0.0, 0.0, 1.0])


class RotorModel(str, Enum):
    TD = "TD"
    DCMD = "DCMD"


@dataclass(frozen=True)
class AeroCoefficients:
    mu: float = 2.5e-6
    kappa: float = 0.15 * 2.5e-6
    spin_signs: tuple = (1, -1, 1, -1, 1, -1)

    def __post_init__(self):
        if not (self.mu > 0 and self.kappa > 0):
            raise ValueError("lift and drag coefficients must be positive")


@dataclass(frozen=True)
class VehicleParams:
    """Physical parameters of the vehicle.

    ``alpha`` is the time constant of whichever rotor model drives the plant.
    ``f_max`` is only used for auditing; thrusts are never clipped.
    """

    m: float = 1.0
    g: float = 9.81
    J: np.ndarray = field(default_factory=lambda: np.diag([0.03, 0.03, 0.03]))
    alpha: float = 0.1
    geometry: object = field(default_factory=default_hex_config)
    mu: float = 2.5e-6
    f_max: float = 10.0

    def __post_init__(self):
        J = np.array(self.J, dtype=float)
        if not self.m > 0:
            raise ValueError("mass must be positive")
        if not self.alpha > 0:
            raise ValueError("rotor time constant must be positive")
        if J.shape != (3, 3) or np.linalg.norm(J - J.T) > 1e-12 or np.linalg.eigvalsh(J).min() <= 0:
            raise ValueError("inertia must be symmetric positive definite")
        J.setflags(write=False)
        J_inv = np.linalg.inv(J)
        J_inv.setflags(write=False)
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "J_inv", J_inv)
        object.__setattr__(self, "allocation", build_allocation(self.geometry))

    @property
    def n_rotors(self):
        return self.geometry.n

    @property
    def aero(self):
        tpt = self.geometry.torque_per_thrust
        return AeroCoefficients(mu=self.mu, kappa=abs(tpt) * self.mu, spin_signs=tuple(self.geometry.spin))


@dataclass(frozen=True)
class RigidBodyState:
    p: np.ndarray
    v: np.ndarray
    R: np.ndarray
    omega: np.ndarray

    @classmethod
    def at_rest(cls, p=(0.0, 0.0, 0.0), R=None):
        return cls(np.array(p, dtype=float), np.zeros(3), np.eye(3) if R is None else np.array(R, dtype=float), np.zeros(3))


@dataclass
class RotorBank:
    """Actuator state: thrusts in newtons (TD) or speeds in rad/s (DCMD)."""

    model: RotorModel
    values: np.ndarray

    def __post_init__(self):
        self.model = RotorModel(self.model)
        self.values = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(self.values)):
            raise ValueError("rotor values must be finite")

    @property
    def n(self):
        return self.values.shape[0]

    def thrusts(self, mu):
        if self.model is RotorModel.TD:
            return self.values.copy()
        return aero_thrust(self.values, mu)


@dataclass(frozen=True)
class PlantDerivative:
    p_dot: np.ndarray
    v_dot: np.ndarray
    omega_dot: np.ndarray
    rotor_dot: np.ndarray
    wrench: np.ndarray


def aero_thrust(omega_rotor, mu):
    """Propeller thrust ``mu * sgn(Omega) * Omega**2``."""
    w = np.asarray(omega_rotor, dtype=float)
    return mu * w * np.abs(w)


def aero_torque(omega_rotor, kappa, spin_sign):
    """Reaction torque about the rotor axis, ``spin_sign * kappa * sgn(Omega) * Omega**2``."""
    w = np.asarray(omega_rotor, dtype=float)
    return spin_sign * kappa * w * np.abs(w)


def thrust_to_speed(f, mu):
    """Rotor speed that produces thrust ``f``; inverse of :func:`aero_thrust`."""
    f = np.asarray(f, dtype=float)
    return np.sign(f) * np.sqrt(np.abs(f) / mu)


def td_derivative(f, f_cmd, alpha):
    return (np.asarray(f_cmd, dtype=float) - f) / alpha


def dcmd_derivative(omega_rotor, omega_cmd, alpha_m):
    return (np.asarray(omega_cmd, dtype=float) - omega_rotor) / alpha_m


def rigid_body_derivative(state, F, M, params):
    """Newton-Euler equations with body-frame force ``F`` and moment ``M``.

    Returns ``(p_dot, v_dot, omega_dot)``. Attitude kinematics
    ``R_dot = R [omega]^`` are handled by the integrator through ``state.omega``.
    """
    v_dot = (state.R @ F) / params.m - params.g * E3
    J = params.J
    omega = state.omega
    omega_dot = params.J_inv @ (M - cross3(omega, J @ omega))
    return state.v.copy(), v_dot, omega_dot


def rotor_command(f_cmd, model, mu):
    """Convert commanded thrusts into the quantity tracked by the rotor model."""
    if RotorModel(model) is RotorModel.TD:
        return np.asarray(f_cmd, dtype=float)
    return thrust_to_speed(f_cmd, mu)


def plant_derivative(state, rotors, f_cmd, params):
    """Full plant derivative for the rigid body and the rotor bank.

    Raises
    ------
    DimensionMismatch
        If the rotor bank or command length disagree with the geometry.
    """
    n = params.n_rotors
    f_cmd = np.asarray(f_cmd, dtype=float)
    if f_cmd.shape != (n,) or rotors.n != n:
        raise DimensionMismatch(f"expected {n} rotors, got command {f_cmd.shape} and bank {rotors.n}")
    if rotors.model is RotorModel.TD:
        rotor_dot = td_derivative(rotors.values, f_cmd, params.alpha)
    else:
        rotor_dot = dcmd_derivative(rotors.values, thrust_to_speed(f_cmd, params.mu), params.alpha)
    wrench = params.allocation.A @ rotors.thrusts(params.mu)
    p_dot, v_dot, omega_dot = rigid_body_derivative(state, wrench[:3], wrench[3:], params)
    return PlantDerivative(p_dot, v_dot, omega_dot, rotor_dot, wrench)


def flat_derivative(R, x, rotor_cmd, params, model):
    """Allocation-free hot path used by the simulator.

    ``x`` packs ``[p, v, omega, rotor values]``; ``rotor_cmd`` is already in
    the rotor model's units (thrust for TD, speed for DCMD).
    """
    rotor_vals = x[9:]
    if model is RotorModel.TD:
        thrust = rotor_vals
    else:
        thrust = params.mu * rotor_vals * np.abs(rotor_vals)
    wrench = params.allocation.A @ thrust
    omega = x[6:9]
    J = params.J
    out = np.empty_like(x)
    out[0:3] = x[3:6]
    out[3:6] = (R @ wrench[:3]) / params.m
    out[5] -= params.g
    Jw = J @ omega
    out[6:9] = params.J_inv @ (wrench[3:] - cross3(omega, Jw))
    out[9:] = (rotor_cmd - rotor_vals) / params.alpha
    return out


def wrench_from_rotors(values, model, params):
    if model is RotorModel.TD:
        thrust = np.asarray(values, dtype=float)
    else:
        thrust = aero_thrust(values, params.mu)
    return params.allocation.A @ thrust

