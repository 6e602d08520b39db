"""Geometric PD tracking controller with rotor-lag feedforward.

The desired force and moment are the usual geometric PD laws written in the
body frame. The commanded wrench adds ``alpha`` times their time derivative,
estimated by a backward difference, so that a first-order rotor lag with
time constant ``alpha`` is cancelled. The conventional baseline sends the
desired wrench directly.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import geometry as geo
from .errors import NonPositiveConstant

E3 = np.array([0.0, 0.0, 1.0])


class ControllerMode(str, Enum):
    PROPOSED = "proposed"
    CONVENTIONAL = "conventional"


@dataclass(frozen=True)
class Gains:
    kp: float = 3.0
    kv: float = 1.0
    kR: float = 1.0
    komega: float = 1.0

    def __post_init__(self):
        for name in ("kp", "kv", "kR", "komega"):
            if not getattr(self, name) > 0:
                raise ValueError(f"gain {name} must be positive")


@dataclass(frozen=True)
class TrajectorySample:
    """Desired motion at one instant.

    ``p_d``, ``v_d`` and ``a_d`` are inertial; ``omega_d`` and
    ``omegadot_d`` are expressed in the desired body frame ``R_d``.
    """

    p_d: np.ndarray
    v_d: np.ndarray
    a_d: np.ndarray
    R_d: np.ndarray
    omega_d: np.ndarray
    omegadot_d: np.ndarray


@dataclass(frozen=True)
class ControlOutput:
    F_cmd: np.ndarray
    M_cmd: np.ndarray
    F_d: np.ndarray
    M_d: np.ndarray
    e_p: np.ndarray
    e_v: np.ndarray
    e_R: np.ndarray
    e_omega: np.ndarray


@dataclass
class ControllerState:
    """Differencing history for one controller instance.

    ``alpha`` overrides the vehicle's rotor time constant when set, which
    allows running a controller whose model of the rotors is mismatched.
    """

    mode: ControllerMode = ControllerMode.PROPOSED
    alpha: float | None = None
    difference_order: int = 1
    prev_F_d: list = field(default_factory=list, repr=False)
    prev_M_d: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        self.mode = ControllerMode(self.mode)
        if self.difference_order not in (1, 2):
            raise ValueError("difference_order must be 1 or 2")

    @property
    def has_history(self):
        return bool(self.prev_F_d) and bool(self.prev_M_d)

    def reset(self):
        self.prev_F_d = []
        self.prev_M_d = []


def desired_force(e_p, e_v, R, a_d, gains, m, g):
    """Body-frame force ``R^T (-kp e_p - kv e_v + m g e3 + m a_d)``."""
    inertial = -gains.kp * np.asarray(e_p) - gains.kv * np.asarray(e_v) + m * g * E3 + m * np.asarray(a_d)
    return R.T @ inertial


def backward_difference(current, history, dt, order=1):
    """Backward-difference rate of a sampled signal; ``history`` is newest first.

    Falls back to the lower order while the history is short and returns zero
    with no history at all.
    """
    if not history:
        return np.zeros_like(current)
    if order == 1 or len(history) < 2:
        return (current - history[0]) / dt
    return (3.0 * current - 4.0 * history[0] + history[1]) / (2.0 * dt)


def _feedforward(current, history, alpha, dt, state):
    rate = backward_difference(current, history, dt, state.difference_order)
    history.insert(0, current.copy())
    del history[state.difference_order :]
    if state.mode is ControllerMode.CONVENTIONAL:
        return current.copy()
    return current + alpha * rate


def commanded_force(F_d, controller_state, alpha, dt):
    """``F_d + alpha * dF_d/dt`` with a backward-difference derivative.

    The first call has no history and uses a zero derivative. Conventional
    mode returns ``F_d`` unchanged. Updates the stored history.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    F_d = np.asarray(F_d, dtype=float)
    return _feedforward(F_d, controller_state.prev_F_d, alpha, dt, controller_state)


def desired_moment(e_R, e_omega, omega, R, R_d, omega_d, omegadot_d, gains, J):
    """Geometric PD moment with gyroscopic and reference-transport feedforward."""
    omega = np.asarray(omega, dtype=float)
    RtRd = R.T @ R_d
    w_ref = RtRd @ omega_d
    wdot_ref = RtRd @ omegadot_d
    return (
        -gains.kR * np.asarray(e_R)
        - gains.komega * np.asarray(e_omega)
        + geo.cross3(omega, J @ omega)
        - J @ (geo.cross3(omega, w_ref) - wdot_ref)
    )


def commanded_moment(M_d, controller_state, alpha, dt):
    """Moment counterpart of :func:`commanded_force`."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    M_d = np.asarray(M_d, dtype=float)
    return _feedforward(M_d, controller_state.prev_M_d, alpha, dt, controller_state)


def tracking_errors(state, sample):
    """``(e_p, e_v, e_R, e_omega)`` for a rigid-body state against a sample."""
    e_p = state.p - sample.p_d
    e_v = state.v - sample.v_d
    e_R = geo.attitude_error(state.R, sample.R_d)
    e_omega = geo.angular_velocity_error(state.omega, state.R, sample.R_d, sample.omega_d)
    return e_p, e_v, e_R, e_omega


def desired_wrench(state, sample, gains, params):
    """Desired force and moment plus the four kinematic errors, without side effects."""
    e_p, e_v, e_R, e_omega = tracking_errors(state, sample)
    F_d = desired_force(e_p, e_v, state.R, sample.a_d, gains, params.m, params.g)
    M_d = desired_moment(e_R, e_omega, state.omega, state.R, sample.R_d, sample.omega_d, sample.omegadot_d, gains, params.J)
    return F_d, M_d, (e_p, e_v, e_R, e_omega)


def control_step(state, sample, gains, params, controller_state, dt):
    """Run one control update and advance the differencing history."""
    F_d, M_d, (e_p, e_v, e_R, e_omega) = desired_wrench(state, sample, gains, params)
    alpha = params.alpha if controller_state.alpha is None else controller_state.alpha
    F_cmd = commanded_force(F_d, controller_state, alpha, dt)
    M_cmd = commanded_moment(M_d, controller_state, alpha, dt)
    return ControlOutput(F_cmd, M_cmd, F_d, M_d, e_p, e_v, e_R, e_omega)


@dataclass(frozen=True)
class GainReport:
    """Outcome of checking the sufficient gain conditions for given ``c1, c2``."""

    c1: float
    c2: float
    kp_bound: float
    kv_min: float
    kR_bound: float
    komega_min: float
    translational_ok: bool
    rotational_ok: bool
    lambda_min: float

    @property
    def valid(self):
        return self.translational_ok and self.rotational_ok


def translational_gain_bound(kv, c1, m):
    """Lower bound on ``kp``; infinite when ``kv <= c1 + 1/4``."""
    denom = m * (4.0 * (kv - c1) - 1.0)
    if denom <= 0:
        return float("inf")
    return (c1 * kv**2 + 2.0 * c1 * kv - c1**2) / denom


def rotational_gain_bound(komega, c2, lambda_min):
    """Lower bound on ``kR``; infinite when ``komega <= c2 + 1/4``."""
    denom = lambda_min * (4.0 * (komega - c2) - 1.0)
    if denom <= 0:
        return float("inf")
    return c2 * komega**2 / denom


def validate_gains(gains, c1, c2, m, J):
    """Check the sufficient conditions relating gains and design constants.

    Raises
    ------
    NonPositiveConstant
        If ``c1`` or ``c2`` is not strictly positive.
    """
    if not (c1 > 0 and c2 > 0):
        raise NonPositiveConstant(f"design constants must be positive, got c1={c1}, c2={c2}")
    lam = float(np.linalg.eigvalsh(np.asarray(J, dtype=float)).min())
    kp_bound = translational_gain_bound(gains.kv, c1, m)
    kR_bound = rotational_gain_bound(gains.komega, c2, lam)
    trans = gains.kv > c1 + 0.25 and gains.kp > kp_bound
    rot = gains.komega > c2 + 0.25 and gains.kR > kR_bound
    return GainReport(c1, c2, kp_bound, c1 + 0.25, kR_bound, c2 + 0.25, bool(trans), bool(rot), lam)


def find_feasible_constants(gains, m, J, alpha=0.1, psi_bar=1.9, n_grid=400):
    """Search ``c1`` and ``c2`` that satisfy the gain conditions and certify decay.

    Each constant is scanned on a uniform grid over ``(0, k - 1/4)``. Among
    candidates whose certificate is valid and whose gain inequality holds,
    the one with the largest certified decay rate wins, ties going to the
    smaller constant. Returns ``None`` if either search comes up empty.
    """
    from .stability import build_rotational_certificate, build_translational_certificate

    J = np.asarray(J, dtype=float)
    lam = float(np.linalg.eigvalsh(J).min())

    def best(upper, is_ok, certify):
        if upper <= 0:
            return None
        chosen, rate = None, -np.inf
        for c in upper * np.arange(1, n_grid) / n_grid:
            if not is_ok(c):
                continue
            cert = certify(c)
            if cert.valid and cert.decay_rate > rate:
                chosen, rate = float(c), cert.decay_rate
        return chosen

    c1 = best(
        gains.kv - 0.25,
        lambda c: gains.kp > translational_gain_bound(gains.kv, c, m),
        lambda c: build_translational_certificate(gains.kp, gains.kv, c, m, alpha),
    )
    c2 = best(
        gains.komega - 0.25,
        lambda c: gains.kR > rotational_gain_bound(gains.komega, c, lam),
        lambda c: build_rotational_certificate(gains.kR, gains.komega, c, J, alpha, psi_bar),
    )
    if c1 is None or c2 is None:
        return None
    return c1, c2
