"""Reference trajectories for the simulated experiments."""

import math
from dataclasses import dataclass

import numpy as np

from .controller import TrajectorySample
from .geometry import exp_so3, rot_x

VARIANTS = ("circle_tumble", "force_sine", "hover", "step_attitude")


@dataclass(frozen=True)
class TrajectorySpec:
    """Reference selection and its parameters.

    ``position_rate`` is the angular speed of the position circle. Only the
    attitude rate is pinned down for the tumbling experiment, so the circle
    defaults to the same 1 rad/s, counterclockwise seen from above.
    """

    variant: str = "circle_tumble"
    radius: float = 1.0
    height: float = 1.0
    position_rate: float = 1.0
    attitude_rate: float = 1.0
    amplitude: float = 16.0
    frequency: float = 4.0 * math.pi / 3.0
    step_axis: tuple = (1.0, 0.0, 0.0)
    step_angle: float = 0.5

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown trajectory variant {self.variant!r}; choose from {', '.join(VARIANTS)}")
        if self.variant == "circle_tumble" and not (self.radius > 0 and self.position_rate > 0 and self.attitude_rate > 0):
            raise ValueError("circle_tumble needs positive radius and rates")
        if self.variant == "force_sine" and not (self.amplitude > 0 and self.frequency > 0):
            raise ValueError("force_sine needs positive amplitude and frequency")
        if self.variant == "step_attitude" and np.linalg.norm(self.step_axis) == 0:
            raise ValueError("step_attitude needs a nonzero axis")


def circle_tumble(t, spec):
    """Counterclockwise horizontal circle while tumbling about inertial x."""
    if t < 0:
        raise ValueError("t must be non-negative")
    r, w, h, wa = spec.radius, spec.position_rate, spec.height, spec.attitude_rate
    c, s = math.cos(w * t), math.sin(w * t)
    return TrajectorySample(
        p_d=np.array([r * c, r * s, h]),
        v_d=np.array([-r * w * s, r * w * c, 0.0]),
        a_d=np.array([-r * w * w * c, -r * w * w * s, 0.0]),
        R_d=rot_x(wa * t),
        # body x of rot_x(.) coincides with inertial x, so the body rate is constant
        omega_d=np.array([wa, 0.0, 0.0]),
        omegadot_d=np.zeros(3),
    )


def force_sine(t, spec):
    """Desired body-z force ``A sin(nu t)`` and its analytic rate."""
    if t < 0:
        raise ValueError("t must be non-negative")
    A, nu = spec.amplitude, spec.frequency
    return A * math.sin(nu * t), A * nu * math.cos(nu * t)


def hover(t, spec):
    return TrajectorySample(
        p_d=np.array([0.0, 0.0, spec.height]),
        v_d=np.zeros(3),
        a_d=np.zeros(3),
        R_d=np.eye(3),
        omega_d=np.zeros(3),
        omegadot_d=np.zeros(3),
    )


def step_attitude(t, spec):
    """Hold position at ``height`` with the attitude stepped by ``step_angle`` about ``step_axis``."""
    axis = np.asarray(spec.step_axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    sample = hover(t, spec)
    return TrajectorySample(sample.p_d, sample.v_d, sample.a_d, exp_so3(axis * spec.step_angle), sample.omega_d, sample.omegadot_d)


def sampler(spec):
    """Function ``t -> TrajectorySample`` for pose-tracking variants.

    ``force_sine`` holds the vehicle at the origin with identity attitude.
    """
    if spec.variant == "circle_tumble":
        return lambda t: circle_tumble(t, spec)
    if spec.variant == "step_attitude":
        return lambda t: step_attitude(t, spec)
    if spec.variant == "hover":
        return lambda t: hover(t, spec)
    return lambda t: TrajectorySample(np.zeros(3), np.zeros(3), np.zeros(3), np.eye(3), np.zeros(3), np.zeros(3))
