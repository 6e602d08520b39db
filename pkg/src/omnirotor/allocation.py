"""Rotor geometry and the thrust-to-wrench allocation map.

Column ``i`` of the allocation matrix is the body wrench produced by one
newton of thrust on rotor ``i``::

    [ z_i ; l_i x z_i + sigma_i * (kappa / mu) * z_i ]

so that ``[F; M] = A @ f`` for the vector of rotor thrusts ``f``.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleForUnidirectional, RankDeficient, SingularMatrix

DEFAULT_MAX_CONDITION = 1e3

# Tilt that makes the six thrust axes pairwise orthogonal across opposite arms.
_CUBE_TILT = math.atan(math.sqrt(2.0))


@dataclass(frozen=True)
class RotorGeometry:
    """Fixed-tilt rotor layout in the body frame.

    Attributes
    ----------
    positions : (n, 3) array
        Rotor hub positions relative to the centre of mass, metres.
    axes : (n, 3) array
        Unit thrust axes.
    spin : (n,) array
        Reaction-torque signs, each +1 or -1.
    bidirectional : bool
        Whether rotors can reverse and produce negative thrust.
    torque_per_thrust : float
        Drag-to-lift coefficient ratio kappa / mu, metres.
    arm_length : float or None
        If given, every ``||positions[i]||`` must equal it.
    """

    positions: np.ndarray
    axes: np.ndarray
    spin: np.ndarray
    bidirectional: bool = True
    torque_per_thrust: float = 0.15
    arm_length: float | None = None

    def __post_init__(self):
        pos = np.atleast_2d(np.asarray(self.positions, dtype=float))
        axes = np.atleast_2d(np.asarray(self.axes, dtype=float))
        spin = np.asarray(self.spin, dtype=float).ravel()
        n = pos.shape[0]
        if pos.shape != (n, 3) or axes.shape != (n, 3) or spin.shape != (n,):
            raise ValueError("positions, axes and spin must describe the same number of rotors")
        min_rotors = 6 if self.bidirectional else 7
        if n < min_rotors:
            kind = "bidirectional" if self.bidirectional else "unidirectional"
            raise ValueError(f"{kind} omnidirectional layouts need at least {min_rotors} rotors, got {n}")
        if not (np.all(np.isfinite(pos)) and np.all(np.isfinite(axes))):
            raise ValueError("geometry contains non-finite values")
        norms = np.linalg.norm(axes, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-9):
            raise ValueError("rotor axes must be unit vectors")
        if not np.all(np.isin(spin, (-1.0, 1.0))):
            raise ValueError("spin signs must be +1 or -1")
        if self.arm_length is not None:
            if np.any(np.abs(np.linalg.norm(pos, axis=1) - self.arm_length) > 1e-9):
                raise ValueError("rotor positions do not match the configured arm length")
        for name, value in (("positions", pos), ("axes", axes), ("spin", spin)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @property
    def n(self):
        return self.positions.shape[0]


@dataclass(frozen=True)
class AllocationMatrix:
    A: np.ndarray
    condition_number: float
    bidirectional: bool = True
    inverse: np.ndarray = field(repr=False, default=None)

    @property
    def n(self):
        return self.A.shape[1]


def allocation_columns(geometry):
    """Raw 6 x n matrix built from the rotor geometry, without rank checks."""
    z = geometry.axes
    moment = np.cross(geometry.positions, z) + (geometry.spin * geometry.torque_per_thrust)[:, None] * z
    return np.vstack([z.T, moment.T])


def build_allocation(geometry, max_condition=DEFAULT_MAX_CONDITION):
    """Build and certify the allocation matrix for ``geometry``.

    Raises
    ------
    RankDeficient
        If the layout cannot span every body wrench or is conditioned worse
        than ``max_condition``.
    """
    A = allocation_columns(geometry)
    sv = np.linalg.svd(A, compute_uv=False)
    rank = int(np.sum(sv > sv[0] * max(A.shape) * np.finfo(float).eps))
    if rank < 6:
        raise RankDeficient(f"allocation matrix has rank {rank} < 6; geometry is not omnidirectional")
    cond = float(sv[0] / sv[-1])
    if not cond <= max_condition:
        raise RankDeficient(f"allocation matrix condition number {cond:.3g} exceeds {max_condition:.3g}")
    inverse = np.linalg.inv(A) if A.shape[1] == 6 else np.linalg.pinv(A)
    A.setflags(write=False)
    inverse.setflags(write=False)
    return AllocationMatrix(A=A, condition_number=cond, bidirectional=geometry.bidirectional, inverse=inverse)


def allocate(w_cmd, alloc):
    """Rotor thrusts producing the body wrench ``w_cmd = [F; M]``.

    Square layouts use the exact inverse; larger ones the minimum-norm
    pseudo-inverse solution.
    """
    w = np.asarray(w_cmd, dtype=float)
    if w.shape != (6,):
        raise ValueError("wrench must be a 6-vector [F; M]")
    inv = alloc.inverse
    if inv is None:
        try:
            inv = np.linalg.inv(alloc.A) if alloc.n == 6 else np.linalg.pinv(alloc.A)
        except np.linalg.LinAlgError as exc:
            raise SingularMatrix(str(exc)) from exc
    f = inv @ w
    residual = np.max(np.abs(alloc.A @ f - w))
    if not residual <= 1e-9 * (1.0 + np.linalg.norm(w)):
        raise SingularMatrix(f"allocation residual {residual:.3e} too large")
    if not alloc.bidirectional and np.any(f < -1e-12):
        raise InfeasibleForUnidirectional(f"negative thrust required: min f = {f.min():.4g} N")
    return f


def default_hex_config(arm_length=0.15, torque_per_thrust=0.15, elevation_deg=30.0, tilt=_CUBE_TILT):
    """Six bidirectional fixed-tilt rotors with three-fold symmetry about body z.

    Arms sit 60 degrees apart, alternately raised and lowered by
    ``elevation_deg``. Each thrust axis leans away from body z by ``tilt``
    (radians) towards the tangential direction, all in the same sense, and
    the spin sign alternates around the hub. The common lean keeps opposite
    rotors from sharing an axis, so thrust errors on one pair do not cancel
    in the moment.
    """
    if not arm_length > 0:
        raise ValueError("arm_length must be positive")
    elev = math.radians(elevation_deg)
    positions, axes, spin = [], [], []
    for i in range(6):
        az = math.radians(60.0 * i)
        s = 1.0 if i % 2 == 0 else -1.0
        e = s * elev
        positions.append(arm_length * np.array([math.cos(az) * math.cos(e), math.sin(az) * math.cos(e), math.sin(e)]))
        tangent = np.array([-math.sin(az), math.cos(az), 0.0])
        axes.append(math.cos(tilt) * np.array([0.0, 0.0, 1.0]) + math.sin(tilt) * tangent)
        spin.append(s)
    return RotorGeometry(
        positions=np.array(positions),
        axes=np.array(axes),
        spin=np.array(spin),
        bidirectional=True,
        torque_per_thrust=torque_per_thrust,
        arm_length=arm_length,
    )
