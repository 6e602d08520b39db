"""Geometric tracking control of an omnidirectional multirotor with first-order rotor dynamics."""

from .allocation import AllocationMatrix, RotorGeometry, allocate, build_allocation, default_hex_config
from .controller import ControllerMode, ControllerState, Gains, control_step, find_feasible_constants, validate_gains
from .errors import (
    ConfigParse,
    DegenerateInput,
    DimensionMismatch,
    GainInfeasible,
    InfeasibleForUnidirectional,
    NonPositiveConstant,
    NonSkewInput,
    NumericalDivergence,
    OmniRotorError,
    RankDeficient,
    SingularMatrix,
)
from .plant import RigidBodyState, RotorModel, VehicleParams
from .sim import InitialCondition, SimConfig, compare_controllers, force_track_experiment, run_scenario, step_response_experiment
from .trajectory import TrajectorySpec

__version__ = "0.1.0"
