"""Flat ``section.key = value`` run configuration.

Lines look like ``vehicle.mass = 1.0`` or ``rotor.3.axis = 0, 0, 1``. Blank
lines and ``#`` comments are ignored. Unknown keys are rejected so that a
typo never silently falls back to a default. Every run echoes its effective
configuration (defaults filled in) in the same format, so the echo can be
fed back in to reproduce the run.
"""

import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .allocation import RotorGeometry, default_hex_config
from .controller import ControllerMode, Gains
from .errors import ConfigParse
from .geometry import exp_so3
from .plant import RotorModel, VehicleParams
from .sim import InitialCondition, SimConfig
from .trajectory import TrajectorySpec

_ROTOR_KEY = re.compile(r"^rotor\.(\d+)\.(position|axis|spin)$")


def _float(s):
    return float(s)


def _vec3(s):
    parts = [float(x) for x in s.split(",")]
    if len(parts) != 3:
        raise ValueError(f"expected three comma-separated numbers, got {s!r}")
    return tuple(parts)


def _bool(s):
    low = s.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {s!r}")


def _opt_float(s):
    return None if s.strip().lower() in ("", "none", "auto") else float(s)


def _int(s):
    v = float(s)
    if v != int(v):
        raise ValueError(f"expected an integer, got {s!r}")
    return int(v)


def _inertia(s):
    vals = [float(x) for x in s.split(",")]
    if len(vals) == 3:
        return tuple(vals)
    if len(vals) == 9:
        return tuple(vals)
    raise ValueError("inertia takes 3 diagonal entries or 9 row-major entries")


def _text(s):
    return s.strip()


# key -> (parser, default); defaults are the bundled scenario
SCHEMA = {
    "vehicle.mass": (_float, 1.0),
    "vehicle.gravity": (_float, 9.81),
    "vehicle.inertia": (_inertia, (0.03, 0.03, 0.03)),
    "vehicle.alpha": (_float, 0.1),
    "vehicle.mu": (_float, 2.5e-6),
    "vehicle.f_max": (_float, 10.0),
    "geometry.arm_length": (_float, 0.15),
    "geometry.torque_per_thrust": (_float, 0.15),
    "geometry.elevation_deg": (_float, 30.0),
    "geometry.tilt_deg": (_float, math.degrees(math.atan(math.sqrt(2.0)))),
    "geometry.bidirectional": (_bool, True),
    "gains.kp": (_float, 3.0),
    "gains.kv": (_float, 1.0),
    "gains.kR": (_float, 1.0),
    "gains.komega": (_float, 1.0),
    "constants.c1": (_opt_float, None),
    "constants.c2": (_opt_float, None),
    "sim.dt": (_float, 1e-3),
    "sim.duration": (_float, 10.0),
    "sim.plant_model": (_text, "TD"),
    "sim.controller_mode": (_text, "proposed"),
    "sim.seed": (_int, 0),
    "sim.control_decimation": (_int, 1),
    "sim.controller_alpha": (_opt_float, None),
    "sim.command_hold": (_text, "foh"),
    "sim.difference_order": (_int, 2),
    "sim.prime_history": (_bool, True),
    "sim.force": (_bool, False),
    "trajectory.variant": (_text, "circle_tumble"),
    "trajectory.radius": (_float, 1.0),
    "trajectory.height": (_float, 1.0),
    "trajectory.position_rate": (_float, 1.0),
    "trajectory.attitude_rate": (_float, 1.0),
    "trajectory.amplitude": (_float, 16.0),
    "trajectory.frequency": (_float, 4.0 * math.pi / 3.0),
    "trajectory.step_axis": (_vec3, (1.0, 0.0, 0.0)),
    "trajectory.step_angle": (_float, 0.5),
    "init.position": (_vec3, (0.0, 0.0, 0.0)),
    "init.attitude": (_vec3, (0.0, 0.0, 0.0)),
    "init.position_noise": (_float, 0.0),
    "init.velocity_noise": (_float, 0.0),
    "init.attitude_noise": (_float, 0.0),
    "init.rate_noise": (_float, 0.0),
    "init.rotor_noise": (_float, 0.0),
    "init.cold_start": (_bool, False),
    "output.path": (_text, "trace.csv"),
}


def parse_text(text, source="<config>"):
    """Split config text into a ``{key: raw value}`` dict.

    Raises
    ------
    ConfigParse
        On malformed lines, duplicate keys or unknown keys.
    """
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigParse(f"{source}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in raw:
            raise ConfigParse(f"{source}:{lineno}: duplicate key {key!r}")
        if key not in SCHEMA and not _ROTOR_KEY.match(key):
            raise ConfigParse(f"{source}:{lineno}: unknown key {key!r}")
        raw[key] = value
    return raw


@dataclass(frozen=True)
class RunConfig:
    """Everything one command needs: vehicle, gains, simulation settings, output path."""

    params: VehicleParams = field(default_factory=VehicleParams)
    gains: Gains = field(default_factory=Gains)
    sim: SimConfig = field(default_factory=SimConfig)
    out: str = "trace.csv"
    values: dict = field(default_factory=dict, repr=False)

    def echo_lines(self):
        """Effective configuration in the input format, one key per line."""
        return [f"{k} = {_format(v)}" for k, v in self.values.items()]

    def with_overrides(self, **overrides):
        """Rebuild with selected keys replaced, e.g. ``{"sim.dt": 2e-3}``."""
        values = dict(self.values)
        for k, v in overrides.items():
            if k not in values:
                raise ConfigParse(f"unknown key {k!r}")
            values[k] = v
        return build(values)


def _format(v):
    if v is None:
        return "auto"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ", ".join(_format(float(x)) for x in v)
    return str(v)


def _geometry(values, rotors):
    if not rotors:
        return default_hex_config(
            arm_length=values["geometry.arm_length"],
            torque_per_thrust=values["geometry.torque_per_thrust"],
            elevation_deg=values["geometry.elevation_deg"],
            tilt=math.radians(values["geometry.tilt_deg"]),
        )
    ids = sorted(rotors)
    if ids != list(range(1, len(ids) + 1)):
        raise ConfigParse(f"rotor blocks must be numbered 1..n without gaps, got {ids}")
    positions, axes, spin = [], [], []
    for i in ids:
        block = rotors[i]
        missing = {"position", "axis", "spin"} - block.keys()
        if missing:
            raise ConfigParse(f"rotor {i} is missing {', '.join(sorted(missing))}")
        positions.append(block["position"])
        axis = np.array(block["axis"])
        norm = np.linalg.norm(axis)
        if norm == 0:
            raise ConfigParse(f"rotor {i} has a zero axis")
        axes.append(axis / norm)
        spin.append(block["spin"])
    return RotorGeometry(
        positions=np.array(positions),
        axes=np.array(axes),
        spin=np.array(spin, dtype=float),
        bidirectional=values["geometry.bidirectional"],
        torque_per_thrust=values["geometry.torque_per_thrust"],
    )


def build(values):
    """Construct a :class:`RunConfig` from parsed key values (defaults for absent keys).

    Raises
    ------
    ConfigParse
        If any value fails to parse or the resulting objects fail validation.
    """
    full, rotors = {}, {}
    for key, (parse, default) in SCHEMA.items():
        full[key] = default
    for key, value in values.items():
        m = _ROTOR_KEY.match(key)
        try:
            if m:
                idx, attr = int(m.group(1)), m.group(2)
                parsed = float(value) if attr == "spin" else _vec3(value) if isinstance(value, str) else tuple(value)
                rotors.setdefault(idx, {})[attr] = parsed
                full[key] = parsed
            else:
                parse = SCHEMA[key][0]
                full[key] = parse(value) if isinstance(value, str) else value
        except (ValueError, TypeError) as exc:
            raise ConfigParse(f"bad value for {key!r}: {exc}") from None
        except KeyError:
            raise ConfigParse(f"unknown key {key!r}") from None

    try:
        inertia = full["vehicle.inertia"]
        J = np.diag(inertia) if len(inertia) == 3 else np.array(inertia).reshape(3, 3)
        geometry = _geometry(full, rotors)
        params = VehicleParams(
            m=full["vehicle.mass"],
            g=full["vehicle.gravity"],
            J=J,
            alpha=full["vehicle.alpha"],
            geometry=geometry,
            mu=full["vehicle.mu"],
            f_max=full["vehicle.f_max"],
        )
        gains = Gains(full["gains.kp"], full["gains.kv"], full["gains.kR"], full["gains.komega"])
        spec = TrajectorySpec(
            variant=full["trajectory.variant"],
            radius=full["trajectory.radius"],
            height=full["trajectory.height"],
            position_rate=full["trajectory.position_rate"],
            attitude_rate=full["trajectory.attitude_rate"],
            amplitude=full["trajectory.amplitude"],
            frequency=full["trajectory.frequency"],
            step_axis=full["trajectory.step_axis"],
            step_angle=full["trajectory.step_angle"],
        )
        init = InitialCondition(
            p=full["init.position"],
            R=tuple(exp_so3(np.array(full["init.attitude"])).ravel()),
            position_noise=full["init.position_noise"],
            velocity_noise=full["init.velocity_noise"],
            attitude_noise=full["init.attitude_noise"],
            rate_noise=full["init.rate_noise"],
            rotor_noise=full["init.rotor_noise"],
            cold_start=full["init.cold_start"],
        )
        sim = SimConfig(
            dt=full["sim.dt"],
            duration=full["sim.duration"],
            plant_model=RotorModel(full["sim.plant_model"].upper()),
            controller_mode=ControllerMode(full["sim.controller_mode"].lower()),
            trajectory=spec,
            seed=full["sim.seed"],
            control_decimation=full["sim.control_decimation"],
            controller_alpha=full["sim.controller_alpha"],
            init=init,
            c1=full["constants.c1"],
            c2=full["constants.c2"],
            force=full["sim.force"],
            command_hold=full["sim.command_hold"],
            difference_order=full["sim.difference_order"],
            prime_history=full["sim.prime_history"],
        )
    except ValueError as exc:
        raise ConfigParse(str(exc)) from None
    if not rotors:
        full = {k: v for k, v in full.items() if not _ROTOR_KEY.match(k)}
    return RunConfig(params=params, gains=gains, sim=sim, out=full["output.path"], values=full)


def load(path):
    """Read and build a config file.

    Raises
    ------
    ConfigParse
        If the file cannot be read or its contents are invalid.
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigParse(f"cannot read config {path}: {exc.strerror or exc}") from None
    return build(parse_text(text, str(path)))


def loads(text):
    return build(parse_text(text))


def bundled(name="circle_tumble.cfg"):
    """Path of a config file shipped with the package."""
    return Path(__file__).with_name("data") / name


def default_run():
    return build({})
