"""Closed-loop scenarios: runner, metrics and the two rotor/force experiments."""

import logging
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import geometry as geo
from .allocation import allocate
from .controller import (
    ControllerMode,
    ControllerState,
    commanded_force,
    commanded_moment,
    desired_wrench,
    find_feasible_constants,
    validate_gains,
)
from .errors import GainInfeasible, NumericalDivergence
from .integrator import StateBundle, rk4_step
from .plant import RigidBodyState, RotorModel, aero_thrust, flat_derivative, rotor_command, thrust_to_speed
from .stability import (
    LyapunovTrace,
    build_rotational_certificate,
    build_translational_certificate,
    default_psi_bar,
    verify_decay,
)
from .trace import TraceLog, write_csv
from .trajectory import TrajectorySpec, force_sine, sampler

log = logging.getLogger(__name__)

DIVERGENCE_LIMIT = 1e6
ERROR_CHANNELS = ("e_p", "e_v", "e_R", "e_omega", "e_F", "e_M")


@dataclass(frozen=True)
class InitialCondition:
    """Initial pose plus optional seeded perturbations.

    With ``cold_start`` the rotors start at rest; otherwise they start at the
    allocation of the initial desired wrench. ``rotor_noise`` adds a uniform
    perturbation in newtons on top of that.
    """

    p: tuple = (0.0, 0.0, 0.0)
    R: tuple | None = None
    position_noise: float = 0.0
    velocity_noise: float = 0.0
    attitude_noise: float = 0.0
    rate_noise: float = 0.0
    rotor_noise: float = 0.0
    cold_start: bool = False


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-3
    duration: float = 10.0
    plant_model: RotorModel = RotorModel.TD
    controller_mode: ControllerMode = ControllerMode.PROPOSED
    trajectory: TrajectorySpec = field(default_factory=TrajectorySpec)
    seed: int = 0
    control_decimation: int = 1
    controller_alpha: float | None = None
    init: InitialCondition = field(default_factory=InitialCondition)
    c1: float | None = None
    c2: float | None = None
    force: bool = False
    command_hold: str = "foh"
    difference_order: int = 2
    prime_history: bool = True

    def __post_init__(self):
        object.__setattr__(self, "plant_model", RotorModel(self.plant_model))
        object.__setattr__(self, "controller_mode", ControllerMode(self.controller_mode))
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.duration >= self.dt:
            raise ValueError("duration must be at least one step")
        if self.command_hold not in ("zoh", "foh"):
            raise ValueError("command_hold must be 'zoh' or 'foh'")
        if int(self.control_decimation) != self.control_decimation or self.control_decimation < 1:
            raise ValueError("control_decimation must be an integer >= 1")

    @property
    def n_steps(self):
        return int(round(self.duration / self.dt))


@dataclass(frozen=True)
class ChannelStats:
    rms: float
    max: float
    rms_tail: float
    max_tail: float
    final: float
    settling_time: float | None


@dataclass
class Metrics:
    channels: dict
    psi_max: float
    psi_max_after_transient: float
    max_abs_thrust: float
    thrust_limit_exceeded: bool
    gain_report: object = None
    translational: object = None
    rotational: object = None
    decay: object = None

    def summary_lines(self):
        lines = ["channel      rms          max          rms(last20%)  max(last20%)  final        settle[s]"]
        for name, s in self.channels.items():
            settle = "-" if s.settling_time is None else f"{s.settling_time:.4g}"
            lines.append(
                f"{name:<12} {s.rms:<12.5g} {s.max:<12.5g} {s.rms_tail:<13.5g} {s.max_tail:<13.5g} {s.final:<12.5g} {settle}"
            )
        lines.append(f"max Psi: {self.psi_max:.6g} (after 1 s: {self.psi_max_after_transient:.6g})")
        lines.append(f"max |rotor thrust|: {self.max_abs_thrust:.6g} N (limit exceeded: {'yes' if self.thrust_limit_exceeded else 'no'})")
        return lines


def norms(block):
    return np.linalg.norm(block, axis=1)


def channel_stats(t, values, tail_fraction=0.2, settle_fraction=0.05):
    """Summary statistics of a non-negative error-norm series."""
    values = np.asarray(values, dtype=float)
    tail = t >= t[0] + (1.0 - tail_fraction) * (t[-1] - t[0])
    peak = float(values.max()) if values.size else 0.0
    settled = None
    if peak > 0:
        above = np.nonzero(values > settle_fraction * peak)[0]
        if above.size == 0:
            settled = float(t[0])
        elif above[-1] + 1 < values.size:
            settled = float(t[above[-1] + 1])
    return ChannelStats(
        rms=float(np.sqrt(np.mean(values**2))),
        max=peak,
        rms_tail=float(np.sqrt(np.mean(values[tail] ** 2))),
        max_tail=float(values[tail].max()),
        final=float(values[-1]),
        settling_time=settled,
    )


def compute_metrics(trace, params, transient=1.0):
    t = trace.t
    channels = {name: channel_stats(t, norms(trace[name])) for name in ERROR_CHANNELS}
    psi = trace["psi"]
    late = t >= t[0] + transient
    if trace.meta.get("plant_model") == RotorModel.DCMD.value:
        thrust = aero_thrust(trace["rotor"], params.mu)
    else:
        thrust = trace["rotor"]
    max_thrust = float(np.max(np.abs(thrust)))
    return Metrics(
        channels=channels,
        psi_max=float(psi.max()),
        psi_max_after_transient=float(psi[late].max()) if np.any(late) else float("nan"),
        max_abs_thrust=max_thrust,
        thrust_limit_exceeded=max_thrust > params.f_max,
    )


def lyapunov_trace(trace):
    e = {k: trace[k] for k in ERROR_CHANNELS}
    return LyapunovTrace(
        t=trace.t,
        V1=trace["V1"],
        V2=trace["V2"],
        z1=np.column_stack([norms(e["e_p"]), norms(e["e_v"]), norms(e["e_F"])]),
        z2=np.column_stack([norms(e["e_R"]), norms(e["e_omega"]), norms(e["e_M"])]),
        psi=trace["psi"],
    )


def _initial_state(init, rng):
    p = np.array(init.p, dtype=float) + rng.uniform(-1, 1, 3) * init.position_noise
    v = rng.uniform(-1, 1, 3) * init.velocity_noise
    R = np.eye(3) if init.R is None else np.array(init.R, dtype=float).reshape(3, 3)
    if init.attitude_noise > 0:
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        R = R @ geo.exp_so3(axis * rng.uniform(0, init.attitude_noise))
    omega = rng.uniform(-1, 1, 3) * init.rate_noise
    return RigidBodyState(p, v, geo.renormalize(R), omega)


def resolve_constants(config, params, gains, psi0):
    """Design constants for the certificates, searched for when not configured."""
    psi_bar = default_psi_bar(psi0)
    alpha = config.controller_alpha or params.alpha
    if config.c1 is not None and config.c2 is not None:
        return config.c1, config.c2, psi_bar
    found = find_feasible_constants(gains, params.m, params.J, alpha=alpha, psi_bar=psi_bar)
    if found is None:
        return None, None, psi_bar
    c1 = config.c1 if config.c1 is not None else found[0]
    c2 = config.c2 if config.c2 is not None else found[1]
    return c1, c2, psi_bar


def prime_history(ctrl, bundle, desired, params, model, dt, bench=False):
    """Seed the differencing history as if the controller had already been running.

    The desired wrench one control period ahead is predicted from a forward
    Euler step of the current state; the history is filled by extrapolating
    that slope backwards. Without this the first command carries no rate
    feedforward, which leaves a lasting relative offset of order
    ``dt * komega / lambda_min(J)`` in the moment error.
    """
    x0, R0 = bundle.x, bundle.R
    F0, M0, _ = desired(0.0, RigidBodyState(x0[0:3], x0[3:6], R0, x0[6:9]))
    if bench:
        F1, M1, _ = desired(dt, None)
    else:
        xdot = flat_derivative(R0, x0, x0[9:], params, model)
        x1 = x0 + dt * xdot
        R1 = R0 @ geo.exp_so3(x0[6:9], dt)
        F1, M1, _ = desired(dt, RigidBodyState(x1[0:3], x1[3:6], R1, x1[6:9]))
    order = ctrl.difference_order
    ctrl.prev_F_d = [F0 - (j + 1) * (F1 - F0) for j in range(order)]
    ctrl.prev_M_d = [M0 - (j + 1) * (M1 - M0) for j in range(order)]


def run_scenario(config, params, gains):
    """Integrate the closed loop and return ``(TraceLog, Metrics)``.

    The controller runs every ``control_decimation`` steps and its rotor
    command is held constant in between. For ``force_sine`` the vehicle is
    clamped to a test bench: the body does not move and the desired force is
    the sinusoid along body z.

    Raises
    ------
    GainInfeasible
        If no design constants certify the gains and ``config.force`` is unset.
    NumericalDivergence
        If any state norm exceeds ``1e6``; the partial trace is attached.
    """
    rng = np.random.default_rng(config.seed)
    spec = config.trajectory
    bench = spec.variant == "force_sine"
    reference = sampler(spec)
    model = config.plant_model
    mode = config.controller_mode
    dt = config.dt
    dt_ctrl = dt * config.control_decimation
    n = params.n_rotors
    A = params.allocation.A
    alpha_ctrl = config.controller_alpha or params.alpha
    kp, kR, m, J = gains.kp, gains.kR, params.m, params.J

    state = RigidBodyState.at_rest() if bench else _initial_state(config.init, rng)
    psi0 = geo.psi(state.R, reference(0.0).R_d)
    c1, c2, psi_bar = resolve_constants(config, params, gains, psi0)
    report = validate_gains(gains, c1, c2, m, J) if c1 is not None else None
    if report is None or not report.valid:
        msg = "gains are not certified by any design constants" if report is None else (
            f"gain conditions fail for c1={c1:.4g}, c2={c2:.4g}"
        )
        if not config.force:
            raise GainInfeasible(msg)
        log.warning("%s; continuing because force is set", msg)
        c1 = c1 if c1 is not None else 0.0
        c2 = c2 if c2 is not None else 0.0
    trans = build_translational_certificate(gains.kp, gains.kv, c1, m, alpha_ctrl) if c1 > 0 else None
    rot = build_rotational_certificate(gains.kR, gains.komega, c2, J, alpha_ctrl, psi_bar) if c2 > 0 else None

    def desired(t, st):
        if bench:
            fz, _ = force_sine(t, spec)
            zero = np.zeros(3)
            return np.array([0.0, 0.0, fz]), zero.copy(), (zero, zero, zero, zero)
        return desired_wrench(st, reference(t), gains, params)

    F_d0, M_d0, _ = desired(0.0, state)
    f0 = np.zeros(n) if config.init.cold_start else allocate(np.concatenate([F_d0, M_d0]), params.allocation)
    if config.init.rotor_noise > 0:
        f0 = f0 + rng.uniform(-1, 1, n) * config.init.rotor_noise
    rotors0 = f0 if model is RotorModel.TD else thrust_to_speed(f0, params.mu)

    bundle = StateBundle(state.R.copy(), np.concatenate([state.p, state.v, state.omega, rotors0]))
    ctrl = ControllerState(mode=mode, alpha=alpha_ctrl, difference_order=config.difference_order)
    foh = config.command_hold == "foh"
    if config.prime_history:
        prime_history(ctrl, bundle, desired, params, model, dt_ctrl, bench)

    steps = config.n_steps
    trace = TraceLog(
        n,
        "N" if model is RotorModel.TD else "rad/s",
        steps + 1,
        meta={
            "plant_model": model.value,
            "controller_mode": mode.value,
            "c1": c1,
            "c2": c2,
            "psi_bar": psi_bar,
            "dt": dt,
        },
    )
    L = trace.layout
    f_hold = f_slope = None
    t_hold = 0.0

    def deriv(t, R, x):
        if foh:
            rotor_cmd = rotor_command(f_hold + (t - t_hold) * f_slope, model, params.mu)
        else:
            rotor_cmd = rotor_command(f_hold, model, params.mu)
        out = flat_derivative(R, x, rotor_cmd, params, model)
        if bench:
            out[:9] = 0.0
        return out

    for k in range(steps + 1):
        t = k * dt
        R, x = bundle.R, bundle.x
        st = RigidBodyState(x[0:3], x[3:6], R, x[6:9])
        sample = None if bench else reference(t)
        if bench:
            F_d, M_d, (e_p, e_v, e_R, e_w) = desired(t, st)
        else:
            F_d, M_d, (e_p, e_v, e_R, e_w) = desired_wrench(st, sample, gains, params)
        if k % config.control_decimation == 0:
            F_cmd = commanded_force(F_d, ctrl, alpha_ctrl, dt_ctrl)
            M_cmd = commanded_moment(M_d, ctrl, alpha_ctrl, dt_ctrl)
            f_cmd = allocate(np.concatenate([F_cmd, M_cmd]), params.allocation)
            f_slope = np.zeros(n) if f_hold is None else (f_cmd - f_hold) / dt_ctrl
            f_hold, t_hold = f_cmd, t
        rot_vals = x[9:]
        thrust = rot_vals if model is RotorModel.TD else params.mu * rot_vals * np.abs(rot_vals)
        wrench = A @ thrust
        e_F = wrench[:3] - F_d
        e_M = wrench[3:] - M_d
        if bench:
            psi_val = 0.0
        else:
            psi_val = geo.psi(R, sample.R_d)
        V1 = 0.5 * kp * e_p @ e_p + 0.5 * m * e_v @ e_v + 0.5 * alpha_ctrl * e_F @ e_F + c1 * e_p @ e_v
        V2 = 0.5 * e_w @ J @ e_w + kR * psi_val + 0.5 * alpha_ctrl * e_M @ e_M + c2 * e_R @ e_w

        row = trace.new_row()
        row[L["t"]] = t
        row[L["p"]] = x[0:3]
        row[L["v"]] = x[3:6]
        row[L["R"]] = R.ravel()
        row[L["omega"]] = x[6:9]
        row[L["rotor"]] = rot_vals
        row[L["e_p"]] = e_p
        row[L["e_v"]] = e_v
        row[L["e_R"]] = e_R
        row[L["e_omega"]] = e_w
        row[L["e_F"]] = e_F
        row[L["e_M"]] = e_M
        row[L["F"]] = wrench[:3]
        row[L["M"]] = wrench[3:]
        row[L["F_cmd"]] = F_cmd
        row[L["M_cmd"]] = M_cmd
        row[L["F_d"]] = F_d
        row[L["M_d"]] = M_d
        row[L["V1"]] = V1
        row[L["V2"]] = V2
        row[L["V"]] = V1 + V2
        row[L["psi"]] = psi_val
        trace.append(row)

        if not np.all(np.isfinite(x)) or max(np.linalg.norm(x[0:3]), np.linalg.norm(x[3:6]), np.linalg.norm(x[6:9]), np.linalg.norm(x[9:])) > DIVERGENCE_LIMIT:
            trace.freeze()
            raise NumericalDivergence(f"state norm exceeded {DIVERGENCE_LIMIT:g} at t = {t:.6g} s", trace)
        if k == steps:
            break
        bundle = rk4_step(bundle, deriv, dt, t)

    trace.freeze()
    metrics = compute_metrics(trace, params)
    metrics.gain_report = report
    metrics.translational = trans
    metrics.rotational = rot
    if trans is not None and rot is not None and not bench:
        metrics.decay = verify_decay(lyapunov_trace(trace), trans, rot)
    return trace, metrics


@dataclass
class StepResponse:
    """Normalised thrust after a unit thrust-command step through both rotor models."""

    t: np.ndarray
    td: np.ndarray
    dcmd: np.ndarray
    dcmd_speed: np.ndarray
    alpha_f: float
    alpha_m: float

    header = ("t[s]", "td_thrust[-]", "dcmd_thrust[-]", "dcmd_speed[-]")

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            write_csv(fh, self.header, np.column_stack([self.t, self.td, self.dcmd, self.dcmd_speed]))


def step_response_experiment(alpha_f=0.07, alpha_m=0.1, dt=1e-3, duration=1.0, f_cmd=10.0, mu=2.5e-6):
    """Integrate one rotor of each model after the thrust command steps from 0 to ``f_cmd``."""
    if not (alpha_f > 0 and alpha_m > 0 and dt > 0 and duration > 0 and f_cmd > 0):
        raise ValueError("all step-response parameters must be positive")
    steps = int(round(duration / dt))
    w_cmd = float(thrust_to_speed(f_cmd, mu))
    x = np.zeros(2)  # [TD thrust, DCMD speed]

    def f(t, x):
        return np.array([(f_cmd - x[0]) / alpha_f, (w_cmd - x[1]) / alpha_m])

    out = np.empty((steps + 1, 2))
    out[0] = x
    for k in range(steps):
        t = k * dt
        k1 = f(t, x)
        k2 = f(t + dt / 2, x + dt / 2 * k1)
        k3 = f(t + dt / 2, x + dt / 2 * k2)
        k4 = f(t + dt, x + dt * k3)
        x = x + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        out[k + 1] = x
    t = np.arange(steps + 1) * dt
    return StepResponse(
        t=t,
        td=out[:, 0] / f_cmd,
        dcmd=aero_thrust(out[:, 1], mu) / f_cmd,
        dcmd_speed=out[:, 1] / w_cmd,
        alpha_f=alpha_f,
        alpha_m=alpha_m,
    )


@dataclass
class ForceTrackResult:
    t: np.ndarray
    desired: np.ndarray
    proposed: np.ndarray
    conventional: np.ndarray

    header = ("t[s]", "Fz_desired[N]", "Fz_proposed[N]", "Fz_conventional[N]")

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            write_csv(fh, self.header, np.column_stack([self.t, self.desired, self.proposed, self.conventional]))


def force_track_experiment(params, gains, amplitude=16.0, frequency=4.0 * math.pi / 3.0, dt=1e-3, duration=6.0, plant_model=RotorModel.TD, modes=("proposed", "conventional")):
    """Bench test: body-z force tracking of ``amplitude * sin(frequency * t)`` in each mode."""
    spec = TrajectorySpec(variant="force_sine", amplitude=amplitude, frequency=frequency)
    out = {}
    for mode in modes:
        cfg = SimConfig(dt=dt, duration=duration, plant_model=plant_model, controller_mode=mode, trajectory=spec, force=True)
        trace, _ = run_scenario(cfg, params, gains)
        out[ControllerMode(mode).value] = trace
    t = next(iter(out.values())).t
    desired = amplitude * np.sin(frequency * t)
    nan = np.full_like(t, np.nan)
    return ForceTrackResult(
        t=t,
        desired=desired,
        proposed=out["proposed"]["F"][:, 2] if "proposed" in out else nan,
        conventional=out["conventional"]["F"][:, 2] if "conventional" in out else nan,
    )


def fit_sinusoid(t, y, frequency):
    """Least-squares amplitude and phase of ``y ~ a sin(nu t + phi) + c``."""
    X = np.column_stack([np.sin(frequency * t), np.cos(frequency * t), np.ones_like(t)])
    (s, c, _), *_ = np.linalg.lstsq(X, y, rcond=None)
    return math.hypot(s, c), math.atan2(c, s)


@dataclass
class Comparison:
    proposed: Metrics
    conventional: Metrics
    window: float
    rms_window: dict

    def ratios(self):
        """Conventional-over-proposed RMS ratio per channel over the final window."""
        p, c = self.rms_window["proposed"], self.rms_window["conventional"]
        return {k: (c[k] / p[k] if p[k] > 0 else float("inf")) for k in ERROR_CHANNELS}

    def table_lines(self):
        p, c = self.rms_window["proposed"], self.rms_window["conventional"]
        r = self.ratios()
        lines = [f"RMS over final {self.window:g} s", "channel      proposed       conventional   ratio(conv/prop)"]
        for k in ERROR_CHANNELS:
            lines.append(f"{k:<12} {p[k]:<14.6g} {c[k]:<14.6g} {r[k]:.4g}")
        return lines


def window_rms(trace, window):
    t = trace.t
    sel = t >= t[-1] - window - 1e-12
    return {k: float(np.sqrt(np.mean(norms(trace[k][sel]) ** 2))) for k in ERROR_CHANNELS}


def compare_controllers(config, params, gains, window=5.0):
    """Run the proposed and the conventional controller on the same configuration."""
    traces, metrics = {}, {}
    for mode in (ControllerMode.PROPOSED, ControllerMode.CONVENTIONAL):
        tr, mt = run_scenario(replace(config, controller_mode=mode), params, gains)
        traces[mode.value], metrics[mode.value] = tr, mt
    rms = {k: window_rms(v, window) for k, v in traces.items()}
    return Comparison(metrics["proposed"], metrics["conventional"], window, rms), traces


def config_dict(config):
    d = asdict(config)
    d["plant_model"] = config.plant_model.value
    d["controller_mode"] = config.controller_mode.value
    return d
