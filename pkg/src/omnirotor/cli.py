"""Command-line entry point.

Commands::

    omnirotor simulate      --config FILE [--out CSV] [--mode M] [--dt S] [--duration S] [--seed N] [--force]
    omnirotor check-gains   --config FILE
    omnirotor step-response [--alpha-f S] [--alpha-m S] [--out CSV]
    omnirotor force-track   [--amplitude N] [--frequency RAD_S] [--mode M|both] [--alpha S] [--out CSV]
    omnirotor compare       --config FILE [--out CSV] [--dt S] [--duration S] [--seed N] [--force]

Exit codes: 0 success, 2 configuration error, 3 infeasible gains, 4 divergence.
"""

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import config as cfg
from . import geometry as geo
from .controller import ControllerMode, validate_gains
from .errors import ConfigParse, GainInfeasible, NumericalDivergence
from .plant import VehicleParams
from .sim import (
    compare_controllers,
    fit_sinusoid,
    force_track_experiment,
    resolve_constants,
    run_scenario,
    step_response_experiment,
)
from .stability import build_rotational_certificate, build_translational_certificate
from .trajectory import sampler

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_DIVERGED = 4

log = logging.getLogger("omnirotor")


def _load(args):
    run = cfg.load(args.config) if args.config else cfg.default_run()
    overrides = {}
    if getattr(args, "mode", None):
        overrides["sim.controller_mode"] = args.mode
    for flag, key in (("dt", "sim.dt"), ("duration", "sim.duration"), ("seed", "sim.seed"), ("out", "output.path")):
        value = getattr(args, flag, None)
        if value is not None:
            overrides[key] = value
    if getattr(args, "force", False):
        overrides["sim.force"] = True
    return run.with_overrides(**overrides) if overrides else run


def _initial_psi(run):
    R0 = np.array(run.sim.init.R, dtype=float).reshape(3, 3) if run.sim.init.R is not None else np.eye(3)
    return geo.psi(R0, sampler(run.sim.trajectory)(0.0).R_d)


def certificate_lines(gains, params, c1, c2, alpha, psi_bar):
    """Human-readable report of the gain conditions and certificate matrices."""
    lines = []
    if c1 is None or c2 is None or not (c1 > 0 and c2 > 0):
        lines.append("feasible: no (no positive c1, c2 certify these gains)")
        return lines
    report = validate_gains(gains, c1, c2, params.m, params.J)
    trans = build_translational_certificate(gains.kp, gains.kv, c1, params.m, alpha)
    rot = build_rotational_certificate(gains.kR, gains.komega, c2, params.J, alpha, psi_bar)
    ok = report.valid and trans.valid and rot.valid
    lines.append(f"feasible: {'yes' if ok else 'no'}")
    lines.append(f"c1 = {c1:.10g}, c2 = {c2:.10g}, psi_bar = {psi_bar:.10g}, alpha = {alpha:.10g}")
    lines.append(
        f"translational: kv > {report.kv_min:.6g} ({gains.kv:g}), kp > {report.kp_bound:.6g} ({gains.kp:g}) -> "
        f"{'ok' if report.translational_ok else 'FAIL'}"
    )
    lines.append(
        f"rotational: komega > {report.komega_min:.6g} ({gains.komega:g}), kR > {report.kR_bound:.6g} ({gains.kR:g}) -> "
        f"{'ok' if report.rotational_ok else 'FAIL'}"
    )
    for name, val in {**trans.min_eigenvalues(), **rot.min_eigenvalues()}.items():
        lines.append(f"lambda_min({name}) = {val:.6g}")
    lines.append(f"certified decay rate: translational {trans.decay_rate:.6g} 1/s, rotational {rot.decay_rate:.6g} 1/s")
    lines.append("claim: almost-global exponential stability, valid while Psi < psi_bar < 2")
    return lines


def _summary_path(out):
    p = Path(out)
    return p.with_name(p.stem + "_summary.txt")


def _write_summary(path, sections):
    text = []
    for title, lines in sections:
        text.append(f"[{title}]")
        text.extend(lines)
        text.append("")
    Path(path).write_text("\n".join(text))
    return "\n".join(text)


def cmd_simulate(args):
    run = _load(args)
    try:
        trace, metrics = run_scenario(run.sim, run.params, run.gains)
    except NumericalDivergence as exc:
        if exc.trace is not None:
            exc.trace.to_csv(run.out)
        log.error("diverged: %s (partial trace in %s)", exc, run.out)
        return EXIT_DIVERGED
    trace.to_csv(run.out)
    alpha = run.sim.controller_alpha or run.params.alpha
    cert = certificate_lines(run.gains, run.params, trace.meta["c1"], trace.meta["c2"], alpha, trace.meta["psi_bar"])
    sections = [("metrics", metrics.summary_lines()), ("certificate", cert)]
    if metrics.decay is not None:
        sections.append(("decay", metrics.decay.lines()))
    sections.append(("config", run.echo_lines()))
    text = _write_summary(_summary_path(run.out), sections)
    print(text)
    print(f"trace: {run.out} ({len(trace)} rows, {len(trace.header)} columns)")
    return EXIT_OK


def cmd_check_gains(args):
    run = _load(args)
    alpha = run.sim.controller_alpha or run.params.alpha
    c1, c2, psi_bar = resolve_constants(run.sim, run.params, run.gains, _initial_psi(run))
    lines = certificate_lines(run.gains, run.params, c1, c2, alpha, psi_bar)
    print("\n".join(lines))
    return EXIT_OK if lines[0] == "feasible: yes" else EXIT_INFEASIBLE


def cmd_step_response(args):
    res = step_response_experiment(alpha_f=args.alpha_f, alpha_m=args.alpha_m)
    out = args.out or "step_response.csv"
    res.to_csv(out)
    i_f = int(round(args.alpha_f / 1e-3))
    i_m = int(round(args.alpha_m / 1e-3))
    print(f"TD thrust at t = alpha_f: {res.td[i_f]:.6f} of steady state")
    print(f"DCMD thrust at t = alpha_m: {res.dcmd[i_m]:.6f} of steady state")
    print(f"at t = {res.t[-1]:g} s: TD {res.td[-1]:.6f}, DCMD {res.dcmd[-1]:.6f}")
    print(f"curves: {out}")
    return EXIT_OK


def cmd_force_track(args):
    params = VehicleParams(alpha=args.alpha)
    modes = ("proposed", "conventional") if args.mode in (None, "both") else (args.mode,)
    run = cfg.default_run()
    res = force_track_experiment(params, run.gains, amplitude=args.amplitude, frequency=args.frequency, modes=modes)
    out = args.out or "force_track.csv"
    res.to_csv(out)
    t = res.t
    late = t >= 5.0 * args.alpha
    if "proposed" in modes:
        err = np.abs(res.proposed - res.desired)[late].max()
        print(f"proposed: max |F_z - F_z,d| after {5 * args.alpha:g} s = {err:.6g} N")
    if "conventional" in modes:
        amp, phase = fit_sinusoid(t[late], res.conventional[late], args.frequency)
        print(f"conventional: amplitude ratio {amp / args.amplitude:.6f}, phase lag {-phase:.6f} rad")
    print(f"curves: {out}")
    return EXIT_OK


def cmd_compare(args):
    run = _load(args)
    try:
        comparison, traces = compare_controllers(run.sim, run.params, run.gains)
    except NumericalDivergence as exc:
        log.error("diverged: %s", exc)
        return EXIT_DIVERGED
    stem = Path(run.out)
    for mode, trace in traces.items():
        trace.to_csv(stem.with_name(f"{stem.stem}_{mode}.csv"))
    lines = comparison.table_lines()
    text = _write_summary(
        _summary_path(stem.with_name(stem.stem + "_compare.csv")),
        [
            ("comparison", lines),
            ("proposed", comparison.proposed.summary_lines()),
            ("conventional", comparison.conventional.summary_lines()),
            ("config", run.echo_lines()),
        ],
    )
    print(text)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="omnirotor", description="Omnidirectional multirotor tracking simulator.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def run_flags(p, mode=True):
        p.add_argument("--config", help="config file (defaults to the bundled circle-tumble scenario)")
        p.add_argument("--out", help="trace CSV path (overrides output.path)")
        if mode:
            p.add_argument("--mode", choices=[m.value for m in ControllerMode])
        p.add_argument("--dt", type=float)
        p.add_argument("--duration", type=float)
        p.add_argument("--seed", type=int)
        p.add_argument("--force", action="store_true", help="run even if the gains are not certified")

    run_flags(sub.add_parser("simulate", help="run one closed-loop scenario"))
    p = sub.add_parser("check-gains", help="report the gain conditions and stability certificate")
    p.add_argument("--config")
    run_flags(sub.add_parser("compare", help="proposed versus conventional on the same scenario"), mode=False)

    p = sub.add_parser("step-response", help="normalised thrust step of both rotor models")
    p.add_argument("--alpha-f", type=float, default=0.07)
    p.add_argument("--alpha-m", type=float, default=0.1)
    p.add_argument("--out")

    p = sub.add_parser("force-track", help="single-axis force tracking on a fixed bench")
    p.add_argument("--amplitude", type=float, default=16.0)
    p.add_argument("--frequency", type=float, default=4.0 * np.pi / 3.0)
    p.add_argument("--mode", choices=["proposed", "conventional", "both"], default="both")
    p.add_argument("--alpha", type=float, default=0.07)
    p.add_argument("--out")
    return parser


COMMANDS = {
    "simulate": cmd_simulate,
    "check-gains": cmd_check_gains,
    "step-response": cmd_step_response,
    "force-track": cmd_force_track,
    "compare": cmd_compare,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigParse as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except GainInfeasible as exc:
        log.error("infeasible gains: %s (use --force to run anyway)", exc)
        return EXIT_INFEASIBLE
    except ValueError as exc:
        log.error("invalid input: %s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
