"""Acceptance criteria, one test each, at their stated tolerances.

Each test prints a ``criterion N: PASS|FAIL ...`` line, and the lines are
repeated together at the end of the pytest run. Running this file directly
prints them without pytest.
"""

import math
import time
from dataclasses import replace

import numpy as np
import pytest

from omnirotor import geometry as geo
from omnirotor.allocation import allocate, build_allocation, default_hex_config
from omnirotor.controller import Gains, find_feasible_constants, translational_gain_bound
from omnirotor.plant import RotorModel, VehicleParams
from omnirotor.sim import (
    ERROR_CHANNELS,
    InitialCondition,
    SimConfig,
    compare_controllers,
    fit_sinusoid,
    force_track_experiment,
    norms,
    run_scenario,
    step_response_experiment,
)
from omnirotor.stability import build_rotational_certificate, build_translational_certificate

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # run as a script
    ACCEPTANCE_LINES = []

pytestmark = pytest.mark.acceptance

GAINS = Gains(kp=3.0, kv=1.0, kR=1.0, komega=1.0)
J = np.diag([0.03, 0.03, 0.03])
_cache = {}


def report(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def circle_run():
    """Proposed controller, TD plant, circle tumble from p = 0, R = I with rotors at rest."""
    if "circle" not in _cache:
        cfg = SimConfig(init=InitialCondition(cold_start=True))
        t0 = time.perf_counter()
        trace, metrics = run_scenario(cfg, VehicleParams(alpha=0.1), GAINS)
        _cache["circle"] = (trace, metrics, time.perf_counter() - t0)
    return _cache["circle"]


def test_criterion_1_gain_feasibility():
    details, ok = [], True
    # the worked example: c1 = 0.1 gives a kp bound near 0.112
    bound = translational_gain_bound(1.0, 0.1, 1.0)
    ok &= abs(bound - 0.112) < 5e-4 and bound < 3.0
    for alpha in (0.07, 0.1):
        found = find_feasible_constants(GAINS, 1.0, J, alpha=alpha)
        if found is None:
            ok = False
            details.append(f"alpha={alpha}: none found")
            continue
        c1, c2 = found
        tc = build_translational_certificate(3.0, 1.0, c1, 1.0, alpha)
        rc = build_rotational_certificate(1.0, 1.0, c2, J, alpha, 1.9)
        eigs = {**tc.min_eigenvalues(), **rc.min_eigenvalues()}
        worst = min(eigs.values())
        ok &= worst > 1e-10
        details.append(f"alpha={alpha}: c1={c1:.5g} c2={c2:.5g} min eig={worst:.3g}")
    report(1, ok, f"kp bound at c1=0.1 is {bound:.4f}; " + "; ".join(details))


def test_criterion_2_force_and_moment_error_contraction():
    alpha = 0.1
    params = VehicleParams(alpha=alpha)
    init = InitialCondition(position_noise=0.5, velocity_noise=0.5, attitude_noise=0.5, rate_noise=0.5, rotor_noise=2.0)
    worst = {"e_F": 0.0, "e_M": 0.0}
    for seed in range(20):
        trace, _ = run_scenario(SimConfig(duration=3 * alpha + 0.002, init=init, seed=seed), params, GAINS)
        t = trace.t
        for ch in worst:
            e = norms(trace[ch])
            for k in (1, 2, 3):
                i = int(round(k * alpha / 1e-3))
                assert abs(t[i] - k * alpha) < 1e-12
                rel = (e[i] / e[0]) / math.exp(-t[i] / alpha) - 1.0
                worst[ch] = max(worst[ch], abs(rel))
    ok = worst["e_F"] <= 0.005 and worst["e_M"] <= 0.005
    report(2, ok, f"20 seeds, worst relative deviation from exp(-t/alpha): e_F {worst['e_F']:.2e}, e_M {worst['e_M']:.2e} (limit 5e-3)")


def test_criterion_3_circle_tumble_convergence():
    trace, metrics, runtime = circle_run()
    t = trace.t
    i1 = int(round(1.0 / 1e-3))
    late = t >= 8.0 - 1e-12
    failing = []
    for ch in ERROR_CHANNELS:
        e = norms(trace[ch])
        if not e[late].max() < e[i1]:
            failing.append(f"{ch} ({e[late].max():.3g} >= {e[i1]:.3g})")
    psi = trace["psi"]
    psi_ok = psi[t >= 1.0].max() < 2.0
    decay = metrics.decay
    ok = not failing and psi_ok and decay.envelope_ok and runtime <= 10.0
    detail = (
        f"channels {'all decreased' if not failing else 'not decreased: ' + ', '.join(failing)}; "
        f"max Psi after 1 s {psi[t >= 1.0].max():.3g}; beta={decay.beta:.4g}, envelope "
        f"{'held' if decay.envelope_ok else 'violated at ' + str(decay.first_envelope_violation)}; runtime {runtime:.1f} s"
    )
    report(3, ok, detail)


def test_criterion_4_proposed_beats_conventional():
    cfg = SimConfig(plant_model=RotorModel.DCMD)
    comparison, traces = compare_controllers(cfg, VehicleParams(alpha=0.1), GAINS)
    p, c = comparison.rms_window["proposed"], comparison.rms_window["conventional"]
    channels = ("e_p", "e_v", "e_R", "e_omega")
    better = all(p[k] < c[k] for k in channels)
    conv = traces["conventional"]
    sel = conv.t >= conv.t[-1] - 5.0 - 1e-12
    e_rx = conv["e_R"][sel, 0]
    signs = np.sign(e_rx[e_rx != 0])
    changes = int(np.count_nonzero(np.diff(signs)))
    ok = better and changes >= 3
    ratios = ", ".join(f"{k} {c[k] / p[k]:.3g}" for k in channels)
    report(4, ok, f"RMS conv/prop over final 5 s: {ratios}; conventional e_R_x sign changes {changes}")


def test_criterion_5_single_axis_force_tracking():
    alpha, nu, amp = 0.07, 4.0 * math.pi / 3.0, 16.0
    res = force_track_experiment(VehicleParams(alpha=alpha), GAINS, amplitude=amp, frequency=nu, duration=6.0)
    t = res.t
    after = t >= 0.35 - 1e-12
    err = float(np.abs(res.proposed - res.desired)[after].max())
    fit = t >= 1.5 - 1e-12
    a, phase = fit_sinusoid(t[fit], res.conventional[fit], nu)
    ratio, lag = a / amp, -phase
    ok = err < 0.32 and abs(ratio - 0.960) <= 0.01 and abs(lag - 0.286) <= 0.003
    report(
        5,
        ok,
        f"proposed max error after 0.35 s {err:.3g} N (< 0.32); conventional ratio {ratio:.4f} "
        f"(0.960 +- 0.01), lag {lag:.4f} rad (0.286 +- 0.003)",
    )


def test_criterion_6_step_response():
    res = step_response_experiment(alpha_f=0.07, alpha_m=0.1, dt=1e-3, duration=1.0)
    td_a = res.td[int(round(0.07 / 1e-3))]
    dc_a = res.dcmd[int(round(0.1 / 1e-3))]
    ok = abs(td_a - 0.632) <= 0.001 and dc_a < 0.632
    ok &= abs(res.td[-1] - 1.0) <= 1e-4 and abs(res.dcmd[-1] - 1.0) <= 1e-4
    report(
        6,
        ok,
        f"TD at alpha_f {td_a:.5f}, DCMD at alpha_m {dc_a:.5f}; at 1 s TD {res.td[-1]:.6f}, DCMD {res.dcmd[-1]:.6f}",
    )


def test_criterion_7_geometry_properties():
    rng = np.random.default_rng(2024)
    n = 10_000
    psi_hi = 1.99
    bad_range = bad_lower = bad_upper = 0
    for _ in range(n):
        R = geo.exp_so3(rng.normal(size=3) * 2.0)
        Rd = geo.exp_so3(rng.normal(size=3) * 2.0)
        p = geo.psi(R, Rd)
        e2 = float(np.sum(geo.attitude_error(R, Rd) ** 2))
        bad_range += not (0.0 <= p <= 2.0)
        bad_lower += not (0.5 * e2 <= p + 1e-12)
        if p <= psi_hi:
            bad_upper += not (p <= e2 / (2.0 - psi_hi) + 1e-12)
    dt = 1e-5
    worst = 0.0
    for _ in range(1000):
        R0, Rd0 = geo.exp_so3(rng.normal(size=3)), geo.exp_so3(rng.normal(size=3))
        w, wd = rng.normal(size=3), rng.normal(size=3)
        t = rng.uniform(0, 2)

        def path(s):
            return R0 @ geo.exp_so3(w, s), Rd0 @ geo.exp_so3(wd, s)

        Rp, Rdp = path(t + dt)
        Rm, Rdm = path(t - dt)
        fd = (geo.psi(Rp, Rdp) - geo.psi(Rm, Rdm)) / (2 * dt)
        R, Rd = path(t)
        exact = geo.attitude_error(R, Rd) @ geo.angular_velocity_error(w, R, Rd, wd)
        worst = max(worst, abs(fd - exact))
    ok = bad_range == 0 and bad_lower == 0 and bad_upper == 0 and worst <= 10 * dt
    report(
        7,
        ok,
        f"{n} pairs: range/lower/upper violations {bad_range}/{bad_lower}/{bad_upper}; "
        f"worst |dPsi/dt - e_R.e_w| {worst:.2e} (limit {10 * dt:.0e})",
    )


def test_criterion_8_allocation():
    alloc = build_allocation(default_hex_config())
    rank = int(np.linalg.matrix_rank(alloc.A))
    rng = np.random.default_rng(8)
    worst = 0.0
    for _ in range(1000):
        w = rng.normal(size=6) * np.array([10, 10, 10, 1, 1, 1])
        f = allocate(w, alloc)
        worst = max(worst, float(np.max(np.abs(alloc.A @ f - w))) / (1.0 + np.linalg.norm(w)))
    params = VehicleParams()
    grav_fail, peak = 0, 0.0
    for _ in range(1000):
        d = rng.normal(size=3)
        d /= np.linalg.norm(d)
        w = np.concatenate([params.m * params.g * d, np.zeros(3)])
        try:
            f = allocate(w, alloc)
        except ValueError:
            grav_fail += 1
            continue
        peak = max(peak, float(np.abs(f).max()))
        grav_fail += not (np.max(np.abs(alloc.A @ f - w)) <= 1e-9 * (1 + np.linalg.norm(w)) and np.abs(f).max() <= params.f_max)
    ok = rank == 6 and worst <= 1e-9 and grav_fail == 0
    report(
        8,
        ok,
        f"rank {rank}, cond {alloc.condition_number:.3g}; worst scaled residual {worst:.2e}; "
        f"gravity cancellation failures {grav_fail}/1000 (peak rotor thrust {peak:.2f} N)",
    )


def _residuals(trace, dt=1e-3, m=1.0, kp=3.0, kv=1.0, kR=1.0, kw=1.0):
    Rs = trace.rotations()
    e_p, e_v, e_F = trace["e_p"], trace["e_v"], trace["e_F"]
    e_R, e_w, e_M = trace["e_R"], trace["e_omega"], trace["e_M"]
    dev = (e_v[2:] - e_v[:-2]) / (2 * dt)
    dew = (e_w[2:] - e_w[:-2]) / (2 * dt)
    inner = slice(1, -1)
    r_trans = m * dev + kp * e_p[inner] + kv * e_v[inner] - np.einsum("nij,nj->ni", Rs[inner], e_F[inner])
    r_rot = dew @ J.T + kR * e_R[inner] + kw * e_w[inner] - e_M[inner]
    return float(norms(r_trans).max()), float(norms(r_rot).max())


def test_criterion_9_error_dynamics_residuals():
    trace, _, _ = circle_run()
    init = InitialCondition(position_noise=0.5, velocity_noise=0.5, attitude_noise=1.0, rate_noise=1.0, rotor_noise=2.0)
    perturbed, _ = run_scenario(SimConfig(duration=3.0, init=init, seed=11), VehicleParams(alpha=0.1), GAINS)
    worst_t, worst_r = (max(v) for v in zip(_residuals(trace), _residuals(perturbed)))
    ok = worst_t <= 1e-3 and worst_r <= 1e-3
    report(9, ok, f"circle and perturbed runs, max residual norm translational {worst_t:.2e}, rotational {worst_r:.2e} (limit 1e-3)")


if __name__ == "__main__":
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                pass
