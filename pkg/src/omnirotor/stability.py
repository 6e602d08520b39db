"""Lyapunov certificates for the closed-loop tracking errors.

The translational function

    V1 = kp/2 |e_p|^2 + m/2 |e_v|^2 + alpha/2 |e_F|^2 + c1 e_p.e_v

and the rotational function

    V2 = 1/2 e_w.J e_w + kR Psi + alpha/2 |e_M|^2 + c2 e_R.e_w

are sandwiched between quadratic forms in the error norms
``z1 = [|e_p|, |e_v|, |e_F|]`` and ``z2 = [|e_R|, |e_w|, |e_M|]``, and their
derivatives are bounded by ``-z^T W z``. When all six matrices are positive
definite, ``V = V1 + V2`` decays at least as fast as ``exp(-beta t)`` with
``beta = min(lambda_min(W) / lambda_max(M_upper))``. That rate is a derived
quantity, not one quoted anywhere else.
"""

from dataclasses import dataclass, field

import numpy as np

PD_EPS = 1e-12


def is_positive_definite(M, eps=PD_EPS):
    M = np.asarray(M, dtype=float)
    sym = 0.5 * (M + M.T)
    return bool(np.linalg.eigvalsh(sym).min() > eps)


def _lambda_min(M):
    return float(np.linalg.eigvalsh(0.5 * (M + M.T)).min())


def _lambda_max(M):
    return float(np.linalg.eigvalsh(0.5 * (M + M.T)).max())


@dataclass(frozen=True)
class TranslationalCertificate:
    c1: float
    M11: np.ndarray
    M12: np.ndarray
    W1: np.ndarray
    valid: bool
    decay_rate: float

    def min_eigenvalues(self):
        return {"M11": _lambda_min(self.M11), "M12": _lambda_min(self.M12), "W1": _lambda_min(self.W1)}


@dataclass(frozen=True)
class RotationalCertificate:
    c2: float
    psi_bar: float
    M21: np.ndarray
    M22: np.ndarray
    W2: np.ndarray
    valid: bool
    decay_rate: float

    def min_eigenvalues(self):
        return {"M21": _lambda_min(self.M21), "M22": _lambda_min(self.M22), "W2": _lambda_min(self.W2)}


def v1(e_p, e_v, e_F, kp, m, alpha, c1):
    e_p, e_v, e_F = (np.asarray(a, dtype=float) for a in (e_p, e_v, e_F))
    return float(0.5 * kp * e_p @ e_p + 0.5 * m * e_v @ e_v + 0.5 * alpha * e_F @ e_F + c1 * e_p @ e_v)


def v2(e_R, e_omega, e_M, psi_value, kR, J, alpha, c2):
    e_R, e_omega, e_M = (np.asarray(a, dtype=float) for a in (e_R, e_omega, e_M))
    J = np.asarray(J, dtype=float)
    return float(0.5 * e_omega @ J @ e_omega + kR * psi_value + 0.5 * alpha * e_M @ e_M + c2 * e_R @ e_omega)


def build_translational_certificate(kp, kv, c1, m, alpha):
    M11 = 0.5 * np.array([[kp, -c1, 0.0], [-c1, m, 0.0], [0.0, 0.0, alpha]])
    M12 = 0.5 * np.array([[kp, c1, 0.0], [c1, m, 0.0], [0.0, 0.0, alpha]])
    W1 = np.array(
        [
            [c1 * kp / m, -c1 * kv / (2 * m), -c1 / (2 * m)],
            [-c1 * kv / (2 * m), kv - c1, -0.5],
            [-c1 / (2 * m), -0.5, 1.0],
        ]
    )
    valid = is_positive_definite(M11) and is_positive_definite(M12) and is_positive_definite(W1)
    rate = _lambda_min(W1) / _lambda_max(M12) if valid else 0.0
    return TranslationalCertificate(c1, M11, M12, W1, valid, rate)


def build_rotational_certificate(kR, komega, c2, J, alpha, psi_bar):
    """Rotational bound matrices for ``Psi <= psi_bar < 2``.

    The cross terms of ``W2`` all carry a minus sign and the ``J^-1`` factors
    use whichever eigenvalue of ``J`` makes the bound hold for any inertia.
    """
    if not psi_bar < 2.0:
        raise ValueError("psi_bar must be strictly below 2")
    J = np.asarray(J, dtype=float)
    eig = np.linalg.eigvalsh(J)
    lam_m, lam_M = float(eig.min()), float(eig.max())
    M21 = 0.5 * np.array([[kR, -c2, 0.0], [-c2, lam_m, 0.0], [0.0, 0.0, alpha]])
    M22 = 0.5 * np.array([[2.0 * kR / (2.0 - psi_bar), c2, 0.0], [c2, lam_M, 0.0], [0.0, 0.0, alpha]])
    W2 = np.array(
        [
            [c2 * kR / lam_M, -c2 * komega / (2 * lam_m), -c2 / (2 * lam_m)],
            [-c2 * komega / (2 * lam_m), komega - c2, -0.5],
            [-c2 / (2 * lam_m), -0.5, 1.0],
        ]
    )
    valid = is_positive_definite(M21) and is_positive_definite(M22) and is_positive_definite(W2)
    rate = _lambda_min(W2) / _lambda_max(M22) if valid else 0.0
    return RotationalCertificate(c2, psi_bar, M21, M22, W2, valid, rate)


def default_psi_bar(psi0):
    """Region-of-attraction level used for the rotational certificate."""
    return min(max(psi0, 1.9), np.nextafter(2.0, 0.0))


@dataclass
class LyapunovTrace:
    t: np.ndarray
    V1: np.ndarray
    V2: np.ndarray
    z1: np.ndarray
    z2: np.ndarray
    psi: np.ndarray = field(default=None)

    @property
    def V(self):
        return self.V1 + self.V2


@dataclass(frozen=True)
class DecayReport:
    beta: float
    monotone_ok: bool
    envelope_ok: bool
    first_monotone_violation: float | None
    first_envelope_violation: float | None
    max_envelope_ratio: float
    sandwich_ok: bool

    @property
    def ok(self):
        return self.monotone_ok and self.envelope_ok

    def lines(self):
        def when(t):
            return "none" if t is None else f"t = {t:.6g} s"

        return [
            f"certified decay rate beta = {self.beta:.6g} 1/s (derived from the certificate matrices)",
            f"V non-increasing: {'yes' if self.monotone_ok else 'no'} (first violation: {when(self.first_monotone_violation)})",
            f"V(t) <= 1.05 V(0) exp(-beta t): {'yes' if self.envelope_ok else 'no'} "
            f"(max ratio {self.max_envelope_ratio:.6g}, first violation: {when(self.first_envelope_violation)})",
            f"quadratic sandwich bounds hold: {'yes' if self.sandwich_ok else 'no'}",
        ]


def sandwich_violations(trace, trans, rot, rtol=1e-9):
    """Boolean mask of samples where a quadratic sandwich bound fails.

    Rotational bounds are only checked where ``Psi <= psi_bar``.
    """
    z1, z2 = trace.z1, trace.z2
    lo1 = np.einsum("ni,ij,nj->n", z1, trans.M11, z1)
    hi1 = np.einsum("ni,ij,nj->n", z1, trans.M12, z1)
    lo2 = np.einsum("ni,ij,nj->n", z2, rot.M21, z2)
    hi2 = np.einsum("ni,ij,nj->n", z2, rot.M22, z2)
    tol1 = rtol * (1.0 + np.abs(trace.V1))
    tol2 = rtol * (1.0 + np.abs(trace.V2))
    bad = (trace.V1 < lo1 - tol1) | (trace.V1 > hi1 + tol1)
    rot_bad = (trace.V2 < lo2 - tol2) | (trace.V2 > hi2 + tol2)
    if trace.psi is not None:
        rot_bad &= trace.psi <= rot.psi_bar
    return bad | rot_bad


def verify_decay(trace, trans, rot, envelope_slack=1.05, rel_tol=1e-6, step_slack=1e-2):
    """Check a simulated Lyapunov trace against the certified exponential decay.

    Two checks are made:

    * ``V`` never rises by more than ``rel_tol * max(V)`` plus
      ``step_slack`` times the largest single-step change (a proxy for
      ``dt * |dV/dt|``), absorbing discretisation effects;
    * ``V(t) <= envelope_slack * V(0) * exp(-beta t)``.
    """
    t = np.asarray(trace.t, dtype=float)
    V = np.asarray(trace.V, dtype=float)
    if t.size == 0:
        raise ValueError("trace is empty")
    beta = min(trans.decay_rate, rot.decay_rate)
    dV = np.diff(V)
    vmax = float(np.max(np.abs(V))) if V.size else 0.0
    step_scale = float(np.max(np.abs(dV))) if dV.size else 0.0
    rise_tol = rel_tol * vmax + step_slack * step_scale
    rises = np.nonzero(dV > rise_tol)[0]
    first_rise = float(t[rises[0] + 1]) if rises.size else None

    envelope = envelope_slack * V[0] * np.exp(-beta * (t - t[0]))
    floor = 1e-12 * max(vmax, 1e-300)
    over = np.nonzero(V > envelope + floor)[0]
    first_over = float(t[over[0]]) if over.size else None
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(envelope > 0, V / (envelope / envelope_slack), np.inf)
    sandwich_ok = not bool(np.any(sandwich_violations(trace, trans, rot)))
    return DecayReport(
        beta=float(beta),
        monotone_ok=rises.size == 0,
        envelope_ok=over.size == 0,
        first_monotone_violation=first_rise,
        first_envelope_violation=first_over,
        max_envelope_ratio=float(np.max(ratio)),
        sandwich_ok=sandwich_ok,
    )


def vdot_bound(z1, z2, trans, rot):
    """Upper bound ``-z1^T W1 z1 - z2^T W2 z2`` on the Lyapunov derivative, per sample."""
    z1 = np.atleast_2d(z1)
    z2 = np.atleast_2d(z2)
    return -np.einsum("ni,ij,nj->n", z1, trans.W1, z1) - np.einsum("ni,ij,nj->n", z2, rot.W2, z2)
