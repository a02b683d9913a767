"""Second-moment stability and strict passivity certification.

Two independent routes are kept deliberately separate:

* the LMI route poses the coupled Lyapunov / passivity inequalities and
  certifies feasibility through the solver plus eigenvalue verification;
* the second-moment-spectral (SMS) oracle computes the spectral radius
  of the mode-averaged Kronecker operator, which characterizes
  second-moment stability exactly and never touches the LMI machinery.

Strict passivity with dissipation eta is certified through the averaged
dissipation form

    M(P) = [ sum_m a_m A_m' P A_m - P          sum_m a_m A_m' P B - C~' ]
           [ (.)'                     B' P B + 2 eta I - D' - D         ]

required negative definite over a single P > 0, where C~ averages the
per-mode output matrices (the gain term picks up the both-links-arrive
probability). The same quadratic form equals the per-step dissipation
defect along any simulated path, which ``dissipation_identity_check``
exploits as an exact algebraic test.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import lmi
from .errors import AssumptionViolated, VerificationFailed
from .model import (
    MODES,
    ClosedLoopFamily,
    Gain,
    ModeDistribution,
    Plant,
    Schedule,
    closed_loop,
    full_packet_schedule,
)
from .numerics import (
    DEFAULT_MARGIN,
    DefinitenessMargin,
    is_pos_definite,
    kron,
    spectral_radius,
    sym_eigvals,
)

__all__ = [
    "SmsReport",
    "StabilityCertificate",
    "PassivityCertificate",
    "sms_oracle",
    "stability_lmi",
    "passivity_lmi",
    "max_dissipation",
    "dissipation_upper_bound",
    "dissipation_form_matrix",
    "dissipation_identity_check",
    "averaged_output_matrix",
    "expanded_passivity_block",
    "check_assumption",
]

BORDERLINE_BAND = 0.02


@dataclass(frozen=True)
class SmsReport:
    """Spectral radius of the second-moment operator; stable iff rho < 1."""

    rho: float
    stable: bool
    borderline: bool


def sms_oracle(family, dist: ModeDistribution) -> SmsReport:
    """Second-moment stability by spectral radius, no LMIs involved.

    ``family`` is one :class:`ClosedLoopFamily` (N = 1) or a sequence of
    them covering one period. The per-step operator is the mode-averaged
    Kronecker square sum_m a_m kron(A_m, A_m); for a period the operators
    compose, and rho is the per-step geometric mean of the product's
    spectral radius.
    """
    families = [family] if isinstance(family, ClosedLoopFamily) else list(family)
    if not families:
        raise ValueError("need at least one closed-loop family")
    n = families[0].a(0, 0).shape[0]
    product = np.eye(n * n)
    for fam in families:
        op = np.zeros((n * n, n * n))
        for (i, j), p in dist.items():
            if p == 0.0:
                continue
            a = fam.a(i, j)
            op += p * kron(a, a)
        product = op @ product
    rho = spectral_radius(product) ** (1.0 / len(families))
    return SmsReport(rho=rho, stable=rho < 1.0, borderline=abs(rho - 1.0) < BORDERLINE_BAND)


@dataclass(frozen=True)
class StabilityCertificate:
    """N-periodic positive definite P_k verifying the coupled Lyapunov LMIs."""

    ps: tuple[np.ndarray, ...]
    margin: DefinitenessMargin
    report: lmi.VerifyReport

    feasible = True

    @property
    def p(self) -> np.ndarray:
        return self.ps[0]


def stability_lmi(
    plant: Plant,
    gain: Gain,
    schedule: Schedule,
    dist: ModeDistribution,
    margin: DefinitenessMargin | None = None,
    options: lmi.SolveOptions | None = None,
):
    """Certify second-moment stability via the coupled periodic Lyapunov LMIs.

    Poses, for every slot k of the period,

        sum_m a_m A_{k,m}' P_{k+1 mod N} A_{k,m} - P_k < 0,   P_k > 0,

    and solves for the N symmetric variables. Returns a verified
    :class:`StabilityCertificate` or the solver's Indeterminate.
    """
    margin = margin or DEFAULT_MARGIN
    n = plant.n
    period = schedule.period
    families = [closed_loop(plant, gain, k, schedule) for k in range(period)]

    prob = lmi.LmiProblem(margin=margin)
    for k in range(period):
        prob.add_symmetric(f"P{k}", n, positive_definite=True)
    eye = np.eye(n)
    for k, fam in enumerate(families):
        expr = lmi.AffineExpr([n], name=f"lyapunov_k{k}")
        nxt = f"P{(k + 1) % period}"
        for (i, j), p in dist.items():
            if p == 0.0:
                continue
            a = fam.a(i, j)
            expr.add_term(0, 0, a.T, nxt, a, weight=p)
        expr.add_term(0, 0, -eye, f"P{k}", eye)
        prob.add_constraint(expr)

    opts = (options or lmi.SolveOptions()).with_margin(margin)
    result = lmi.solve(prob, opts)
    if not result.feasible:
        return result
    ps = tuple(result.assignment[f"P{k}"] for k in range(period))
    return StabilityCertificate(ps=ps, margin=margin, report=result.report)


def check_assumption(plant: Plant, margin: DefinitenessMargin | None = None) -> None:
    """Raise AssumptionViolated unless D11 + D11' > 0 (margin-strict)."""
    d = plant.D11 + plant.D11.T
    if not is_pos_definite(d, margin or DEFAULT_MARGIN):
        raise AssumptionViolated(
            "passivity analysis requires D11 + D11' > 0; "
            f"min eigenvalue is {float(sym_eigvals(d)[0]):.3e}"
        )


def averaged_output_matrix(
    fam: ClosedLoopFamily,
    dist: ModeDistribution,
    weighting: str = "averaged",
) -> np.ndarray:
    """Mode-averaged output matrix C~.

    ``averaged`` weights each mode's C by its probability, which is what
    the expected per-step dissipation produces (the gain term then
    carries the both-links-arrive probability). ``unweighted`` keeps the
    full gain term regardless of the loss rates.
    """
    if weighting == "averaged":
        c = np.zeros_like(fam.c(0, 0))
        for (i, j), p in dist.items():
            c = c + p * fam.c(i, j)
        return c
    if weighting == "unweighted":
        return fam.c(1, 1)
    raise ValueError(f"unknown weighting {weighting!r}")


@dataclass(frozen=True)
class PassivityCertificate:
    """P > 0 and eta >= 0 making the averaged dissipation form negative definite."""

    assignment: dict
    eta: float
    margin: DefinitenessMargin
    report: lmi.VerifyReport
    rho: float

    feasible = True

    @property
    def p(self) -> np.ndarray:
        if "P" in self.assignment:
            return self.assignment["P"]
        # per-mode certificate: report the averaged matrix
        raise KeyError("per-mode certificate has no single P; see assignment")


def _passivity_problem(
    plant: Plant,
    fam: ClosedLoopFamily,
    dist: ModeDistribution,
    eta: float,
    margin: DefinitenessMargin,
    weighting: str,
    per_mode: bool,
) -> lmi.LmiProblem:
    n, m1 = plant.n, plant.m1
    b = fam.b
    d = fam.d
    const22 = 2.0 * eta * np.eye(m1) - d.T - d
    prob = lmi.LmiProblem(margin=margin)

    if not per_mode:
        prob.add_symmetric("P", n, positive_definite=True)
        expr = lmi.AffineExpr([n, m1], name="dissipation")
        eye = np.eye(n)
        for (i, j), p in dist.items():
            if p == 0.0:
                continue
            a = fam.a(i, j)
            expr.add_term(0, 0, a.T, "P", a, weight=p)
            expr.add_term(0, 1, a.T, "P", b, weight=p)
        expr.add_term(0, 0, -eye, "P", eye)
        expr.add_term(1, 1, b.T, "P", b)
        c_avg = averaged_output_matrix(fam, dist, weighting)
        expr.add_const(0, 1, -c_avg.T)
        expr.add_const(1, 1, const22)
        prob.add_constraint(expr)
        return prob

    # Stricter per-mode variant: four coupled P_ij with the i.i.d. average
    # P_bar = sum_j a_j P_j appearing in every mode's quadratic term.
    names = {}
    for i, j in MODES:
        names[(i, j)] = prob.add_symmetric(f"P{i}{j}", n, positive_definite=True)
    eye = np.eye(n)
    for i, j in MODES:
        expr = lmi.AffineExpr([n, m1], name=f"dissipation_{i}{j}")
        a = fam.a(i, j)
        for (it, jt), p in dist.items():
            if p == 0.0:
                continue
            expr.add_term(0, 0, a.T, names[(it, jt)], a, weight=p)
            expr.add_term(0, 1, a.T, names[(it, jt)], b, weight=p)
            expr.add_term(1, 1, b.T, names[(it, jt)], b, weight=p)
        expr.add_term(0, 0, -eye, names[(i, j)], eye)
        expr.add_const(0, 1, -fam.c(i, j).T)
        expr.add_const(1, 1, const22)
        prob.add_constraint(expr)
    return prob


def passivity_lmi(
    plant: Plant,
    gain: Gain,
    dist: ModeDistribution,
    eta: float,
    margin: DefinitenessMargin | None = None,
    options: lmi.SolveOptions | None = None,
    *,
    weighting: str = "averaged",
    per_mode: bool = False,
):
    """Certify strict passivity with dissipation eta (full-packet loop).

    Requires D11 + D11' > 0 and eta >= 0. Returns a verified
    :class:`PassivityCertificate` (which always implies rho < 1 through
    its own top-left block) or the solver's Indeterminate.
    """
    if eta < 0:
        raise ValueError(f"dissipation must be >= 0, got {eta}")
    margin = margin or DEFAULT_MARGIN
    check_assumption(plant, margin)
    fam = closed_loop(plant, gain, 0, full_packet_schedule())
    prob = _passivity_problem(plant, fam, dist, eta, margin, weighting, per_mode)
    opts = (options or lmi.SolveOptions()).with_margin(margin)
    result = lmi.solve(prob, opts)
    if not result.feasible:
        return result
    rho = sms_oracle(fam, dist).rho
    if rho >= 1.0:
        raise VerificationFailed(
            f"passivity certificate with second-moment radius {rho}; "
            "the dissipation form's top-left block should make this impossible"
        )
    return PassivityCertificate(
        assignment=dict(result.assignment),
        eta=float(eta),
        margin=margin,
        report=result.report,
        rho=rho,
    )


def dissipation_upper_bound(plant: Plant) -> float:
    """min eig(D11 + D11')/2: past this the feedthrough block cannot go negative."""
    return float(sym_eigvals(plant.D11 + plant.D11.T)[0]) / 2.0


def max_dissipation(
    plant: Plant,
    gain: Gain,
    dist: ModeDistribution,
    tol: float = 1e-3,
    margin: DefinitenessMargin | None = None,
    options: lmi.SolveOptions | None = None,
    *,
    weighting: str = "averaged",
):
    """Largest certified dissipation, by bisection over eta.

    The loop must be certifiable at eta = 0; otherwise the Indeterminate
    from that first solve is returned unchanged. The search interval is
    [0, min eig(D11 + D11')/2], whose upper end is always infeasible.
    """
    base = passivity_lmi(plant, gain, dist, 0.0, margin, options, weighting=weighting)
    if not base.feasible:
        return base
    lo = 0.0
    hi = dissipation_upper_bound(plant)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        res = passivity_lmi(plant, gain, dist, mid, margin, options, weighting=weighting)
        if res.feasible:
            lo = mid
        else:
            hi = mid
    return lo


def dissipation_form_matrix(
    fam: ClosedLoopFamily, theta1: int, theta2: int, p: np.ndarray, eta: float
) -> np.ndarray:
    """Numeric per-mode dissipation form at storage matrix P (single-P case)."""
    a = fam.a(theta1, theta2)
    c = fam.c(theta1, theta2)
    b, d = fam.b, fam.d
    m1 = b.shape[1]
    top_left = a.T @ p @ a - p
    top_right = a.T @ p @ b - c.T
    bottom = b.T @ p @ b + 2.0 * eta * np.eye(m1) - d.T - d
    return np.block([[top_left, top_right], [top_right.T, bottom]])


def dissipation_identity_check(plant, gain, dist, p, eta, trace) -> float:
    """Exact per-step identity between the dissipation ledger and the quadratic form.

    Along any simulated path, with V(x) = x' P x and zeta = (x, w),

        V(x+) - V(x) - 2 w'z + 2 eta w'w  ==  zeta' M_mode(P) zeta

    holds algebraically for every P and every realized mode, so the
    returned max |difference| over the trace is numerical noise. ``dist``
    is part of the jump-system context but inert here: with a single P
    the identity is pointwise in the realized mode.
    """
    del dist
    p = np.asarray(p, dtype=float)
    families: dict[int, ClosedLoopFamily] = {}
    worst = 0.0
    for k in range(trace.horizon):
        slot = int(trace.slots[k])
        if slot not in families:
            families[slot] = closed_loop(plant, gain, slot, trace.schedule)
        fam = families[slot]
        x = trace.x[k]
        x_next = trace.x[k + 1]
        w = trace.w[k]
        z = trace.z[k]
        form = dissipation_form_matrix(fam, int(trace.theta1[k]), int(trace.theta2[k]), p, eta)
        dv = float(x_next @ p @ x_next - x @ p @ x)
        ledger = dv - 2.0 * float(w @ z) + 2.0 * eta * float(w @ w)
        zeta = np.concatenate([x, w])
        quad = float(zeta @ form @ zeta)
        worst = max(worst, abs(ledger - quad))
    return worst


def expanded_passivity_block(
    plant: Plant,
    gain: Gain,
    dist: ModeDistribution,
    eta: float,
    p: np.ndarray,
    weighting: str = "averaged",
) -> np.ndarray:
    """Schur-expanded six-block form of the averaged passivity inequality at P.

    Block rows: [-P], [-C~, 2 eta I - D' - D], then one row per mode with
    sqrt(a_m) [A_m, B] against a diagonal -P^{-1} block. Negative
    definiteness of this matrix is equivalent to that of the dissipation
    form, and the
    congruence by diag(P^{-1}, I, ..., I) maps it onto the synthesis form.
    """
    p = np.asarray(p, dtype=float)
    fam = closed_loop(plant, gain, 0, full_packet_schedule())
    n, m1 = plant.n, plant.m1
    p_inv = np.linalg.inv(p)
    dims = [n, m1] + [n] * len(MODES)
    total = sum(dims)
    out = np.zeros((total, total))
    offs = np.concatenate([[0], np.cumsum(dims)])

    def block(r, c, val):
        out[offs[r]:offs[r + 1], offs[c]:offs[c + 1]] = val

    block(0, 0, -p)
    c_avg = averaged_output_matrix(fam, dist, weighting)
    block(1, 0, -c_avg)
    block(0, 1, -c_avg.T)
    block(1, 1, 2.0 * eta * np.eye(m1) - fam.d.T - fam.d)
    for t, (i, j) in enumerate(MODES):
        r = 2 + t
        w = np.sqrt(dist.prob(i, j))
        block(r, 0, w * fam.a(i, j))
        block(0, r, (w * fam.a(i, j)).T)
        block(r, 1, w * fam.b)
        block(1, r, (w * fam.b).T)
        block(r, r, -p_inv)
    return 0.5 * (out + out.T)
