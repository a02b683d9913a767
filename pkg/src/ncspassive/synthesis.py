"""Passivating state-feedback synthesis in the (X, Y) variables.

The analysis inequality is bilinear in (P, K); substituting X = P^{-1},
Y = K X after a Schur expansion and a congruence by diag(P^{-1}, I, ...)
makes it affine. The resulting block LMI has

    row 0:            -X
    row 1:            -[C1 X + a11 D12 Y]   |   2 eta I - D11' - D11
    rows 2..5, mode m: sqrt(a_m) [A X + (m == (1,1)) B2 Y,  B1]
    diagonal blocks:  -X

with the gain term present only in the both-links-arrive row, because
the closed-loop A of every other mode is the open loop. The whole row,
including the B1 column, carries the sqrt(a_m) factor; both placements
follow from expanding the mode family inside the Schur-expanded
analysis form. Synthesis is restricted to the full-packet configuration,
where K = Y X^{-1} is well-posed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import lmi
from .analysis import (
    check_assumption,
    dissipation_upper_bound,
    expanded_passivity_block,
    passivity_lmi,
    sms_oracle,
)
from .errors import SingularTransform, VerificationFailed
from .model import (
    MODES,
    Gain,
    LossModel,
    ModeDistribution,
    Plant,
    closed_loop,
    full_packet_schedule,
    mode_distribution,
)
from .numerics import (
    DEFAULT_MARGIN,
    DefinitenessMargin,
    is_neg_definite,
    sym_eigvals,
)

__all__ = [
    "SynthesisResult",
    "RoundTripReport",
    "build_synthesis_lmi",
    "recover_gain",
    "round_trip_verify",
    "synthesize",
]

SYNTHESIS_CONSTRAINT = "synthesis"


def build_synthesis_lmi(
    plant: Plant,
    dist: ModeDistribution,
    eta: float,
    margin: DefinitenessMargin | None = None,
    weighting: str = "averaged",
) -> lmi.LmiProblem:
    """Pose the synthesis block LMI over X > 0 (n x n) and Y (m2 x n).

    When the both-links-arrive probability is zero no feedback can act,
    so Y is omitted entirely and feasibility reduces to open-loop
    passivity.
    """
    check_assumption(plant, margin)
    n, m1, m2 = plant.n, plant.m1, plant.m2
    a11 = dist.prob(1, 1)
    have_y = a11 > 0.0

    prob = lmi.LmiProblem(margin=margin or DEFAULT_MARGIN)
    prob.add_symmetric("X", n, positive_definite=True)
    if have_y:
        prob.add_rectangular("Y", m2, n)

    dims = [n, m1] + [n] * len(MODES)
    expr = lmi.AffineExpr(dims, name=SYNTHESIS_CONSTRAINT)
    eye = np.eye(n)

    expr.add_term(0, 0, -eye, "X", eye)
    # output row: -[C1 X + a11 D12 Y] against 2 eta I - D11' - D11
    expr.add_term(1, 0, -plant.C1, "X", eye)
    if have_y:
        c_weight = a11 if weighting == "averaged" else 1.0
        if weighting not in ("averaged", "unweighted"):
            raise ValueError(f"unknown weighting {weighting!r}")
        expr.add_term(1, 0, -plant.D12, "Y", eye, weight=c_weight)
    expr.add_const(1, 1, 2.0 * eta * np.eye(m1) - plant.D11.T - plant.D11)

    for t, (i, j) in enumerate(MODES):
        r = 2 + t
        w = np.sqrt(dist.prob(i, j))
        if w > 0.0:
            expr.add_term(r, 0, plant.A, "X", eye, weight=w)
            if (i, j) == (1, 1) and have_y:
                expr.add_term(r, 0, plant.B2, "Y", eye, weight=w)
            expr.add_const(r, 1, w * plant.B1)
        expr.add_term(r, r, -eye, "X", eye)

    prob.add_constraint(expr)
    return prob


def recover_gain(x: np.ndarray, y: np.ndarray) -> Gain:
    """K = Y X^{-1}, with an explicit residual check on K X = Y."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    eigs = sym_eigvals(x)
    if eigs[0] <= 1e-12 * (1.0 + eigs[-1]):
        raise SingularTransform(
            f"X is singular within tolerance (min eigenvalue {eigs[0]:.3e})"
        )
    k = np.linalg.solve(x.T, y.T).T
    residual = float(np.linalg.norm(k @ x - y))
    bound = 1e-8 * (1.0 + float(np.linalg.norm(y)))
    if residual > bound:
        raise SingularTransform(
            f"gain recovery residual {residual:.3e} exceeds {bound:.3e}; X too ill-conditioned"
        )
    return Gain(k)


@dataclass(frozen=True)
class RoundTripReport:
    """Three independent legs validating a synthesized gain."""

    passivity_certified: bool
    rho: float
    rho_ok: bool
    congruence_rel_err: float
    congruence_ok: bool
    verdicts_match: bool
    detail: str = ""

    @property
    def passed(self) -> bool:
        return (
            self.passivity_certified
            and self.rho_ok
            and self.congruence_ok
            and self.verdicts_match
        )

    def summary(self) -> str:
        return (
            f"passivity re-certified: {self.passivity_certified}; "
            f"rho = {self.rho:.6f} (<1: {self.rho_ok}); "
            f"congruence rel err = {self.congruence_rel_err:.3e} "
            f"(ok: {self.congruence_ok}, verdicts match: {self.verdicts_match})"
        )


CONGRUENCE_RTOL = 1e-6


def congruence_residual(
    plant: Plant,
    dist: ModeDistribution,
    eta: float,
    x: np.ndarray,
    y: np.ndarray,
    gain: Gain,
    weighting: str = "averaged",
) -> tuple[float, bool]:
    """Relative eigenvalue gap between the synthesis form at (X, Y) and the
    congruence-mapped analysis form at P = X^{-1}.

    The two assembled matrices are equal up to rounding, so agreement is
    a sharp consistency check on both constructions. Also reports whether
    their definiteness verdicts coincide.
    """
    prob = build_synthesis_lmi(plant, dist, eta, weighting=weighting)
    expr = dict(prob.constraints)[SYNTHESIS_CONSTRAINT]
    assignment = {"X": x}
    if "Y" in prob.variables:
        assignment["Y"] = y
    m_xy = expr.assemble(assignment)

    p = np.linalg.inv(x)
    m_p = expanded_passivity_block(plant, gain, dist, eta, p, weighting)
    n, m1 = plant.n, plant.m1
    t_blocks = [x, np.eye(m1)] + [np.eye(n)] * len(MODES)
    t = _block_diag(t_blocks)
    m_mapped = t @ m_p @ t

    e_xy = sym_eigvals(m_xy)
    e_mapped = sym_eigvals(m_mapped)
    scale = 1.0 + float(np.abs(e_xy).max())
    rel = float(np.abs(e_xy - e_mapped).max()) / scale
    verdicts_match = is_neg_definite(m_xy) == is_neg_definite(m_mapped)
    return rel, verdicts_match


def _block_diag(blocks) -> np.ndarray:
    total = sum(b.shape[0] for b in blocks)
    out = np.zeros((total, total))
    at = 0
    for b in blocks:
        d = b.shape[0]
        out[at:at + d, at:at + d] = b
        at += d
    return out


def round_trip_verify(
    plant: Plant,
    result: "SynthesisResult",
    dist: ModeDistribution,
    margin: DefinitenessMargin | None = None,
    options: lmi.SolveOptions | None = None,
) -> RoundTripReport:
    """Independent validation of a synthesis result.

    (a) re-certify passivity of the closed loop at the claimed eta with a
    fresh LMI solve; (b) second-moment radius < 1 by the oracle; (c) the
    congruence identity between the synthesis and analysis block forms.
    """
    margin = margin or DEFAULT_MARGIN
    fresh = passivity_lmi(
        plant, result.gain, dist, result.eta, margin, options, weighting=result.weighting
    )
    passivity_ok = bool(fresh.feasible)

    fam = closed_loop(plant, result.gain, 0, full_packet_schedule())
    rho = sms_oracle(fam, dist).rho

    rel, verdicts = congruence_residual(
        plant, dist, result.eta, result.x, result.y, result.gain, result.weighting
    )
    detail = "" if passivity_ok else "fresh passivity solve did not certify"
    return RoundTripReport(
        passivity_certified=passivity_ok,
        rho=rho,
        rho_ok=rho < 1.0,
        congruence_rel_err=rel,
        congruence_ok=rel <= CONGRUENCE_RTOL,
        verdicts_match=verdicts,
        detail=detail,
    )


@dataclass(frozen=True)
class SynthesisResult:
    """Solved synthesis instance with its verified round trip."""

    x: np.ndarray
    y: np.ndarray
    gain: Gain
    eta: float
    certificate: lmi.LmiCertificate
    verification: RoundTripReport
    rho: float
    weighting: str = "averaged"

    feasible = True


def _solve_at_eta(plant, dist, eta, margin, options, weighting):
    prob = build_synthesis_lmi(plant, dist, eta, margin, weighting)
    opts = (options or lmi.SolveOptions()).with_margin(margin)
    return lmi.solve(prob, opts)


def synthesize(
    plant: Plant,
    loss: LossModel,
    eta,
    margin: DefinitenessMargin | None = None,
    options: lmi.SolveOptions | None = None,
    *,
    eta_tol: float = 1e-3,
    weighting: str = "averaged",
):
    """Solve the synthesis LMI and return a round-trip-verified gain.

    ``eta`` is a fixed dissipation level or ``"maximize"``, which bisects
    over [0, min eig(D11 + D11')/2] to the given tolerance. Returns a
    :class:`SynthesisResult`, or Indeterminate when no certificate was
    found. A certificate whose round trip fails raises VerificationFailed:
    that means a bug, not an infeasible problem.
    """
    margin = margin or DEFAULT_MARGIN
    check_assumption(plant, margin)
    dist = mode_distribution(loss)

    if eta == "maximize":
        result = _solve_at_eta(plant, dist, 0.0, margin, options, weighting)
        if not result.feasible:
            return result
        best = (0.0, result)
        lo, hi = 0.0, dissipation_upper_bound(plant)
        while hi - lo > eta_tol:
            mid = 0.5 * (lo + hi)
            res = _solve_at_eta(plant, dist, mid, margin, options, weighting)
            if res.feasible:
                best = (mid, res)
                lo = mid
            else:
                hi = mid
        eta_val, certificate = best
    else:
        eta_val = float(eta)
        certificate = _solve_at_eta(plant, dist, eta_val, margin, options, weighting)
        if not certificate.feasible:
            return certificate

    x = certificate.assignment["X"]
    y = certificate.assignment.get("Y", np.zeros((plant.m2, plant.n)))
    gain = recover_gain(x, y)
    partial = SynthesisResult(
        x=x,
        y=y,
        gain=gain,
        eta=eta_val,
        certificate=certificate,
        verification=None,  # placeholder until the round trip runs
        rho=float("nan"),
        weighting=weighting,
    )
    report = round_trip_verify(plant, partial, dist, margin, options)
    if not report.passed:
        raise VerificationFailed(
            f"synthesis round trip failed: {report.summary()}"
        )
    return SynthesisResult(
        x=x,
        y=y,
        gain=gain,
        eta=eta_val,
        certificate=certificate,
        verification=report,
        rho=report.rho,
        weighting=weighting,
    )
