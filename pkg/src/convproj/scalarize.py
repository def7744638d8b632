"""The three scalar subproblems that drive the approximation algorithms.

Each operation solves one convex program over the feasible set and, when the
program is bounded, turns its primal-dual pair into a supporting halfspace
(a cut) of the closed image set.  Cuts carry an explicit nonnegative ``shift``
accounting for solver accuracy: near-optimal solutions displace the supporting
halfspace outward but never tilt it, so recession information stays exact.

* ``weighted_sum``: minimize ``w @ A x``; a bounded optimum supports the image
  from the side of ``w``.
* ``pascoletti_serafini``: from an anchor ``v`` in the image, advance as far
  as possible along a direction ``d``; an unbounded advance certifies ``d`` as
  a recession direction of the image, a bounded one yields a cut through the
  boundary point via the equality multipliers.
* ``norm_min``: the Euclidean projection of an exterior point onto the image;
  the residual direction is itself the dual solution, so the cut normal is
  recovered analytically.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import FailedPhaseOne, InfeasibleScalarization, NumericalFailure
from .model import ProblemInstance, Tolerances
from .polyhedra import Halfspace, make_halfspace
from .solver import (
    OPTIMAL,
    Certificate,
    ConvexProgram,
    LinearObjective,
    NormOfAffine,
    box_constraints,
    certify_unbounded,
    lift_constraint,
    lift_linear,
    merge_equality_pairs,
    solve,
)
from .model import recession_constraints

WEIGHTED_SUM = "weighted_sum"
PASCOLETTI_SERAFINI = "pascoletti_serafini"
NORM_MIN = "norm_min"

STATUS_OPTIMAL = "optimal"
STATUS_UNBOUNDED = "unbounded"


@dataclass
class Cut:
    """A halfspace containing the closed image, plus its provenance."""

    halfspace: Halfspace
    source: str
    generator_x: np.ndarray
    shift: float


@dataclass
class ScalarizationOutcome:
    status: str
    x: Optional[np.ndarray]
    alpha_or_z: object
    lam: Optional[np.ndarray]
    cut: Optional[Cut]
    certificate: Optional[Certificate] = None


def weighted_sum(instance: ProblemInstance, w, tolerances: Tolerances,
                 x_start: Optional[np.ndarray] = None) -> ScalarizationOutcome:
    """Minimize ``w @ A x`` over the feasible set.

    Unboundedness is decided by :func:`convproj.solver.certify_unbounded`
    (exact recession certificate, capped solve as arbiter); bounded outcomes
    reuse the certificate's capped solve and emit the cut
    ``{y : w @ y >= w @ A x* - shift}``.
    """
    w = np.asarray(w, dtype=float)
    if np.linalg.norm(w, 1) == 0.0:
        raise ValueError("weight vector must be nonzero")
    cert = certify_unbounded(instance, instance.A.T @ w, tolerances,
                             x_start=x_start)
    if cert.unbounded:
        return ScalarizationOutcome(STATUS_UNBOUNDED, None, None, None, None,
                                    certificate=cert)
    res = cert.capped_result
    value = res.objective_value
    shift = float(res.gap_estimate)
    cut = Cut(
        halfspace=make_halfspace(-w, -(value - shift)),
        source=WEIGHTED_SUM,
        generator_x=res.x,
        shift=shift,
    )
    return ScalarizationOutcome(STATUS_OPTIMAL, res.x, value, w, cut,
                                certificate=cert)


def _image_matched_recession(instance: ProblemInstance, d: np.ndarray,
                             tolerances: Tolerances):
    """Max tau with A u = tau d, u in the recession cone, ||u||_1 <= 1.

    A strictly positive optimum certifies that advancing along ``d`` in the
    image never leaves it.  Returns None when the certificate program is
    numerically unusable (caller falls back to the capped main solve).
    """
    n, a = instance.n, instance.a
    total = 2 * n + 1   # (u, tau, t)
    i_tau = n
    eq_rows, rec_ineq = merge_equality_pairs(recession_constraints(instance))
    ineq = [lift_constraint(c, total) for c in rec_ineq]
    for i in range(n):
        row = np.zeros(total)
        row[i], row[i_tau + 1 + i] = 1.0, -1.0
        ineq.append(lift_linear(row, 0.0, total))
        row2 = np.zeros(total)
        row2[i], row2[i_tau + 1 + i] = -1.0, -1.0
        ineq.append(lift_linear(row2, 0.0, total))
    ball = np.zeros(total)
    ball[i_tau + 1:] = 1.0
    ineq.append(lift_linear(ball, 1.0, total))
    tau_cap = 1.0 + np.abs(instance.A).sum(axis=1).max() / max(
        np.abs(d).max(), 1e-12)
    tau_row = np.zeros(total)
    tau_row[i_tau] = 1.0
    ineq.append(lift_linear(tau_row, tau_cap, total))
    ineq.append(lift_linear(-tau_row, tau_cap, total))

    n_eq = len(eq_rows) + a
    eq_A = np.zeros((n_eq, total))
    eq_b = np.zeros(n_eq)
    for i, row in enumerate(eq_rows):
        eq_A[i, :n] = row
    eq_A[len(eq_rows):, :n] = instance.A
    eq_A[len(eq_rows):, i_tau] = -d

    obj = np.zeros(total)
    obj[i_tau] = -1.0
    prog = ConvexProgram(n=total, objective=LinearObjective(obj), ineq=ineq,
                         eq_A=eq_A, eq_b=eq_b)
    try:
        res = solve(prog, tol=tolerances.solver_tol, phase_one_box=10.0)
    except (FailedPhaseOne, NumericalFailure):
        return None
    if res.status != OPTIMAL:
        return None
    tau = -res.objective_value
    if tau > max(100.0 * tolerances.solver_tol, 1e-6):
        ray = res.x[:n]
        norm = np.linalg.norm(ray, 1)
        return Certificate(True, ray / max(norm, 1e-300), "recession", -tau)
    return Certificate(False, None, "recession", -tau)


def pascoletti_serafini(instance: ProblemInstance, v, d,
                        tolerances: Tolerances,
                        x_start: Optional[np.ndarray] = None
                        ) -> ScalarizationOutcome:
    """Maximize ``alpha`` subject to ``A x = v + alpha d`` over the feasible set.

    ``v`` must lie in the image (callers anchor it at the image of a strictly
    feasible point).  An unbounded advance reports the direction as a recession
    direction; a bounded one produces the cut
    ``{y : lam @ y <= lam @ A x* + shift}`` with ``lam`` pulled back from the
    active-constraint multipliers and normalized to ``lam @ d = 1``.
    """
    v = np.asarray(v, dtype=float)
    d = np.asarray(d, dtype=float)
    if np.linalg.norm(d, 1) == 0.0:
        raise ValueError("direction must be nonzero")
    n, a = instance.n, instance.a
    tol = tolerances.solver_tol

    cert = _image_matched_recession(instance, d, tolerances)
    if cert is not None and cert.unbounded:
        return ScalarizationOutcome(STATUS_UNBOUNDED, None, None, None, None,
                                    certificate=cert)

    M = tolerances.unbounded_cap
    total = n + 1
    ineq = [lift_constraint(c, total) for c in instance.constraints]
    n_instance = len(ineq)
    alpha_row = np.zeros(total)
    alpha_row[n] = 1.0
    ineq.append(lift_linear(alpha_row, M, total))       # alpha <= M
    ineq.append(lift_linear(-alpha_row, M, total))      # alpha >= -M
    ineq += box_constraints(n, 10.0 * M, total=total)
    eq_A = np.hstack([instance.A, -d[:, None]])
    obj = np.zeros(total)
    obj[n] = -1.0
    prog = ConvexProgram(n=total, objective=LinearObjective(obj), ineq=ineq,
                         eq_A=eq_A, eq_b=v)

    start = None
    if x_start is not None:
        start = np.concatenate([np.asarray(x_start, dtype=float), [0.0]])
    try:
        res = solve(prog, tol=tol, x_start=start)
    except FailedPhaseOne:
        raise InfeasibleScalarization(
            "anchor point has no strictly feasible preimage on the fiber")
    if res.status != OPTIMAL:
        raise NumericalFailure("directional advance solve failed")

    alpha = float(res.x[n])
    x_star = res.x[:n]
    if alpha >= 0.9 * M:
        return ScalarizationOutcome(STATUS_UNBOUNDED, None, None, None, None,
                                    certificate=Certificate(True, None, "cap",
                                                            -alpha))
    if np.max(np.abs(x_star)) >= 9.0 * M:
        raise NumericalFailure("feasible-set box engaged without alpha cap")

    mults = res.ineq_multipliers[:n_instance]
    grad_sum = np.zeros(n)
    for mu_i, cons in zip(mults, instance.constraints):
        grad_sum += mu_i * cons.grad(x_star)
    lam_raw, *_ = np.linalg.lstsq(instance.A.T, grad_sum, rcond=None)
    rho = instance.A.T @ lam_raw - grad_sum
    scale = lam_raw @ d
    if abs(scale) < 1e-9 * max(1.0, np.linalg.norm(lam_raw, 1)) or scale <= 0.0:
        raise NumericalFailure(
            "dual direction could not be normalized against d")
    lam = lam_raw / scale
    aux = float(res.ineq_multipliers[n_instance:].sum())
    reach = 1.0 + np.linalg.norm(x_star, 1)
    shift = (res.gap_estimate + (np.linalg.norm(rho) + aux) * reach) / scale
    offset = float(lam @ (instance.A @ x_star)) + shift
    cut = Cut(make_halfspace(lam, offset), PASCOLETTI_SERAFINI, x_star,
              float(shift))
    return ScalarizationOutcome(STATUS_OPTIMAL, x_star, alpha, lam, cut)


def norm_min(instance: ProblemInstance, v, tolerances: Tolerances,
             x_start: Optional[np.ndarray] = None) -> ScalarizationOutcome:
    """Minimize ``||A x - v||_2`` over the feasible set.

    Always feasible and bounded.  A strictly positive residual yields the
    analytically recovered dual ``lam = z*/||z*||`` and the cut
    ``{y : lam @ y >= lam @ A x* - shift}``; a vanishing residual means ``v``
    already belongs to the closed image (no cut).
    """
    v = np.asarray(v, dtype=float)
    tol = tolerances.solver_tol
    M = tolerances.unbounded_cap
    ineq = list(instance.constraints) + box_constraints(instance.n, 10.0 * M)
    prog = ConvexProgram(n=instance.n, objective=NormOfAffine(instance.A, v),
                         ineq=ineq)
    res = solve(prog, tol=tol, x_start=x_start)
    if res.status != OPTIMAL:
        raise NumericalFailure("norm minimization failed")
    x_star = res.x
    if np.max(np.abs(x_star)) >= 9.0 * M:
        raise NumericalFailure("norm minimizer escaped to the safety box")
    z = instance.A @ x_star - v
    nz = float(np.linalg.norm(z))
    if nz <= tol:
        return ScalarizationOutcome(STATUS_OPTIMAL, x_star, z, None, None)
    lam = z / nz
    shift = float(res.gap_estimate / nz) + 1e-12
    offset = float(lam @ (instance.A @ x_star)) - shift
    cut = Cut(make_halfspace(-lam, -offset), NORM_MIN, x_star, shift)
    return ScalarizationOutcome(STATUS_OPTIMAL, x_star, z, lam, cut)
