"""Primal log-barrier engine for the scalarization subproblems.

Solves programs of the form ``min f(x) s.t. G x = h, g_i(x) <= 0`` where the
objective is linear or the Euclidean norm of an affine expression and the
inequalities are the constraint classes of :mod:`convproj.model`.  Equalities
are eliminated up front by parameterizing the affine subspace, so the barrier
loop only ever sees a smooth unconstrained-plus-inequalities problem.

For the norm objective the engine minimizes the smooth square
``0.5 ||A x - v||^2`` (same minimizers) and reports the norm; multipliers and
KKT residuals are stated with respect to the squared form.

``certify_unbounded`` decides whether a linear functional is unbounded below
on the feasible set by minimizing it over the recession cone intersected with
the unit l1 ball, an exact test for these constraint classes.  When the
certificate program itself is degenerate it falls back to a box-capped solve.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.linalg

from .errors import FailedPhaseOne, NumericalFailure
from .model import (
    Constraint,
    LinearConstraint,
    ProblemInstance,
    QuadraticConstraint,
    SecondOrderConeConstraint,
    Tolerances,
    recession_constraints,
)

OPTIMAL = "optimal"
UNBOUNDED = "unbounded"
INFEASIBLE = "infeasible"

MU_INIT = 1.0
MU_FACTOR = 10.0
MAX_NEWTON = 120
DIVERGENCE_LIMIT = 1e14


@dataclass(frozen=True)
class LinearObjective:
    c: np.ndarray

    def value(self, x):
        return float(self.c @ x)

    def grad(self, x):
        return self.c

    def hess(self, x):
        n = self.c.shape[0]
        return np.zeros((n, n))


@dataclass(frozen=True)
class NormOfAffine:
    """Objective ``||A x - v||_2``, minimized through its smooth square."""

    A: np.ndarray
    v: np.ndarray

    def value(self, x):
        r = self.A @ x - self.v
        return float(0.5 * r @ r)

    def grad(self, x):
        return self.A.T @ (self.A @ x - self.v)

    def hess(self, x):
        return self.A.T @ self.A

    def reported_value(self, x):
        return float(np.linalg.norm(self.A @ x - self.v))


@dataclass
class ConvexProgram:
    n: int
    objective: object
    ineq: list
    eq_A: Optional[np.ndarray] = None
    eq_b: Optional[np.ndarray] = None


@dataclass
class SolveResult:
    status: str
    x: np.ndarray
    objective_value: float
    ineq_multipliers: np.ndarray
    eq_multipliers: np.ndarray
    kkt_residual: float
    gap_estimate: float
    mu_final: float


# ---------------------------------------------------------------------------
# constraint lifting helpers (embed a constraint over a sub-block of variables)
# ---------------------------------------------------------------------------

def lift_linear(a: np.ndarray, b: float, total: int, offset: int = 0) -> LinearConstraint:
    full = np.zeros(total)
    full[offset:offset + a.shape[0]] = a
    return LinearConstraint(full, float(b))


def lift_constraint(c: Constraint, total: int, offset: int = 0) -> Constraint:
    if isinstance(c, LinearConstraint):
        return lift_linear(c.a, c.b, total, offset)
    if isinstance(c, QuadraticConstraint):
        n = c.q.shape[0]
        P = np.zeros((total, total))
        P[offset:offset + n, offset:offset + n] = c.P
        q = np.zeros(total)
        q[offset:offset + n] = c.q
        return QuadraticConstraint(P, q, c.r)
    if isinstance(c, SecondOrderConeConstraint):
        k, n = c.C.shape
        C = np.zeros((k, total))
        C[:, offset:offset + n] = c.C
        f = np.zeros(total)
        f[offset:offset + n] = c.f
        return SecondOrderConeConstraint(C, c.e, f, c.g)
    raise TypeError(f"unknown constraint type {type(c)}")


def box_constraints(n: int, limit: float, total: Optional[int] = None,
                    offset: int = 0) -> list:
    total = n if total is None else total
    out = []
    for i in range(n):
        e = np.zeros(total)
        e[offset + i] = 1.0
        out.append(LinearConstraint(e, limit))
        out.append(LinearConstraint(-e, limit))
    return out


# ---------------------------------------------------------------------------
# barrier core
# ---------------------------------------------------------------------------

def _reduce_equalities(prog: ConvexProgram):
    """Return (y0, N) with the feasible affine subspace {y0 + N u}."""
    if prog.eq_A is None or prog.eq_A.shape[0] == 0:
        return np.zeros(prog.n), np.eye(prog.n)
    G = np.atleast_2d(np.asarray(prog.eq_A, dtype=float))
    h = np.asarray(prog.eq_b, dtype=float)
    y0, _, _, _ = np.linalg.lstsq(G, h, rcond=None)
    if np.linalg.norm(G @ y0 - h, np.inf) > 1e-7 * (1.0 + np.linalg.norm(h, np.inf)):
        raise NumericalFailure("inconsistent equality constraints")
    N = scipy.linalg.null_space(G)
    if N.size == 0:
        N = np.zeros((prog.n, 0))
    return y0, N


def _newton_minimize(F, u0, tol, max_iter=MAX_NEWTON):
    """Damped Newton on a smooth strictly-feasible barrier function.

    ``F(u)`` returns (value, grad, hess) with value = +inf outside the domain.
    Runs until the gradient norm drops below ``tol``, descent reaches machine
    precision, or the iteration cap; the flag reports whether ``tol`` was met.
    """
    u = u0.copy()
    val, g, H = F(u)
    if not np.isfinite(val):
        raise NumericalFailure("Newton started outside the barrier domain")
    for _ in range(max_iter):
        gnorm = np.linalg.norm(g, np.inf) if g.size else 0.0
        if gnorm <= tol:
            return u, val, g, H, True
        step = _solve_newton_system(H, g)
        decrement = float(g @ step)
        if not np.isfinite(decrement) or decrement <= 1e-17 * max(1.0, abs(val)):
            # F is at its numerical minimum along achievable directions.
            return u, val, g, H, gnorm <= tol
        t = 1.0
        accepted = False
        for _ in range(80):
            cand = u - t * step
            v2, g2, H2 = F(cand)
            if np.isfinite(v2) and v2 <= val - 0.25 * t * decrement:
                u, val, g, H = cand, v2, g2, H2
                accepted = True
                break
            t *= 0.5
        if not accepted:
            return u, val, g, H, np.linalg.norm(g, np.inf) <= tol
        if val < -DIVERGENCE_LIMIT:
            return u, val, g, H, True
    return u, val, g, H, np.linalg.norm(g, np.inf) <= tol


def _solve_newton_system(H, g):
    if H.shape[0] == 0:
        return np.zeros(0)
    scale = max(np.trace(H) / max(H.shape[0], 1), 1e-12)
    ridge = 0.0
    for _ in range(8):
        try:
            c, low = scipy.linalg.cho_factor(H + ridge * np.eye(H.shape[0]))
            return scipy.linalg.cho_solve((c, low), g)
        except np.linalg.LinAlgError:
            ridge = max(ridge * 100.0, 1e-12 * scale)
        except ValueError:
            break
    step, *_ = np.linalg.lstsq(H + 1e-10 * scale * np.eye(H.shape[0]), g, rcond=None)
    return step


def _barrier_F(objective, ineqs, y0, N, mu):
    def F(u):
        y = y0 + N @ u
        vals = np.array([c.value(y) for c in ineqs])
        if np.any(vals >= 0.0):
            return np.inf, None, None
        val = objective.value(y) - mu * float(np.sum(np.log(-vals)))
        grad_y = objective.grad(y).astype(float).copy()
        hess_y = objective.hess(y).astype(float).copy()
        for c, gv in zip(ineqs, vals):
            gc = c.grad(y)
            grad_y += mu * gc / (-gv)
            hess_y += mu * (np.outer(gc, gc) / gv ** 2 + c.hess(y) / (-gv))
        return val, N.T @ grad_y, N.T @ hess_y @ N
    return F


class _ShiftedConstraint:
    """Constraint ``g(x) - s <= 0`` over variables (x, s) used by phase one."""

    def __init__(self, inner: Constraint, n: int):
        self.inner = inner
        self.n = n

    def value(self, z):
        return self.inner.value(z[:self.n]) - z[self.n]

    def grad(self, z):
        g = np.zeros(self.n + 1)
        g[:self.n] = self.inner.grad(z[:self.n])
        g[self.n] = -1.0
        return g

    def hess(self, z):
        H = np.zeros((self.n + 1, self.n + 1))
        H[:self.n, :self.n] = self.inner.hess(z[:self.n])
        return H


def _phase_one_reduced(ineqs, y0, N, tol, box_limit):
    """Strictly feasible point of {u : g_i(y0 + N u) < 0}, or FailedPhaseOne."""
    k = N.shape[1]
    lifted = []
    for c in ineqs:
        lifted.append(_ReducedShifted(c, y0, N))
    # Slack floor and a box on u keep the auxiliary program bounded.
    e_s = np.zeros(k + 1)
    e_s[k] = 1.0
    aux = [LinearConstraint(-e_s, 1.0)]
    aux += box_constraints(k, box_limit, total=k + 1)
    z0 = np.zeros(k + 1)
    worst = max(c.value(y0 + N @ z0[:k]) for c in ineqs) if ineqs else -1.0
    z0[k] = max(worst + 1.0, -0.5)
    objective = LinearObjective(e_s)
    constraints = lifted + aux
    m = len(constraints)
    z = z0
    mu_init = min(max(MU_INIT, abs(z0[k]) / m), 1e12)
    stages = max(2, int(np.ceil(np.log10(max(m, 1) * mu_init / tol))) + 2)
    for stage in range(stages):
        mu = mu_init / MU_FACTOR ** stage
        F = _barrier_F(objective, constraints, np.zeros(k + 1), np.eye(k + 1), mu)
        z, _, _, _, ok = _newton_minimize(F, z, max(mu / 10.0, 1e-12))
        if m * mu <= tol * (1.0 + 1e-9) or z[k] < -0.05:
            break
    if z[k] >= -tol:
        raise FailedPhaseOne(f"phase one slack {z[k]:.3e} not strictly negative")
    return z[:k]


class _ReducedShifted:
    """``g(y0 + N u) - s <= 0`` over variables (u, s)."""

    def __init__(self, inner, y0, N):
        self.inner = inner
        self.y0 = y0
        self.N = N
        self.k = N.shape[1]

    def value(self, z):
        return self.inner.value(self.y0 + self.N @ z[:self.k]) - z[self.k]

    def grad(self, z):
        g = np.zeros(self.k + 1)
        g[:self.k] = self.N.T @ self.inner.grad(self.y0 + self.N @ z[:self.k])
        g[self.k] = -1.0
        return g

    def hess(self, z):
        H = np.zeros((self.k + 1, self.k + 1))
        y = self.y0 + self.N @ z[:self.k]
        H[:self.k, :self.k] = self.N.T @ self.inner.hess(y) @ self.N
        return H


def _constraint_is_constant(c: Constraint, y0: np.ndarray, N: np.ndarray) -> bool:
    """True when ``c`` does not vary on the affine subspace {y0 + N u}."""
    tol = 1e-12
    if isinstance(c, LinearConstraint):
        return np.linalg.norm(N.T @ c.a, np.inf) <= tol * (1 + np.linalg.norm(c.a, np.inf))
    if isinstance(c, QuadraticConstraint):
        return (np.linalg.norm(N.T @ c.P @ N, np.inf) <= tol
                and np.linalg.norm(N.T @ (c.P @ y0 + c.q), np.inf) <= tol)
    if isinstance(c, SecondOrderConeConstraint):
        return (np.linalg.norm(c.C @ N, np.inf) <= tol
                and np.linalg.norm(N.T @ c.f, np.inf) <= tol)
    return False


def solve(prog: ConvexProgram, tol: float, x_start: Optional[np.ndarray] = None,
          phase_one_box: float = 1e6, strict: bool = True) -> SolveResult:
    """Run the barrier method on ``prog`` to KKT residual ``tol``.

    ``x_start`` may supply a strictly feasible point (it must also satisfy the
    equality constraints); otherwise an internal phase-one search runs first.
    With ``strict`` the final KKT residual is enforced (NumericalFailure above
    50x tolerance); callers that only need the objective value to duality-gap
    accuracy (degenerate LPs saturate the stationarity measure in float64 long
    before the gap does) can switch it off and read the honest residual.
    """
    y0, N = _reduce_equalities(prog)

    # Constraints that are constant on the equality subspace carry no barrier
    # information; a violated constant one settles feasibility outright.
    ineqs = []
    kept_idx = []
    for i, c in enumerate(prog.ineq):
        if _constraint_is_constant(c, y0, N):
            if c.value(y0) > 1e-9:
                return SolveResult(INFEASIBLE, y0, np.inf, np.zeros(len(prog.ineq)),
                                   np.zeros(0), np.inf, np.inf, 0.0)
        else:
            ineqs.append(c)
            kept_idx.append(i)
    m = len(ineqs)

    if N.shape[1] == 0:
        return _point_program_result(prog, y0, list(prog.ineq), tol)

    u = None
    if x_start is not None:
        x_start = np.asarray(x_start, dtype=float)
        u_cand = N.T @ (x_start - y0)
        y_cand = y0 + N @ u_cand
        on_subspace = np.linalg.norm(y_cand - x_start, np.inf) <= 1e-7 * (
            1.0 + np.linalg.norm(x_start, np.inf))
        if on_subspace and all(c.value(y_cand) < 0.0 for c in ineqs):
            u = u_cand
    if u is None:
        if m == 0:
            u = np.zeros(N.shape[1])
        else:
            u = _phase_one_reduced(ineqs, y0, N, min(tol, 1e-6), phase_one_box)

    if m == 0:
        return _equality_only_result(prog, y0, N, u, tol)

    # Balance the barrier against the objective scale at the start point, else
    # the first stage acts unconstrained and crushes the iterate into the
    # boundary far from the central path.
    f0 = abs(prog.objective.value(y0 + N @ u))
    mu_init = min(max(MU_INIT, f0 / m), 1e12)
    stages = max(2, int(np.ceil(np.log10(m * mu_init / tol))) + 2)
    mu = mu_init
    for stage in range(stages):
        mu = mu_init / MU_FACTOR ** stage
        F = _barrier_F(prog.objective, ineqs, y0, N, mu)
        u, val, g, H, ok = _newton_minimize(F, u, max(mu / 10.0, 1e-12))
        if val < -DIVERGENCE_LIMIT:
            return SolveResult(UNBOUNDED, y0 + N @ u, -np.inf,
                               np.zeros(len(prog.ineq)), np.zeros(0),
                               np.inf, np.inf, mu)
        if m * mu <= tol * (1.0 + 1e-9):
            break

    result = _finalize(prog, y0, N, u, ineqs, mu, tol,
                       kept_idx=kept_idx, m_total=len(prog.ineq))
    if strict and result.kkt_residual > 50 * tol:
        raise NumericalFailure(
            f"barrier loop ended with KKT residual {result.kkt_residual:.3e} "
            f"above tolerance {tol:.1e}")
    return result


def _point_program_result(prog, y0, ineqs, tol):
    worst = max((c.value(y0) for c in ineqs), default=-1.0)
    if worst > tol:
        return SolveResult(INFEASIBLE, y0, np.inf, np.zeros(len(ineqs)),
                           np.zeros(0), np.inf, np.inf, 0.0)
    value = _reported_value(prog.objective, y0)
    k = 0 if prog.eq_A is None else prog.eq_A.shape[0]
    return SolveResult(OPTIMAL, y0, value, np.zeros(len(ineqs)),
                       np.zeros(k), 0.0, 0.0, 0.0)


def _equality_only_result(prog, y0, N, u, tol):
    obj = prog.objective
    if isinstance(obj, LinearObjective):
        red = N.T @ obj.c
        if np.linalg.norm(red, np.inf) > tol:
            ray = -N @ red
            x = y0 + N @ u + ray
            return SolveResult(UNBOUNDED, x, -np.inf, np.zeros(0), np.zeros(0),
                               np.inf, np.inf, 0.0)
        x = y0 + N @ u
    else:
        M = obj.A @ N
        rhs = obj.v - obj.A @ y0
        sol, *_ = np.linalg.lstsq(M, rhs, rcond=None)
        x = y0 + N @ sol
    return _finalize(prog, y0, N, N.T @ (x - y0), [], 0.0, tol,
                     kept_idx=[], m_total=len(prog.ineq))


def _reported_value(objective, x):
    if isinstance(objective, NormOfAffine):
        return objective.reported_value(x)
    return objective.value(x)


def _finalize(prog, y0, N, u, ineqs, mu, tol, kept_idx=None, m_total=None) -> SolveResult:
    x = y0 + N @ u
    m = len(ineqs)
    if kept_idx is None:
        kept_idx = list(range(m))
    if m_total is None:
        m_total = m
    mults = np.zeros(m_total)
    resid = prog.objective.grad(x).astype(float).copy()
    for i, c in zip(kept_idx, ineqs):
        gv = c.value(x)
        mults[i] = mu / max(-gv, 1e-300)
        resid += mults[i] * c.grad(x)
    if prog.eq_A is not None and prog.eq_A.shape[0] > 0:
        nu, *_ = np.linalg.lstsq(prog.eq_A.T, -resid, rcond=None)
        resid = resid + prog.eq_A.T @ nu
    else:
        nu = np.zeros(0)
    stat = float(np.linalg.norm(resid, np.inf))
    gap = m * mu + stat
    return SolveResult(
        status=OPTIMAL,
        x=x,
        objective_value=_reported_value(prog.objective, x),
        ineq_multipliers=mults,
        eq_multipliers=nu,
        kkt_residual=max(stat, m * mu),
        gap_estimate=gap,
        mu_final=mu,
    )


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

def phase_one(constraints, n: int, tol: float = 1e-8,
              box_limit: float = 1e4, x0: Optional[np.ndarray] = None) -> np.ndarray:
    """Find a strictly feasible point of ``{x : g_i(x) < 0}``.

    Minimizes an auxiliary slack ``s`` subject to ``g_i(x) <= s`` (with the
    slack floored at -1 and a coordinate box so the search stays bounded even
    for unbounded feasible sets).  Raises :class:`FailedPhaseOne` when the
    attained slack is not strictly negative, which signals an empty or
    interior-free feasible set.
    """
    total = n + 1
    lifted = [_ShiftedConstraint(c, n) for c in constraints]
    e_s = np.zeros(total)
    e_s[n] = 1.0
    aux = [LinearConstraint(-e_s, 1.0)] + box_constraints(n, box_limit, total=total)
    z0 = np.zeros(total)
    if x0 is not None:
        z0[:n] = np.clip(np.asarray(x0, dtype=float), -0.5 * box_limit, 0.5 * box_limit)
    worst = max(c.value(z0[:n]) for c in constraints)
    z0[n] = max(worst + 1.0, -0.5)
    prog = ConvexProgram(n=total, objective=LinearObjective(e_s),
                         ineq=lifted + aux)
    res = solve(prog, tol=min(tol, 1e-6), x_start=z0)
    x, s = res.x[:n], res.x[n]
    if s >= -tol or max(c.value(x) for c in constraints) >= -tol:
        raise FailedPhaseOne(f"no strictly feasible point (slack {s:.3e})")
    return x


def merge_equality_pairs(constraints):
    """Split homogeneous opposite-pair linear constraints into equalities.

    Recession systems encode ``p @ d = 0`` as the pair ``p @ d <= 0`` and
    ``-p @ d <= 0``; the barrier needs them back as equalities to retain a
    relative interior.  Returns (eq_rows, remaining_constraints).
    """
    linear = []
    others = []
    for c in constraints:
        if isinstance(c, LinearConstraint) and abs(c.b) <= 1e-14:
            linear.append(c)
        else:
            others.append(c)
    used = [False] * len(linear)
    eq_rows = []
    for i, ci in enumerate(linear):
        if used[i]:
            continue
        for j in range(i + 1, len(linear)):
            if used[j]:
                continue
            if np.allclose(ci.a, -linear[j].a, rtol=0.0, atol=1e-12):
                eq_rows.append(ci.a)
                used[i] = used[j] = True
                break
    remaining = [c for k, c in enumerate(linear) if not used[k]] + others
    return eq_rows, remaining


@dataclass
class Certificate:
    unbounded: bool
    ray: Optional[np.ndarray]
    method: str
    value: float
    capped_result: Optional[SolveResult] = None


def certify_unbounded(instance: ProblemInstance, c: np.ndarray,
                      tolerances: Tolerances,
                      x_start: Optional[np.ndarray] = None) -> Certificate:
    """Decide whether ``inf c @ x`` over the feasible set is -infinity.

    Exact stage: minimize ``c @ d`` over the recession cone intersected with
    the unit l1 ball (slack-variable encoding).  A strictly negative optimum
    yields a recession ray along which the objective decreases without bound.
    A zero optimum is inconclusive (the infimum can still diverge along a
    curved escape, think of a horizontal functional on a parabola epigraph),
    so the decision then falls to a box-capped minimization over the feasible
    set: a solution pressed into the cap is declared unbounded.  The capped
    solve is returned so callers needing the bounded optimum can reuse it.
    """
    c = np.asarray(c, dtype=float)
    n = instance.n
    tol = tolerances.solver_tol
    try:
        res = _recession_program(instance, c, tol)
        if res.status == OPTIMAL and res.objective_value < -10 * tol:
            ray = res.x[:n]
            return Certificate(True, ray / np.linalg.norm(ray, 1), "recession",
                               res.objective_value)
    except (FailedPhaseOne, NumericalFailure):
        pass

    M = tolerances.unbounded_cap
    prog = ConvexProgram(
        n=n,
        objective=LinearObjective(c),
        ineq=list(instance.constraints) + box_constraints(n, M),
    )
    if x_start is None:
        x_start = phase_one(instance.constraints, n, tol=tol, box_limit=M)
    res = solve(prog, tol=tol, x_start=x_start)
    if res.status != OPTIMAL:
        raise NumericalFailure("capped certificate solve did not reach optimality")
    x = res.x
    if np.max(np.abs(x)) >= 0.9 * M:
        ray = x / max(np.linalg.norm(x, 1), 1.0)
        return Certificate(True, ray, "cap", res.objective_value, capped_result=res)
    return Certificate(False, None, "cap", res.objective_value, capped_result=res)


def _recession_program(instance: ProblemInstance, c: np.ndarray, tol: float) -> SolveResult:
    n = instance.n
    total = 2 * n  # variables (d, t) with |d_i| <= t_i, sum t <= 1
    eq_rows, ineq = merge_equality_pairs(recession_constraints(instance))
    lifted = [lift_constraint(cst, total) for cst in ineq]
    for i in range(n):
        row = np.zeros(total)
        row[i], row[n + i] = 1.0, -1.0
        lifted.append(LinearConstraint(row.copy(), 0.0))
        row2 = np.zeros(total)
        row2[i], row2[n + i] = -1.0, -1.0
        lifted.append(LinearConstraint(row2, 0.0))
    ball = np.zeros(total)
    ball[n:] = 1.0
    lifted.append(LinearConstraint(ball, 1.0))
    eq_A = None
    eq_b = None
    if eq_rows:
        eq_A = np.zeros((len(eq_rows), total))
        for i, row in enumerate(eq_rows):
            eq_A[i, :n] = row
        eq_b = np.zeros(len(eq_rows))
    obj = np.zeros(total)
    obj[:n] = c
    prog = ConvexProgram(n=total, objective=LinearObjective(obj), ineq=lifted,
                         eq_A=eq_A, eq_b=eq_b)
    return solve(prog, tol=tol, phase_one_box=10.0)
