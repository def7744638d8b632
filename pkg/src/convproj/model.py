"""Problem instances: a linear map A applied to a convex feasible set.

An instance describes the set ``{A x : x feasible}`` whose closure is the
object the drivers in :mod:`convproj.algorithms` approximate.  The feasible
set is an intersection of linear, convex-quadratic and second-order-cone
inequalities, which is rich enough for all shipped fixtures and keeps
recession cones available in closed form (that is what makes unboundedness
detection exact rather than heuristic).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .errors import DimensionMismatch, NotConvex, ParseError

# Feasibility slack accepted when validating user-supplied points.
FEAS_TOL = 1e-8

# Relative floor for the smallest eigenvalue of a quadratic constraint matrix.
PSD_TOL = 1e-9


def _as_vector(x, n: int, what: str) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.shape != (n,):
        raise DimensionMismatch(f"{what}: expected shape ({n},), got {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ParseError(f"{what}: non-finite entries")
    return v


def _as_matrix(x, shape, what: str) -> np.ndarray:
    m = np.atleast_2d(np.asarray(x, dtype=float))
    if m.shape != shape:
        raise DimensionMismatch(f"{what}: expected shape {shape}, got {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ParseError(f"{what}: non-finite entries")
    return m


@dataclass(frozen=True)
class LinearConstraint:
    """Halfspace constraint ``a @ x <= b``."""

    a: np.ndarray
    b: float

    def value(self, x: np.ndarray) -> float:
        return float(self.a @ x - self.b)

    def grad(self, x: np.ndarray) -> np.ndarray:
        return self.a

    def hess(self, x: np.ndarray) -> np.ndarray:
        n = self.a.shape[0]
        return np.zeros((n, n))

    def recession(self) -> list["Constraint"]:
        if np.linalg.norm(self.a, 1) == 0.0:
            return []
        return [LinearConstraint(self.a, 0.0)]

    def dim(self) -> int:
        return self.a.shape[0]


@dataclass(frozen=True)
class QuadraticConstraint:
    """Convex quadratic constraint ``0.5 x @ P @ x + q @ x + r <= 0``.

    ``P`` must be symmetric positive semidefinite (validated on load up to a
    relative eigenvalue floor).
    """

    P: np.ndarray
    q: np.ndarray
    r: float

    def value(self, x: np.ndarray) -> float:
        return float(0.5 * x @ self.P @ x + self.q @ x + self.r)

    def grad(self, x: np.ndarray) -> np.ndarray:
        return self.P @ x + self.q

    def hess(self, x: np.ndarray) -> np.ndarray:
        return self.P

    def recession(self) -> list["Constraint"]:
        # Directions d with P d = 0 and q @ d <= 0.  The kernel condition is
        # encoded row-wise as inequality pairs so downstream code sees a single
        # constraint representation; zero rows carry no information.
        out: list[Constraint] = []
        for row in self.P:
            if np.linalg.norm(row, 1) > 0.0:
                out.append(LinearConstraint(row.copy(), 0.0))
                out.append(LinearConstraint(-row.copy(), 0.0))
        if np.linalg.norm(self.q, 1) > 0.0:
            out.append(LinearConstraint(self.q, 0.0))
        return out

    def dim(self) -> int:
        return self.q.shape[0]


@dataclass(frozen=True)
class SecondOrderConeConstraint:
    """Second-order-cone constraint ``||C x + e||_2 <= f @ x + g``."""

    C: np.ndarray
    e: np.ndarray
    f: np.ndarray
    g: float

    # Guard against the non-differentiable point C x + e = 0.
    _SMOOTH_EPS = 1e-12

    def value(self, x: np.ndarray) -> float:
        return float(np.linalg.norm(self.C @ x + self.e) - self.f @ x - self.g)

    def grad(self, x: np.ndarray) -> np.ndarray:
        u = self.C @ x + self.e
        s = max(np.linalg.norm(u), self._SMOOTH_EPS)
        return self.C.T @ u / s - self.f

    def hess(self, x: np.ndarray) -> np.ndarray:
        u = self.C @ x + self.e
        s = max(np.linalg.norm(u), self._SMOOTH_EPS)
        w = self.C.T @ u / s
        return self.C.T @ self.C / s - np.outer(w, w) / s

    def recession(self) -> list["Constraint"]:
        return [SecondOrderConeConstraint(self.C, np.zeros(self.C.shape[0]), self.f, 0.0)]

    def dim(self) -> int:
        return self.f.shape[0]


Constraint = Union[LinearConstraint, QuadraticConstraint, SecondOrderConeConstraint]


@dataclass
class Tolerances:
    """Accuracy knobs for a run.

    ``epsilon`` bounds the image-space approximation error and ``delta`` the
    recession-cone cap error, both in l1 units.  ``solver_tol`` is the accuracy
    demanded of each scalarization solve and must be at most
    ``min(epsilon, delta) / 100`` so that solver slack stays negligible next to
    the geometric tolerances.  ``unbounded_cap`` is the magnitude at which a
    capped solve is declared unbounded.
    """

    epsilon: float = 0.01
    delta: float = 0.1
    solver_tol: Optional[float] = None
    unbounded_cap: float = 1e4
    dedup_tol: float = 1e-8

    def __post_init__(self):
        if self.epsilon <= 0 or self.delta <= 0:
            raise ValueError("epsilon and delta must be positive")
        if self.solver_tol is None:
            self.solver_tol = min(self.epsilon, self.delta) / 1000.0
        if self.solver_tol > min(self.epsilon, self.delta) / 100.0:
            raise ValueError("solver_tol must be <= min(epsilon, delta)/100")
        if self.solver_tol <= 0:
            raise ValueError("solver_tol must be positive")
        if self.unbounded_cap < 1e4:
            raise ValueError("unbounded_cap must be >= 1e4")
        if self.dedup_tol <= 0:
            raise ValueError("dedup_tol must be positive")


@dataclass
class ProblemInstance:
    """Matrix ``A`` (a x n) plus the constraints defining the feasible set."""

    A: np.ndarray
    constraints: list
    n: int
    a: int
    known_point: Optional[np.ndarray] = None
    name: str = ""

    def __post_init__(self):
        self.A = _as_matrix(self.A, (self.a, self.n), "A")
        if self.n < 1 or self.a < 1:
            raise DimensionMismatch("n and a must be >= 1")
        if not self.constraints:
            raise ParseError("instance needs at least one constraint")
        for i, c in enumerate(self.constraints):
            if c.dim() != self.n:
                raise DimensionMismatch(
                    f"constraint {i} lives in dimension {c.dim()}, instance has n={self.n}"
                )
        _check_psd(self.constraints)
        if self.known_point is not None:
            self.known_point = _as_vector(self.known_point, self.n, "known_point")
            worst = max(c.value(self.known_point) for c in self.constraints)
            if worst > FEAS_TOL:
                raise ParseError(f"known_point violates a constraint by {worst:.3e}")

    def feasible(self, x: np.ndarray, tol: float = FEAS_TOL) -> bool:
        return all(c.value(x) <= tol for c in self.constraints)

    def max_violation(self, x: np.ndarray) -> float:
        return max(c.value(x) for c in self.constraints)


def _check_psd(constraints: Sequence[Constraint]) -> None:
    for i, c in enumerate(constraints):
        if isinstance(c, QuadraticConstraint):
            if not np.allclose(c.P, c.P.T, atol=1e-12):
                raise NotConvex(f"constraint {i}: P is not symmetric")
            scale = max(np.linalg.norm(c.P, 2), 1.0)
            lo = float(np.linalg.eigvalsh(c.P)[0])
            if lo < -PSD_TOL * scale:
                raise NotConvex(
                    f"constraint {i}: P has eigenvalue {lo:.3e} below -{PSD_TOL:.0e}*||P||"
                )


def recession_constraints(instance: ProblemInstance) -> list:
    """Closed-form constraints describing the recession cone of the feasible set.

    Linear rows become homogeneous halfspaces, quadratic rows become the kernel
    system of P (as inequality pairs) plus ``q @ d <= 0``, and cone rows keep
    their shape with the affine parts dropped.
    """
    out: list[Constraint] = []
    for c in instance.constraints:
        out.extend(c.recession())
    return out


def from_projection_form(S_constraints: Sequence[Constraint], k: int,
                         name: str = "") -> ProblemInstance:
    """Build an instance selecting the last ``k`` coordinates of the feasible set.

    The resulting map is ``A = (0 | I)``, so the image is exactly the usual
    coordinate projection of the feasible set onto its trailing block.
    """
    if k < 1:
        raise DimensionMismatch("k must be >= 1")
    if not S_constraints:
        raise ParseError("need at least one constraint")
    n = S_constraints[0].dim()
    if any(c.dim() != n for c in S_constraints):
        raise DimensionMismatch("constraints disagree on the ambient dimension")
    if k > n:
        raise DimensionMismatch(f"k={k} exceeds ambient dimension {n}")
    A = np.hstack([np.zeros((k, n - k)), np.eye(k)])
    return ProblemInstance(A=A, constraints=list(S_constraints), n=n, a=k, name=name)


# ---------------------------------------------------------------------------
# File format.  A problem file is a JSON document:
#   {"name": str, "n": int, "a": int, "A": [[...], ...],
#    "constraints": [{"type": "linear", "a": [...], "b": x}
#                    | {"type": "quadratic", "P": [[...]], "q": [...], "r": x}
#                    | {"type": "soc", "C": [[...]], "e": [...], "f": [...], "g": x}],
#    "known_point": [...]?}
# Matrices are row-major nested arrays, all reals IEEE doubles.
# ---------------------------------------------------------------------------

def _constraint_from_dict(d: dict, n: int, idx: int) -> Constraint:
    try:
        kind = d["type"]
    except (TypeError, KeyError):
        raise ParseError(f"constraint {idx}: missing 'type'")
    try:
        if kind == "linear":
            return LinearConstraint(_as_vector(d["a"], n, "a"), float(d["b"]))
        if kind == "quadratic":
            return QuadraticConstraint(
                _as_matrix(d["P"], (n, n), "P"),
                _as_vector(d["q"], n, "q"),
                float(d["r"]),
            )
        if kind == "soc":
            C = np.atleast_2d(np.asarray(d["C"], dtype=float))
            if C.shape[1] != n:
                raise DimensionMismatch(f"C: expected {n} columns, got {C.shape[1]}")
            return SecondOrderConeConstraint(
                C,
                _as_vector(d["e"], C.shape[0], "e"),
                _as_vector(d["f"], n, "f"),
                float(d["g"]),
            )
    except KeyError as exc:
        raise ParseError(f"constraint {idx}: missing field {exc}")
    except (TypeError, ValueError) as exc:
        raise ParseError(f"constraint {idx}: {exc}")
    raise ParseError(f"constraint {idx}: unknown type {kind!r}")


def _constraint_to_dict(c: Constraint) -> dict:
    if isinstance(c, LinearConstraint):
        return {"type": "linear", "a": c.a.tolist(), "b": c.b}
    if isinstance(c, QuadraticConstraint):
        return {"type": "quadratic", "P": c.P.tolist(), "q": c.q.tolist(), "r": c.r}
    if isinstance(c, SecondOrderConeConstraint):
        return {"type": "soc", "C": c.C.tolist(), "e": c.e.tolist(),
                "f": c.f.tolist(), "g": c.g}
    raise TypeError(f"unknown constraint type {type(c)}")


def instance_from_dict(doc: dict) -> ProblemInstance:
    try:
        n = int(doc["n"])
        a = int(doc["a"])
        raw = doc["constraints"]
    except (TypeError, KeyError) as exc:
        raise ParseError(f"missing field {exc}")
    if not isinstance(raw, list) or not raw:
        raise ParseError("'constraints' must be a non-empty list")
    constraints = [_constraint_from_dict(d, n, i) for i, d in enumerate(raw)]
    known = doc.get("known_point")
    return ProblemInstance(
        A=_as_matrix(doc.get("A"), (a, n), "A"),
        constraints=constraints,
        n=n,
        a=a,
        known_point=None if known is None else np.asarray(known, dtype=float),
        name=str(doc.get("name", "")),
    )


def instance_to_dict(instance: ProblemInstance) -> dict:
    doc = {
        "name": instance.name,
        "n": instance.n,
        "a": instance.a,
        "A": instance.A.tolist(),
        "constraints": [_constraint_to_dict(c) for c in instance.constraints],
    }
    if instance.known_point is not None:
        doc["known_point"] = instance.known_point.tolist()
    return doc


def sample_feasible(instance: ProblemInstance, count: int,
                    rng: np.random.Generator, interior_point: np.ndarray,
                    t_cap: float = 1e3) -> np.ndarray:
    """Sample feasible points by shooting rays from an interior point.

    Walks random directions from ``interior_point`` to the boundary (bisection
    on the worst constraint value, capped at ``t_cap`` for unbounded sets) and
    returns points at several depths along each ray, biased toward the
    boundary where cuts are tight.
    """
    x0 = np.asarray(interior_point, dtype=float)
    fractions = np.array([0.25, 0.6, 0.9, 0.999])
    out = [x0.copy()]
    while len(out) < count:
        d = rng.normal(size=instance.n)
        d /= np.linalg.norm(d)
        lo, hi = 0.0, 1.0
        while instance.max_violation(x0 + hi * d) <= 0.0 and hi < t_cap:
            lo, hi = hi, hi * 2.0
        if hi >= t_cap:
            t_star = t_cap
        else:
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if instance.max_violation(x0 + mid * d) <= 0.0:
                    lo = mid
                else:
                    hi = mid
            t_star = lo
        for f in fractions:
            if len(out) >= count:
                break
            out.append(x0 + f * t_star * d)
    return np.array(out[:count])


def load_instance(path) -> ProblemInstance:
    """Load and validate a problem file (see the format note above)."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}")
    if not isinstance(doc, dict):
        raise ParseError(f"{path}: top level must be an object")
    return instance_from_dict(doc)


def save_instance(instance: ProblemInstance, path) -> None:
    with open(path, "w") as fh:
        json.dump(instance_to_dict(instance), fh, indent=2)
        fh.write("\n")
