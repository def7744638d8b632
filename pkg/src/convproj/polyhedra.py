"""Polyhedral kernel: H/V conversion, recession cones, l1-ball geometry.

Everything here is plain floating point with explicit tolerances.  Halfspace
normals are kept l1-normalized (the package measures all image-space
distances in the l1 norm, whose unit ball is itself a polyhedron, so caps of
cones stay polyhedral and vertex enumeration applies to them).

The H-to-V conversion is an incremental double description sweep on the
homogenization cone {(y, t) : W y <= alpha t, t >= 0}; rays with positive
homogenizing coordinate become vertices, the rest become rays, and lineality
directions are emitted as opposite ray pairs.  Vertices of degenerate
(lower-dimensional) polyhedra are accepted as produced; downstream algorithms
only require a superset of the true vertex set to stay correct.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import (
    DimensionGuardExceeded,
    EmptyPolyhedron,
    NumericalFailure,
    UnboundedInput,
)
from .model import LinearConstraint
from .solver import ConvexProgram, LinearObjective, OPTIMAL, solve

DEDUP_TOL = 1e-8
DIM_GUARD = 6
# Activity tolerance inside the double description sweep (rows and rays are
# l2-normalized there, so this is an absolute cosine-scale threshold).
_ZERO_TOL = 1e-9
# Homogenizing coordinate below which a generator counts as a ray, not vertex.
_RAY_TOL = 1e-7


@dataclass(frozen=True)
class Halfspace:
    """Closed halfspace {y : w @ y <= alpha} with ||w||_1 = 1."""

    w: np.ndarray
    alpha: float


def make_halfspace(w, alpha: float) -> Halfspace:
    w = np.asarray(w, dtype=float)
    norm = np.linalg.norm(w, 1)
    if norm <= 0.0 or not np.isfinite(norm):
        raise ValueError("halfspace normal must be nonzero and finite")
    return Halfspace(w / norm, float(alpha) / norm)


@dataclass
class PolyhedronH:
    """Intersection of halfspaces; the empty list denotes the whole space."""

    halfspaces: list
    dim: int


@dataclass
class PolyhedronV:
    """conv(vertices) + cone(rays); rays are l1-normalized."""

    vertices: np.ndarray
    rays: np.ndarray
    dim: int


def whole_space(dim: int) -> PolyhedronH:
    return PolyhedronH([], dim)


def _lex_sorted(rows: np.ndarray) -> np.ndarray:
    if rows.shape[0] <= 1:
        return rows
    order = np.lexsort(rows.T[::-1])
    return rows[order]


def dedup_rows(rows: np.ndarray, tol: float = DEDUP_TOL) -> np.ndarray:
    """Drop rows that repeat an earlier row within l1 distance ``tol``."""
    if rows.shape[0] <= 1:
        return rows
    out = []
    for r in rows:
        if not any(np.linalg.norm(r - q, 1) <= tol for q in out):
            out.append(r)
    return np.array(out)


# ---------------------------------------------------------------------------
# double description on a homogeneous cone {x : B x <= 0}
# ---------------------------------------------------------------------------

def _dd_cone(B: np.ndarray):
    """Return (lineality, rays, activity) generating {x : B x <= 0}.

    ``lineality`` rows span the lineality space, ``rays`` rows are extreme rays
    modulo lineality (l2-normalized), ``activity[i, j]`` says ray i is tight at
    constraint j.
    """
    m, D = B.shape
    lin = np.eye(D)
    rays = np.zeros((0, D))
    act = np.zeros((0, m), dtype=bool)

    for j in range(m):
        b = B[j]
        if lin.shape[0] > 0:
            s_lin = lin @ b
            i0 = int(np.argmax(np.abs(s_lin)))
            if np.abs(s_lin[i0]) > _ZERO_TOL:
                # The cut slices the lineality space: keep the orthogonal part
                # as lineality, absorb the sliced direction into the rays.
                l0, s0 = lin[i0], s_lin[i0]
                others = [i for i in range(lin.shape[0]) if i != i0]
                lin_new = lin[others] - np.outer(s_lin[others] / s0, l0)
                if rays.shape[0] > 0:
                    rays = rays - np.outer((rays @ b) / s0, l0)
                    norms = np.linalg.norm(rays, axis=1, keepdims=True)
                    rays = rays / np.maximum(norms, 1e-300)
                rb = -np.sign(s0) * l0
                rb = rb / np.linalg.norm(rb)
                lin = lin_new
                if lin.shape[0] > 0:
                    norms = np.linalg.norm(lin, axis=1, keepdims=True)
                    lin = lin / np.maximum(norms, 1e-300)
                rays = np.vstack([rays, rb[None, :]])
                new_act = np.zeros((rays.shape[0], m), dtype=bool)
                if act.shape[0] > 0:
                    new_act[:-1, :] = act
                new_act[:-1, j] = True   # adjusted rays are tight at b
                new_act[-1, :j] = True   # rb came from lineality: tight before
                new_act[-1, j] = False
                act = new_act
                continue

        if rays.shape[0] == 0:
            continue
        s = rays @ b
        plus = s > _ZERO_TOL
        minus = s < -_ZERO_TOL
        zero = ~plus & ~minus
        act[:, j] = zero
        if not plus.any():
            continue

        keep_mask = minus | zero
        new_rays = []
        new_acts = []
        if minus.any():
            need = max(D - lin.shape[0] - 2, 0)
            plus_idx = np.flatnonzero(plus)
            minus_idx = np.flatnonzero(minus)
            prev = act[:, :j + 1]
            for ni in minus_idx:
                counts = (prev[plus_idx] & prev[ni]).sum(axis=1)
                for pi in plus_idx[counts >= need]:
                    common = prev[pi] & prev[ni]
                    idx = np.flatnonzero(common)
                    if idx.size:
                        dominated = np.all(act[:, idx], axis=1)
                        dominated[pi] = dominated[ni] = False
                        if dominated.any():
                            continue
                    elif rays.shape[0] > 2:
                        continue
                    v = s[pi] * rays[ni] - s[ni] * rays[pi]
                    norm = np.linalg.norm(v)
                    if norm <= 1e-14:
                        continue
                    new_rays.append(v / norm)
                    a = act[pi] & act[ni]
                    a[j] = True
                    new_acts.append(a)
        rays = np.vstack([rays[keep_mask]] + [np.array(new_rays)]) \
            if new_rays else rays[keep_mask]
        act = np.vstack([act[keep_mask]] + [np.array(new_acts)]) \
            if new_acts else act[keep_mask]

    return lin, rays, act


def dd_convert(P: PolyhedronH, dim_guard: int = DIM_GUARD,
               dedup_tol: float = DEDUP_TOL) -> PolyhedronV:
    """Convert an H-polyhedron to its vertex/ray representation.

    Raises :class:`EmptyPolyhedron` when the halfspace system is infeasible and
    :class:`DimensionGuardExceeded` above ``dim_guard`` (double description and
    l1-ball facet counts grow too fast beyond desk scale).
    """
    dim = P.dim
    if dim > dim_guard:
        raise DimensionGuardExceeded(f"dim {dim} exceeds guard {dim_guard}")
    D = dim + 1
    rows = [np.zeros(D)]
    rows[0][dim] = -1.0   # homogenizing coordinate t >= 0
    for h in P.halfspaces:
        r = np.concatenate([h.w, [-h.alpha]])
        rows.append(r / np.linalg.norm(r))
    B = np.vstack(rows)

    lin, rays, _ = _dd_cone(B)

    vertices = []
    ray_dirs = []
    for l in lin:
        if abs(l[dim]) > 1e-7:
            raise NumericalFailure("lineality escaped the homogenization plane")
        d = l[:dim]
        norm = np.linalg.norm(d, 1)
        if norm > 1e-12:
            ray_dirs.append(d / norm)
            ray_dirs.append(-d / norm)
    for r in rays:
        t = r[dim]
        if t > _RAY_TOL:
            vertices.append(r[:dim] / t)
        else:
            d = r[:dim]
            norm = np.linalg.norm(d, 1)
            if norm > 1e-12:
                ray_dirs.append(d / norm)

    if not vertices:
        raise EmptyPolyhedron("halfspace system has no feasible point")

    V = dedup_rows(np.array(vertices), dedup_tol)
    R = dedup_rows(np.array(ray_dirs), dedup_tol) if ray_dirs else np.zeros((0, dim))
    return PolyhedronV(_lex_sorted(V), _lex_sorted(R), dim)


# ---------------------------------------------------------------------------
# cones and the l1 ball
# ---------------------------------------------------------------------------

def recession_cone_h(P: PolyhedronH) -> PolyhedronH:
    """Homogeneous system {d : w @ d <= 0 for every facet of P}."""
    return PolyhedronH([Halfspace(h.w.copy(), 0.0) for h in P.halfspaces], P.dim)


def unit_l1_ball(dim: int, dim_guard: int = DIM_GUARD) -> PolyhedronH:
    """H-representation of {y : ||y||_1 <= 1}; one facet per sign pattern."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if dim > dim_guard:
        raise DimensionGuardExceeded(f"l1 ball needs 2^{dim} facets")
    halves = []
    for signs in product((1.0, -1.0), repeat=dim):
        halves.append(make_halfspace(np.array(signs), 1.0))
    return PolyhedronH(halves, dim)


def cone_cap_directions(C: PolyhedronH, dim_guard: int = DIM_GUARD,
                        dedup_tol: float = DEDUP_TOL) -> np.ndarray:
    """Vertices of ``C`` intersected with the unit l1 ball, origin removed.

    ``C`` must be homogeneous.  Every returned direction is renormalized onto
    the l1 unit sphere; the trivial cone yields an empty array.
    """
    for h in C.halfspaces:
        if abs(h.alpha) > 1e-12:
            raise ValueError("cone cap requires a homogeneous halfspace system")
    cap = intersect(unit_l1_ball(C.dim, dim_guard), C.halfspaces,
                    dedup_tol=dedup_tol)
    V = dd_convert(cap, dim_guard=dim_guard, dedup_tol=dedup_tol)
    dirs = [v / np.linalg.norm(v, 1) for v in V.vertices
            if np.linalg.norm(v, 1) > 0.5]
    if not dirs:
        return np.zeros((0, C.dim))
    return _lex_sorted(dedup_rows(np.array(dirs), dedup_tol))


def diameter(D) -> float:
    """Largest pairwise l1 distance; 0 for at most one point."""
    pts = np.atleast_2d(np.asarray(D, dtype=float))
    if pts.shape[0] <= 1:
        return 0.0
    diff = pts[:, None, :] - pts[None, :, :]
    return float(np.abs(diff).sum(axis=2).max())


# ---------------------------------------------------------------------------
# membership, intersection, distances
# ---------------------------------------------------------------------------

def contains(P: PolyhedronH, y, tol: float = 1e-9) -> bool:
    y = np.asarray(y, dtype=float)
    return all(h.w @ y <= h.alpha + tol for h in P.halfspaces)


def intersect(P: PolyhedronH, cuts: Iterable[Halfspace],
              dedup_tol: float = DEDUP_TOL) -> PolyhedronH:
    """Concatenate new halfspaces onto P, skipping near-duplicates."""
    out = list(P.halfspaces)
    for h in cuts:
        dup = any(
            max(np.linalg.norm(h.w - g.w, 1), abs(h.alpha - g.alpha)) <= dedup_tol
            for g in out
        )
        if not dup:
            out.append(h)
    return PolyhedronH(out, P.dim)


def point_to_polytope_l1(y, vertices, tol: float = 1e-7) -> float:
    """l1 distance from a point to the convex hull of ``vertices``.

    Solved as a small linear program over convex-combination weights plus l1
    slack variables, on the same barrier engine as every other subproblem.
    """
    y = np.asarray(y, dtype=float)
    V = np.atleast_2d(np.asarray(vertices, dtype=float))
    k, a = V.shape
    best_vertex = float(np.abs(V - y).sum(axis=1).min())
    if k == 1 or best_vertex <= 1e-12:
        return best_vertex
    nv = k + a   # variables: weights beta, slacks s
    cons = []
    for i in range(a):
        row = np.zeros(nv)
        row[:k] = V[:, i]
        row[k + i] = -1.0
        cons.append(LinearConstraint(row, float(y[i])))
        row2 = np.zeros(nv)
        row2[:k] = -V[:, i]
        row2[k + i] = -1.0
        cons.append(LinearConstraint(row2, float(-y[i])))
    for jj in range(k):
        row = np.zeros(nv)
        row[jj] = -1.0
        cons.append(LinearConstraint(row, 0.0))
    eq_A = np.zeros((1, nv))
    eq_A[0, :k] = 1.0
    obj = np.zeros(nv)
    obj[k:] = 1.0
    start = np.zeros(nv)
    start[:k] = 1.0 / k
    resid = V.T @ start[:k] - y
    start[k:] = np.abs(resid) + 1.0
    prog = ConvexProgram(n=nv, objective=LinearObjective(obj), ineq=cons,
                         eq_A=eq_A, eq_b=np.ones(1))
    res = solve(prog, tol=tol, x_start=start, strict=False)
    if res.status != OPTIMAL:
        raise NumericalFailure("distance LP did not reach optimality")
    # The LP can only undershoot by its own gap; clip into [0, best_vertex].
    return float(min(max(res.objective_value, 0.0), best_vertex))


def hausdorff(P: PolyhedronV, Q: PolyhedronV) -> float:
    """Hausdorff distance (l1) between two bounded V-polytopes."""
    if P.rays.shape[0] or Q.rays.shape[0]:
        raise UnboundedInput("hausdorff needs bounded inputs; cap cones first")
    if P.vertices.shape[0] == 0 and Q.vertices.shape[0] == 0:
        return 0.0
    d_pq = max(point_to_polytope_l1(v, Q.vertices) for v in P.vertices)
    d_qp = max(point_to_polytope_l1(v, P.vertices) for v in Q.vertices)
    return max(d_pq, d_qp)


# ---------------------------------------------------------------------------
# export schema: {"halfspaces": [{"w": [...], "alpha": a}],
#                 "vertices": [[...]], "rays": [[...]]}
# ---------------------------------------------------------------------------

def polyhedron_to_dict(H: Optional[PolyhedronH],
                       V: Optional[PolyhedronV] = None) -> dict:
    doc = {"halfspaces": [], "vertices": [], "rays": []}
    if H is not None:
        doc["halfspaces"] = [{"w": h.w.tolist(), "alpha": h.alpha}
                             for h in H.halfspaces]
        doc["dim"] = H.dim
    if V is not None:
        doc["vertices"] = V.vertices.tolist()
        doc["rays"] = V.rays.tolist()
        doc["dim"] = V.dim
    return doc


def polyhedron_from_dict(doc: dict):
    dim = int(doc["dim"])
    H = PolyhedronH(
        [Halfspace(np.asarray(h["w"], dtype=float), float(h["alpha"]))
         for h in doc.get("halfspaces", [])],
        dim,
    )
    verts = np.asarray(doc.get("vertices", []), dtype=float).reshape(-1, dim)
    rays = np.asarray(doc.get("rays", []), dtype=float).reshape(-1, dim)
    V = PolyhedronV(verts, rays, dim)
    return H, V
