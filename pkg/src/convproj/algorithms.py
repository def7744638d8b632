"""Drivers that assemble scalarization cuts into certified approximations.

``solve_bounded`` handles instances with a bounded image: an initial bundle of
weighted-sum cuts boxes the image, then every vertex of the running outer
approximation is pulled toward the image with a norm minimization until all
vertices sit within ``epsilon`` (l1) of it.

``approximate_recession`` brackets the recession cone of an unbounded image
between an inner set of certified recession directions and the recession cone
of the running outer approximation, refining until the two are ``delta``-close
on the unit l1 cap or the outer cone itself is ``delta``-thin.

``solve_general`` chains the two: recession phase first, vertex refinement
second, final outer direction set read off the finished approximation.  On a
bounded instance it reduces exactly to ``solve_bounded`` (same cuts, same
counters), which the test suite pins down.

``verify_bundle`` re-derives every guarantee of a finished bundle from scratch
against the instance: cone consistency, certified inner directions, vertex
distances, and a sampled cut audit.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import IterationLimit, NumericalFailure, UnboundedProblem
from .model import ProblemInstance, Tolerances, sample_feasible
from .polyhedra import (
    PolyhedronH,
    PolyhedronV,
    cone_cap_directions,
    dd_convert,
    diameter,
    intersect,
    make_halfspace,
    point_to_polytope_l1,
    polyhedron_from_dict,
    polyhedron_to_dict,
    recession_cone_h,
    whole_space,
)
from .scalarize import (
    Cut,
    STATUS_OPTIMAL,
    STATUS_UNBOUNDED,
    _image_matched_recession,
    norm_min,
    pascoletti_serafini,
    weighted_sum,
)
from .solver import phase_one

INIT_BOX = "box"
INIT_SIMPLEX = "simplex"

TERM_BOUNDED = "BoundedConverged"
TERM_RECESSION = "RecessionFoundConverged"
TERM_THIN_CONE = "ThinConeConverged"

MAX_SCALARIZATIONS = 100_000


@dataclass
class RunStats:
    n_scalarizations: int = 0
    n_polyhedron_evals: int = 0
    n_iterations: int = 0
    n_cache_hits: int = 0
    wall_time: float = 0.0
    max_cut_shift: float = 0.0


@dataclass
class SolutionBundle:
    X_bar: np.ndarray
    Y_in: np.ndarray
    Y_out: np.ndarray
    A0_h: PolyhedronH
    A0_v: PolyhedronV
    stats: RunStats
    termination: str
    tolerances: Tolerances


@dataclass
class VerificationReport:
    cone_consistent: Optional[bool] = None        # c1 structural + analytic
    inner_directions_recede: Optional[bool] = None  # c2
    vertices_near_hull: Optional[bool] = None     # c3
    cuts_contain_samples: Optional[bool] = None
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        checks = [self.cone_consistent, self.inner_directions_recede,
                  self.vertices_near_hull, self.cuts_contain_samples]
        return all(c is not False for c in checks)


class _PointSet:
    """Insertion-ordered point collection with proximity dedup."""

    def __init__(self, dim: int, tol: float):
        self.rows: list[np.ndarray] = []
        self.dim = dim
        self.tol = tol

    def add(self, x: np.ndarray) -> None:
        x = np.asarray(x, dtype=float)
        for r in self.rows:
            if np.linalg.norm(x - r, 1) <= self.tol:
                return
        self.rows.append(x)

    def array(self) -> np.ndarray:
        if not self.rows:
            return np.zeros((0, self.dim))
        return np.array(self.rows)

    def __len__(self):
        return len(self.rows)


class _DirSet(_PointSet):
    def contains(self, d: np.ndarray) -> bool:
        return any(np.linalg.norm(d - r, 1) <= self.tol for r in self.rows)

    def nearest(self, d: np.ndarray):
        dists = [np.linalg.norm(d - r, 1) for r in self.rows]
        i = int(np.argmin(dists))
        return self.rows[i], dists[i]


def _initial_weights(a: int, variant: str) -> list:
    basis = [np.eye(a)[i] for i in range(a)]
    if variant == INIT_BOX:
        return basis + [-w for w in basis]
    if variant == INIT_SIMPLEX:
        return basis + [-np.ones(a)]
    raise ValueError(f"unknown init variant {variant!r}")


def _strict_point(instance: ProblemInstance, tolerances: Tolerances) -> np.ndarray:
    if instance.known_point is not None \
            and instance.max_violation(instance.known_point) < -1e-6:
        return instance.known_point
    return phase_one(instance.constraints, instance.n,
                     tol=tolerances.solver_tol,
                     box_limit=tolerances.unbounded_cap,
                     x0=instance.known_point)


def _strict_preimage(instance: ProblemInstance, v: np.ndarray,
                     tolerances: Tolerances) -> np.ndarray:
    """Strictly feasible x with A x = v (needed to anchor directional probes)."""
    kp = instance.known_point
    if kp is not None and np.linalg.norm(instance.A @ kp - v, np.inf) <= 1e-9 \
            and instance.max_violation(kp) < -1e-6:
        return kp
    from .solver import ConvexProgram, LinearObjective, OPTIMAL, solve
    from .solver import _ShiftedConstraint, box_constraints
    from .model import LinearConstraint
    from .errors import FailedPhaseOne
    n = instance.n
    total = n + 1
    lifted = [_ShiftedConstraint(c, n) for c in instance.constraints]
    e_s = np.zeros(total)
    e_s[n] = 1.0
    aux = [LinearConstraint(-e_s, 1.0)]
    aux += box_constraints(n, tolerances.unbounded_cap, total=total)
    eq_A = np.hstack([instance.A, np.zeros((instance.a, 1))])
    prog = ConvexProgram(n=total, objective=LinearObjective(e_s),
                         ineq=lifted + aux, eq_A=eq_A, eq_b=v)
    res = solve(prog, tol=min(tolerances.solver_tol, 1e-6))
    if res.status != OPTIMAL or res.x[n] >= -tolerances.solver_tol:
        raise FailedPhaseOne(
            "anchor point has no strictly feasible preimage")
    return res.x[:n]


def _stabilize_cut(cut: Cut, protected, reach: float) -> Cut:
    """Snap a cut facet onto certified recession directions it grazes.

    Dual recovery is accurate but not exact; a cut whose supporting hyperplane
    should contain a certified recession direction can acquire a tilt of the
    order of the solver tolerance, which would falsely clip that direction out
    of the outer cone.  Certified directions are never legitimately cut, so any
    positive facet value against them is noise: project it away and widen the
    offset by the displacement times the reach of the relevant bounded region.
    """
    if protected is None or len(protected) == 0:
        return cut
    w = cut.halfspace.w.copy()
    alpha = cut.halfspace.alpha
    moved = 0.0
    for _ in range(4):
        worst = 0.0
        for r in protected:
            s = float(w @ r)
            if s > 0.1:
                raise NumericalFailure(
                    "cut strongly violates a certified recession direction")
            if s > 0.0:
                w = w - s * r / float(r @ r)
                moved += abs(s) * np.linalg.norm(r, 1)
                worst = max(worst, s)
        if worst == 0.0:
            break
    if moved == 0.0:
        return cut
    norm = np.linalg.norm(w, 1)
    if norm <= 1e-12:
        raise NumericalFailure("cut normal vanished during stabilization")
    extra = moved * reach
    hs = make_halfspace(w, alpha + extra)
    return Cut(hs, cut.source, cut.generator_x, cut.shift + extra)


def _reach_bound(images: np.ndarray) -> float:
    if images.shape[0] == 0:
        return 10.0
    return 10.0 + 2.0 * float(np.abs(images).sum(axis=1).max())


def _vertex_iteration(instance, tolerances, A0, X_bar, stats, x0, protected,
                      max_iter):
    """Refine A0 until every vertex is epsilon-close (l1) to the image.

    One pass solves a norm minimization per new vertex of A0 (results are
    cached across passes keyed by vertex location), collects the cuts of all
    vertices farther than epsilon, and applies them in one batch.  Terminates
    on the first pass that produces no cut.
    """
    eps = tolerances.epsilon
    cache_keys: list[np.ndarray] = []
    cache_znorm: list[float] = []
    for _ in range(max_iter):
        stats.n_iterations += 1
        A0_v = dd_convert(A0, dedup_tol=tolerances.dedup_tol)
        stats.n_polyhedron_evals += 1
        reach = _reach_bound(A0_v.vertices)
        cuts = []
        for v in A0_v.vertices:
            if cache_keys:
                dists = [np.linalg.norm(v - k, 1) for k in cache_keys]
                if min(dists) <= tolerances.dedup_tol:
                    stats.n_cache_hits += 1
                    continue
            if stats.n_scalarizations >= MAX_SCALARIZATIONS:
                raise IterationLimit("scalarization budget exhausted")
            out = norm_min(instance, v, tolerances, x_start=x0)
            stats.n_scalarizations += 1
            X_bar.add(out.x)
            znorm = float(np.linalg.norm(out.alpha_or_z, 1))
            cache_keys.append(np.asarray(v, dtype=float))
            cache_znorm.append(znorm)
            if out.cut is not None and znorm > eps:
                cut = _stabilize_cut(out.cut, protected, reach)
                cuts.append(cut)
                stats.max_cut_shift = max(stats.max_cut_shift, cut.shift)
        if not cuts:
            return A0, A0_v
        A0 = intersect(A0, [c.halfspace for c in cuts],
                       dedup_tol=tolerances.dedup_tol)
    raise IterationLimit("vertex refinement exceeded the iteration cap")


def _weighted_init(instance, tolerances, variant, stats, x0, X_bar, A0,
                   require_bounded):
    all_bounded = True
    for w in _initial_weights(instance.a, variant):
        out = weighted_sum(instance, w, tolerances, x_start=x0)
        stats.n_scalarizations += 1
        if out.status == STATUS_UNBOUNDED:
            if require_bounded:
                raise UnboundedProblem(
                    "image is unbounded; use the general driver")
            all_bounded = False
            continue
        X_bar.add(out.x)
        A0 = intersect(A0, [out.cut.halfspace], dedup_tol=tolerances.dedup_tol)
        stats.max_cut_shift = max(stats.max_cut_shift, out.cut.shift)
    return A0, all_bounded


def solve_bounded(instance: ProblemInstance, tolerances: Tolerances,
                  init_variant: str = INIT_BOX,
                  max_iter: int = 200) -> SolutionBundle:
    """Outer-approximate a bounded image to a finite epsilon-guarantee.

    Raises :class:`UnboundedProblem` as soon as an initialization direction
    proves unbounded.
    """
    t0 = time.monotonic()
    stats = RunStats()
    x0 = _strict_point(instance, tolerances)
    X_bar = _PointSet(instance.n, tolerances.dedup_tol)
    A0, _ = _weighted_init(instance, tolerances, init_variant, stats, x0,
                           X_bar, whole_space(instance.a), require_bounded=True)
    A0, A0_v = _vertex_iteration(instance, tolerances, A0, X_bar, stats, x0,
                                 protected=None, max_iter=max_iter)
    stats.wall_time = time.monotonic() - t0
    empty = np.zeros((0, instance.a))
    return SolutionBundle(X_bar.array(), empty, empty, A0, A0_v, stats,
                          TERM_BOUNDED, tolerances)


@dataclass
class RecessionPhase:
    X_bar: _PointSet
    A0: PolyhedronH
    Y_in: np.ndarray
    Y_out: np.ndarray
    stats: RunStats
    x0: np.ndarray
    anchor: np.ndarray
    structurally_bounded: bool


def approximate_recession(instance: ProblemInstance, tolerances: Tolerances,
                          v: Optional[np.ndarray] = None,
                          init_variant: str = INIT_BOX,
                          max_iter: int = 200,
                          stats: Optional[RunStats] = None) -> RecessionPhase:
    """Bracket the recession cone of the image between certified directions.

    ``v`` may supply a known image point (its strictly feasible preimage is
    recovered); otherwise the anchor is the image of a strictly feasible point
    found by phase one.  Returns the feasible points, running outer
    approximation and both direction sets; ``Y_in`` holds only directions whose
    directional advance was certified unbounded.
    """
    stats = stats if stats is not None else RunStats()
    delta = tolerances.delta
    if v is None:
        x0 = _strict_point(instance, tolerances)
        v = instance.A @ x0
    else:
        v = np.asarray(v, dtype=float)
        x0 = _strict_preimage(instance, v, tolerances)

    X_bar = _PointSet(instance.n, tolerances.dedup_tol)
    Y_in = _DirSet(instance.a, tolerances.dedup_tol)
    Delta = _DirSet(instance.a, tolerances.dedup_tol)
    A0, all_bounded = _weighted_init(instance, tolerances, init_variant, stats,
                                     x0, X_bar, whole_space(instance.a),
                                     require_bounded=False)
    if all_bounded:
        # Every coordinate direction produced a cut, so A0 is already bounded
        # and its recession cone is trivial; no cap evaluation is needed.
        Y_out = np.zeros((0, instance.a))
    else:
        Y_out = cone_cap_directions(recession_cone_h(A0),
                                    dedup_tol=tolerances.dedup_tol)
        stats.n_polyhedron_evals += 1

    def reach():
        imgs = X_bar.array() @ instance.A.T if len(X_bar) else np.zeros((0, instance.a))
        return _reach_bound(imgs)

    def probe(d, cuts):
        if stats.n_scalarizations >= MAX_SCALARIZATIONS:
            raise IterationLimit("scalarization budget exhausted")
        out = pascoletti_serafini(instance, v, d, tolerances, x_start=x0)
        stats.n_scalarizations += 1
        if out.status == STATUS_UNBOUNDED:
            Y_in.add(d)
        else:
            X_bar.add(out.x)
            cut = _stabilize_cut(out.cut, Y_in.rows, reach())
            cuts.append(cut)
            stats.max_cut_shift = max(stats.max_cut_shift, cut.shift)

    # Search for one certified recession direction.
    passes = 0
    while len(Y_in) == 0 and diameter(Y_out) > delta:
        passes += 1
        if passes > max_iter:
            raise IterationLimit("recession search exceeded the iteration cap")
        stats.n_iterations += 1
        cuts: list[Cut] = []
        total = Y_out.sum(axis=0)
        norm = np.linalg.norm(total, 1)
        if norm > 1e-12:
            probe(total / norm, cuts)
        for d in Y_out:
            probe(d, cuts)
        if cuts:
            A0 = intersect(A0, [c.halfspace for c in cuts],
                           dedup_tol=tolerances.dedup_tol)
            Y_out = cone_cap_directions(recession_cone_h(A0),
                                        dedup_tol=tolerances.dedup_tol)
            stats.n_polyhedron_evals += 1

    # Match every remaining outer direction to the certified inner set.
    passes = 0
    while True:
        if diameter(Y_out) <= delta:
            break
        pending = [d for d in Y_out
                   if not (Y_in.contains(d) or Delta.contains(d))]
        if not pending:
            break
        passes += 1
        if passes > max_iter:
            raise IterationLimit("cone matching exceeded the iteration cap")
        stats.n_iterations += 1
        cuts = []
        for d in pending:
            rd, dist = Y_in.nearest(d)
            if dist <= delta:
                Delta.add(d)
            else:
                mid = 0.5 * d + 0.5 * rd
                mid = mid / np.linalg.norm(mid, 1)
                probe(mid, cuts)
        if cuts:
            A0 = intersect(A0, [c.halfspace for c in cuts],
                           dedup_tol=tolerances.dedup_tol)
            Y_out = cone_cap_directions(recession_cone_h(A0),
                                        dedup_tol=tolerances.dedup_tol)
            stats.n_polyhedron_evals += 1

    return RecessionPhase(X_bar, A0, Y_in.array(), Y_out, stats, x0, v,
                          structurally_bounded=all_bounded)


def solve_general(instance: ProblemInstance, tolerances: Tolerances,
                  init_variant: str = INIT_BOX,
                  v: Optional[np.ndarray] = None,
                  max_iter: int = 200) -> SolutionBundle:
    """Approximate a possibly unbounded image to an (epsilon, delta) guarantee."""
    t0 = time.monotonic()
    stats = RunStats()
    phase = approximate_recession(instance, tolerances, v=v,
                                  init_variant=init_variant,
                                  max_iter=max_iter, stats=stats)
    A0, A0_v = _vertex_iteration(instance, tolerances, phase.A0, phase.X_bar,
                                 stats, phase.x0,
                                 protected=list(phase.Y_in), max_iter=max_iter)
    if phase.structurally_bounded:
        Y_out = np.zeros((0, instance.a))
    else:
        Y_out = cone_cap_directions(recession_cone_h(A0),
                                    dedup_tol=tolerances.dedup_tol)
        stats.n_polyhedron_evals += 1
    if phase.Y_in.shape[0] > 0:
        termination = TERM_RECESSION
    elif Y_out.shape[0] > 0:
        termination = TERM_THIN_CONE
    else:
        termination = TERM_BOUNDED
    stats.wall_time = time.monotonic() - t0
    return SolutionBundle(phase.X_bar.array(), phase.Y_in, Y_out, A0, A0_v,
                          stats, termination, tolerances)


# ---------------------------------------------------------------------------
# verification
# ---------------------------------------------------------------------------

def _cap_polytope(directions: np.ndarray, dim: int) -> PolyhedronV:
    pts = np.vstack([directions, np.zeros((1, dim))]) if directions.shape[0] \
        else np.zeros((1, dim))
    return PolyhedronV(pts, np.zeros((0, dim)), dim)


def verify_bundle(bundle: SolutionBundle, instance: ProblemInstance,
                  analytic_recession: Optional[PolyhedronH] = None,
                  seed: int = 0, n_samples: int = 500) -> VerificationReport:
    """Re-check every guarantee of a finished bundle against the instance.

    Conditions: (c1) the reported outer directions generate exactly the
    recession cone of A0, and, when an analytic recession cone is supplied,
    match it to within delta on the unit l1 cap; (c2) every inner direction is
    re-certified as a recession direction of the image (image-matched
    recession program plus ray sampling of the feasible set); (c3) every
    vertex of A0 lies within epsilon plus the recorded cut shift (l1) of the
    hull of the image points.  Finally all cuts are re-audited against sampled
    feasible points.
    """
    from .polyhedra import hausdorff

    tols = bundle.tolerances
    report = VerificationReport()
    a = instance.a
    slack = tols.epsilon + bundle.stats.max_cut_shift + 1e-6

    # c1: structural cone consistency + analytic comparison.
    cap_dirs = cone_cap_directions(recession_cone_h(bundle.A0_h),
                                   dedup_tol=tols.dedup_tol)
    d_struct = hausdorff(_cap_polytope(bundle.Y_out, a),
                         _cap_polytope(cap_dirs, a))
    report.details["cone_structural_gap"] = d_struct
    report.cone_consistent = d_struct <= 1e-6
    if analytic_recession is not None:
        analytic_dirs = cone_cap_directions(analytic_recession,
                                            dedup_tol=tols.dedup_tol)
        d_analytic = hausdorff(_cap_polytope(bundle.Y_out, a),
                               _cap_polytope(analytic_dirs, a))
        report.details["cone_analytic_gap"] = d_analytic
        report.cone_consistent = report.cone_consistent \
            and d_analytic <= tols.delta

    # c2: inner directions must genuinely recede.
    x0 = _strict_point(instance, tols)
    v0 = instance.A @ x0
    inner_ok = True
    for y in bundle.Y_in:
        cert = _image_matched_recession(instance, y, tols)
        if cert is not None and cert.unbounded and cert.ray is not None:
            ok = all(
                instance.max_violation(x0 + t * cert.ray) <= 1e-7 * max(1.0, t)
                for t in (1.0, 10.0, 1e3))
        else:
            ok = True
            for t in (1.0, 10.0, 100.0):
                out = norm_min(instance, v0 + t * y, tols, x_start=x0)
                if np.linalg.norm(out.alpha_or_z) > 100 * tols.solver_tol * (1 + t):
                    ok = False
                    break
        if not ok:
            inner_ok = False
            break
    report.inner_directions_recede = inner_ok if bundle.Y_in.shape[0] else True

    # c3: vertices of A0 close to the hull of image points.
    images = bundle.X_bar @ instance.A.T
    worst = 0.0
    c3 = True
    for vtx in bundle.A0_v.vertices:
        if images.shape[0] == 0:
            c3 = False
            break
        fast = float(np.abs(images - vtx).sum(axis=1).min())
        dist = fast if fast <= slack else point_to_polytope_l1(vtx, images)
        worst = max(worst, dist)
        if dist > slack:
            c3 = False
    report.details["worst_vertex_distance"] = worst
    report.vertices_near_hull = c3

    # Cut audit on sampled feasible points.
    rng = np.random.default_rng(seed)
    samples = sample_feasible(instance, n_samples, rng, x0)
    audit_slack = bundle.stats.max_cut_shift + 1e-6
    audit = True
    worst_violation = -np.inf
    for x in samples:
        y = instance.A @ x
        for h in bundle.A0_h.halfspaces:
            viol = float(h.w @ y - h.alpha)
            worst_violation = max(worst_violation, viol)
            if viol > audit_slack:
                audit = False
    report.details["worst_cut_violation"] = worst_violation
    report.cuts_contain_samples = audit
    return report


# ---------------------------------------------------------------------------
# bundle serialization: {X_bar, Y_in, Y_out, A0: {halfspaces, vertices, rays},
#                        stats, termination, tolerances}
# ---------------------------------------------------------------------------

def bundle_to_dict(bundle: SolutionBundle) -> dict:
    return {
        "X_bar": bundle.X_bar.tolist(),
        "Y_in": bundle.Y_in.tolist(),
        "Y_out": bundle.Y_out.tolist(),
        "A0": polyhedron_to_dict(bundle.A0_h, bundle.A0_v),
        "stats": {
            "n_scalarizations": bundle.stats.n_scalarizations,
            "n_polyhedron_evals": bundle.stats.n_polyhedron_evals,
            "n_iterations": bundle.stats.n_iterations,
            "n_cache_hits": bundle.stats.n_cache_hits,
            "wall_time": bundle.stats.wall_time,
            "max_cut_shift": bundle.stats.max_cut_shift,
        },
        "termination": bundle.termination,
        "tolerances": {
            "epsilon": bundle.tolerances.epsilon,
            "delta": bundle.tolerances.delta,
            "solver_tol": bundle.tolerances.solver_tol,
            "unbounded_cap": bundle.tolerances.unbounded_cap,
            "dedup_tol": bundle.tolerances.dedup_tol,
        },
    }


def bundle_from_dict(doc: dict) -> SolutionBundle:
    H, V = polyhedron_from_dict(doc["A0"])
    a = H.dim
    stats = RunStats(**doc["stats"])
    tols = Tolerances(**doc["tolerances"])
    X = np.asarray(doc["X_bar"], dtype=float)
    if X.size == 0:
        X = np.zeros((0, 0))
    return SolutionBundle(
        X_bar=X,
        Y_in=np.asarray(doc["Y_in"], dtype=float).reshape(-1, a),
        Y_out=np.asarray(doc["Y_out"], dtype=float).reshape(-1, a),
        A0_h=H,
        A0_v=V,
        stats=stats,
        termination=doc["termination"],
        tolerances=tols,
    )


def save_bundle(bundle: SolutionBundle, path) -> None:
    with open(path, "w") as fh:
        json.dump(bundle_to_dict(bundle), fh, indent=1)
        fh.write("\n")


def load_bundle(path) -> SolutionBundle:
    with open(path) as fh:
        return bundle_from_dict(json.load(fh))
