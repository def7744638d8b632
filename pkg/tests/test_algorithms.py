"""Tests for the three drivers and the bundle verifier."""

import numpy as np
import pytest

from convproj import gallery
from convproj.errors import UnboundedProblem
from convproj.model import QuadraticConstraint, Tolerances, from_projection_form
from convproj.algorithms import (
    SolutionBundle,
    approximate_recession,
    bundle_from_dict,
    bundle_to_dict,
    load_bundle,
    save_bundle,
    solve_bounded,
    solve_general,
    verify_bundle,
)
from convproj.polyhedra import (
    PolyhedronH,
    PolyhedronV,
    contains,
    diameter,
    hausdorff,
    make_halfspace,
    point_to_polytope_l1,
)
from convproj.scalarize import _image_matched_recession


def parabola_recession_h():
    # Analytic recession cone of the upright parabola epigraph: d1 = 0, d2 >= 0.
    return PolyhedronH(
        [make_halfspace([1.0, 0.0], 0.0), make_halfspace([-1.0, 0.0], 0.0),
         make_halfspace([0.0, -1.0], 0.0)], 2)


class TestSolveBounded:
    def test_disk_sandwich(self):
        # Oracle: the disk's support in direction w is ||w||_2, so A0 must
        # contain every boundary point and stay within epsilon of the hull.
        inst = gallery.unit_disk()
        tols = Tolerances(epsilon=0.5, delta=0.1)
        bundle = solve_bounded(inst, tols)
        assert bundle.termination == "BoundedConverged"
        angles = np.linspace(0, 2 * np.pi, 64, endpoint=False)
        boundary = np.stack([np.cos(angles), np.sin(angles)], axis=1)
        slack = bundle.stats.max_cut_shift + 1e-9
        for y in boundary:
            assert contains(bundle.A0_h, y, tol=slack)
        hull = bundle.X_bar @ inst.A.T
        d = hausdorff(bundle.A0_v,
                      PolyhedronV(hull, np.zeros((0, 2)), 2))
        assert d <= tols.epsilon + slack

    def test_unbounded_instance_rejected(self):
        with pytest.raises(UnboundedProblem):
            solve_bounded(gallery.parabola_image(0.0),
                          Tolerances(epsilon=0.1, delta=0.1))

    def test_termination_audit(self):
        # On convergence every vertex has a witness point within epsilon.
        inst = gallery.intersecting_ellipses_2d()
        tols = Tolerances(epsilon=0.05, delta=0.1)
        bundle = solve_bounded(inst, tols)
        images = bundle.X_bar @ inst.A.T
        for v in bundle.A0_v.vertices:
            assert np.abs(images - v).sum(axis=1).min() \
                <= tols.epsilon + bundle.stats.max_cut_shift + 1e-9

    def test_outer_monotone_across_iterations(self):
        # Rebuild the refinement by hand: each batch of cuts only shrinks A0,
        # so all new vertices must lie inside the previous approximation.
        from convproj.algorithms import _PointSet, RunStats, _vertex_iteration, _weighted_init
        from convproj.polyhedra import dd_convert, intersect, whole_space
        from convproj.scalarize import norm_min

        inst = gallery.unit_disk()
        tols = Tolerances(epsilon=0.05, delta=0.1)
        stats = RunStats()
        X = _PointSet(inst.n, tols.dedup_tol)
        A0, _ = _weighted_init(inst, tols, "box", stats, np.zeros(2), X,
                               whole_space(2), require_bounded=True)
        prev_h = None
        for _ in range(8):
            V = dd_convert(A0)
            if prev_h is not None:
                for v in V.vertices:
                    assert contains(prev_h, v, tol=1e-7)
            cuts = []
            for v in V.vertices:
                out = norm_min(inst, v, tols, x_start=np.zeros(2))
                if out.cut is not None \
                        and np.linalg.norm(out.alpha_or_z, 1) > tols.epsilon:
                    cuts.append(out.cut.halfspace)
            if not cuts:
                break
            prev_h = A0
            A0 = intersect(A0, cuts)


class TestApproximateRecession:
    def test_parabola_finds_vertical_ray(self):
        inst = gallery.parabola_image(0.0)
        tols = Tolerances(epsilon=0.01, delta=0.1)
        phase = approximate_recession(inst, tols, v=np.array([0.0, 2.0]))
        assert phase.Y_in.shape[0] == 1
        np.testing.assert_allclose(phase.Y_in[0], [0.0, 1.0], atol=1e-9)
        # Outer directions bracket the ray and match it within delta.
        for d in phase.Y_out:
            assert np.linalg.norm(d - np.array([0.0, 1.0]), 1) <= tols.delta

    def test_bounded_instance_no_directions(self):
        inst = gallery.intersecting_ellipses_2d()
        tols = Tolerances(epsilon=0.05, delta=0.1)
        stats_iters = approximate_recession(inst, tols)
        assert stats_iters.Y_in.shape[0] == 0
        assert stats_iters.Y_out.shape[0] == 0
        # No recession passes ran at all.
        assert stats_iters.stats.n_iterations == 0
        assert stats_iters.structurally_bounded

    def test_rotated_parabola_thin_cone(self):
        inst = gallery.parabola_image(np.pi / 6)
        tols = Tolerances(epsilon=0.01, delta=0.1)
        phase = approximate_recession(inst, tols, v=inst.A @ inst.known_point)
        assert phase.Y_in.shape[0] == 0
        assert diameter(phase.Y_out) <= tols.delta
        true_dir = np.array([np.sin(np.pi / 6), np.cos(np.pi / 6)])
        true_dir /= np.linalg.norm(true_dir, 1)
        # The true direction lies in the cone spanned by the outer directions.
        hull = np.vstack([phase.Y_out, np.zeros(2)])
        assert point_to_polytope_l1(true_dir, hull) <= 1e-6

    def test_inner_directions_recertify(self):
        # Everything placed in Y_in must have entered through an unbounded
        # advance; re-run the certificate for each member.
        inst = gallery.round_cone()
        tols = Tolerances(epsilon=0.05, delta=0.2)
        phase = approximate_recession(inst, tols)
        assert phase.Y_in.shape[0] > 0
        for y in phase.Y_in:
            cert = _image_matched_recession(inst, y, tols)
            assert cert is not None and cert.unbounded

    def test_outer_matched_to_inner_on_termination(self):
        # On exit each outer direction is delta-close to the certified inner
        # set unless the whole outer cap is already delta-thin.
        inst = gallery.round_cone()
        tols = Tolerances(epsilon=0.05, delta=0.2)
        phase = approximate_recession(inst, tols)
        if diameter(phase.Y_out) > tols.delta:
            for d in phase.Y_out:
                dist = min(np.linalg.norm(d - r, 1) for r in phase.Y_in)
                assert dist <= tols.delta + 1e-9


class TestSolveGeneral:
    def test_tube_lineality(self):
        inst = gallery.tube()
        tols = Tolerances(epsilon=0.05, delta=0.1)
        bundle = solve_general(inst, tols)
        assert bundle.termination == "RecessionFoundConverged"
        axis = np.array([0.0, np.sin(np.pi / 3), np.cos(np.pi / 3)])
        axis /= np.linalg.norm(axis, 1)
        hull = np.vstack([bundle.Y_out, np.zeros(3)])
        assert point_to_polytope_l1(axis, hull) <= 1e-6
        assert point_to_polytope_l1(-axis, hull) <= 1e-6

    def test_recession_cone_never_grows(self):
        # Final outer directions stay inside the cone found by the recession
        # phase (the vertex refinement can only shrink it).
        inst = gallery.parabola_image(0.0)
        tols = Tolerances(epsilon=0.01, delta=0.1)
        phase = approximate_recession(inst, tols, v=np.array([0.0, 2.0]))
        bundle = solve_general(inst, tols, v=np.array([0.0, 2.0]))
        hull = np.vstack([phase.Y_out, np.zeros(2)])
        for d in bundle.Y_out:
            assert point_to_polytope_l1(d, hull) <= 1e-6

    def test_bounded_matches_solve_bounded(self):
        inst = gallery.intersecting_ellipses_2d()
        tols = Tolerances(epsilon=0.05, delta=0.1)
        b1 = solve_bounded(inst, tols)
        b2 = solve_general(inst, tols)
        assert b2.termination == "BoundedConverged"
        np.testing.assert_array_equal(b1.X_bar, b2.X_bar)
        assert len(b1.A0_h.halfspaces) == len(b2.A0_h.halfspaces)
        for h1, h2 in zip(b1.A0_h.halfspaces, b2.A0_h.halfspaces):
            np.testing.assert_array_equal(h1.w, h2.w)
            assert h1.alpha == h2.alpha
        assert b1.stats.n_scalarizations == b2.stats.n_scalarizations
        assert b1.stats.n_polyhedron_evals == b2.stats.n_polyhedron_evals
        assert b1.stats.n_iterations == b2.stats.n_iterations

    def test_inner_combinations_stay_in_image(self):
        # Points of conv A[X_bar] + small cone combinations of Y_in project
        # back onto the image within the degraded zero-detection of the
        # squared-norm engine.
        from convproj.scalarize import norm_min

        inst = gallery.parabola_image(0.0)
        tols = Tolerances(epsilon=0.05, delta=0.1)
        bundle = solve_general(inst, tols, v=np.array([0.0, 2.0]))
        rng = np.random.default_rng(3)
        imgs = bundle.X_bar @ inst.A.T
        assert bundle.Y_in.shape[0] == 1
        for coef in (1.0, 100.0, 1000.0):
            w = rng.dirichlet(np.ones(imgs.shape[0]))
            pt = w @ imgs + coef * bundle.Y_in[0]
            out = norm_min(inst, pt, tols, x_start=inst.known_point)
            resid = np.linalg.norm(out.alpha_or_z)
            assert resid <= np.sqrt(40 * tols.solver_tol * (1 + coef))


class TestVerifyBundle:
    def test_parabola_bundle_all_pass(self):
        inst = gallery.parabola_image(0.0)
        tols = Tolerances(epsilon=0.01, delta=0.1)
        bundle = solve_general(inst, tols, v=np.array([0.0, 2.0]))
        report = verify_bundle(bundle, inst,
                               analytic_recession=parabola_recession_h(),
                               seed=1)
        assert report.cone_consistent
        assert report.inner_directions_recede
        assert report.vertices_near_hull
        assert report.cuts_contain_samples
        assert report.passed

    def test_displaced_vertex_fails_c3(self):
        inst = gallery.intersecting_ellipses_2d()
        tols = Tolerances(epsilon=0.05, delta=0.1)
        bundle = solve_bounded(inst, tols)
        bad = bundle.A0_v.vertices.copy()
        centroid = (bundle.X_bar @ inst.A.T).mean(axis=0)
        outward = bad[0] - centroid
        outward /= np.linalg.norm(outward, 1)
        bad[0] = bad[0] + 2 * tols.epsilon * outward
        broken = SolutionBundle(bundle.X_bar, bundle.Y_in, bundle.Y_out,
                                bundle.A0_h,
                                PolyhedronV(bad, bundle.A0_v.rays, 2),
                                bundle.stats, bundle.termination, tols)
        report = verify_bundle(broken, inst, seed=1)
        assert not report.vertices_near_hull
        assert not report.passed

    def test_bounded_bundle_trivial_cones(self):
        inst = gallery.unit_disk()
        tols = Tolerances(epsilon=0.3, delta=0.1)
        bundle = solve_bounded(inst, tols)
        report = verify_bundle(bundle, inst, seed=0, n_samples=100)
        assert report.cone_consistent         # both caps empty
        assert report.inner_directions_recede  # vacuous
        assert report.passed


class TestProjectionFormEquivalence:
    def test_lifted_instance_same_image(self):
        # The disk presented directly and as a projection of a cylinder in R^3
        # must produce outer approximations within Hausdorff distance 2 eps.
        tols = Tolerances(epsilon=0.1, delta=0.1)
        direct = gallery.unit_disk()
        # Cylinder {(z, y1, y2) : y in disk, |z| <= 1} projected onto (y1, y2).
        P = np.zeros((3, 3))
        P[1, 1] = P[2, 2] = 2.0
        ball = QuadraticConstraint(P, np.zeros(3), -1.0)
        zcap = QuadraticConstraint(np.diag([2.0, 0.0, 0.0]), np.zeros(3), -1.0)
        lifted = from_projection_form([ball, zcap], k=2)
        b1 = solve_bounded(direct, tols)
        b2 = solve_bounded(lifted, tols)
        d = hausdorff(b1.A0_v, b2.A0_v)
        assert d <= 2 * tols.epsilon


class TestBundleSerialization:
    def test_round_trip_bit_exact(self, tmp_path):
        inst = gallery.parabola_image(0.0)
        tols = Tolerances(epsilon=0.05, delta=0.1)
        bundle = solve_general(inst, tols, v=np.array([0.0, 2.0]))
        path = tmp_path / "bundle.json"
        save_bundle(bundle, path)
        loaded = load_bundle(path)
        np.testing.assert_array_equal(loaded.X_bar, bundle.X_bar)
        np.testing.assert_array_equal(loaded.Y_in, bundle.Y_in)
        np.testing.assert_array_equal(loaded.Y_out, bundle.Y_out)
        np.testing.assert_array_equal(loaded.A0_v.vertices,
                                      bundle.A0_v.vertices)
        for h1, h2 in zip(loaded.A0_h.halfspaces, bundle.A0_h.halfspaces):
            np.testing.assert_array_equal(h1.w, h2.w)
            assert h1.alpha == h2.alpha
        assert loaded.termination == bundle.termination
        assert loaded.stats.n_scalarizations == bundle.stats.n_scalarizations
        # A second duplication must be byte-identical.
        doc1 = bundle_to_dict(bundle)
        doc2 = bundle_to_dict(bundle_from_dict(doc1))
        assert doc1 == doc2
