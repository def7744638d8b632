"""Tests for the three scalarizations: outcomes, cuts, duality residuals."""

import numpy as np
import pytest

from convproj import gallery
from convproj.model import Tolerances, sample_feasible
from convproj.scalarize import (
    STATUS_OPTIMAL,
    STATUS_UNBOUNDED,
    norm_min,
    pascoletti_serafini,
    weighted_sum,
)

TOLS = Tolerances(epsilon=0.01, delta=0.1)


def ellipses_min_first_coordinate_oracle(step=2e-3):
    """Grid oracle for min x1 over the planar two-ellipsoid intersection.

    For fixed (x2, x3) the first constraint gives x1 >= -sqrt(c1) and the
    second x1 >= 1 - 2*sqrt(c2); minimize the max of the two lower bounds over
    a dense grid of the (x2, x3) cross-section.
    """
    x2 = np.arange(-1.0, 1.0 + step, step)
    x3 = np.arange(-1.0, 1.5 + step, step)
    X2, X3 = np.meshgrid(x2, x3)
    c1 = 1.0 - (X2 - 1.0) ** 2 / 4.0 - X3 ** 2
    c2 = 1.0 - X2 ** 2 - (X3 - 1.0) ** 2 / 4.0
    ok = (c1 >= 0.0) & (c2 >= 0.0)
    lo = np.maximum(-np.sqrt(np.where(ok, c1, 0.0)),
                    1.0 - 2.0 * np.sqrt(np.where(ok, c2, 0.0)))
    return float(lo[ok].min())


class TestWeightedSum:
    def test_disk_support(self):
        out = weighted_sum(gallery.unit_disk(), np.array([1.0, 0.0]), TOLS)
        assert out.status == STATUS_OPTIMAL
        np.testing.assert_allclose(out.x, [-1.0, 0.0], atol=1e-4)
        h = out.cut.halfspace
        # {y : y1 >= -1} as a normalized halfspace -y1 <= 1 (+ shift).
        np.testing.assert_allclose(h.w, [-1.0, 0.0], atol=1e-12)
        assert h.alpha == pytest.approx(1.0, abs=1e-4)

    def test_parabola_descending_weight_unbounded(self):
        inst = gallery.parabola_image(0.0)
        out = weighted_sum(inst, np.array([0.0, -1.0]), TOLS,
                           x_start=inst.known_point)
        assert out.status == STATUS_UNBOUNDED
        assert out.cut is None

    def test_parabola_flat_weight_unbounded(self):
        # min x1 diverges along a curved escape; the capped stage must catch it.
        inst = gallery.parabola_image(0.0)
        out = weighted_sum(inst, np.array([1.0, 0.0]), TOLS,
                           x_start=inst.known_point)
        assert out.status == STATUS_UNBOUNDED

    def test_ellipses_min_against_grid_oracle(self):
        inst = gallery.intersecting_ellipses_2d()
        out = weighted_sum(inst, np.array([1.0, 0.0]), TOLS,
                           x_start=inst.known_point)
        oracle = ellipses_min_first_coordinate_oracle()
        assert out.alpha_or_z == pytest.approx(oracle, abs=1e-3)


class TestPascolettiSerafini:
    def test_parabola_descending_probe(self):
        inst = gallery.parabola_image(0.0)
        out = pascoletti_serafini(inst, np.array([0.0, 2.0]),
                                  np.array([0.0, -1.0]), TOLS,
                                  x_start=inst.known_point)
        assert out.status == STATUS_OPTIMAL
        assert out.alpha_or_z == pytest.approx(2.0, abs=1e-4)
        np.testing.assert_allclose(out.x, [0.0, 0.0], atol=1e-3)
        np.testing.assert_allclose(out.lam, [0.0, -1.0], atol=1e-5)
        assert out.lam @ np.array([0.0, -1.0]) == pytest.approx(1.0, abs=1e-7)

    def test_parabola_ascending_probe_unbounded(self):
        inst = gallery.parabola_image(0.0)
        out = pascoletti_serafini(inst, np.array([0.0, 2.0]),
                                  np.array([0.0, 1.0]), TOLS,
                                  x_start=inst.known_point)
        assert out.status == STATUS_UNBOUNDED
        assert out.certificate.method == "recession"

    def test_disk_probe(self):
        inst = gallery.unit_disk()
        out = pascoletti_serafini(inst, np.zeros(2), np.array([1.0, 0.0]),
                                  TOLS, x_start=np.zeros(2))
        assert out.alpha_or_z == pytest.approx(1.0, abs=1e-4)
        np.testing.assert_allclose(out.x, [1.0, 0.0], atol=1e-3)
        np.testing.assert_allclose(out.lam, [1.0, 0.0], atol=1e-4)

    def test_strong_duality_residual(self):
        # alpha* must match -lam@v + sup lam@Ax, the sup evaluated through the
        # weighted-sum scalarization with weight -lam.
        inst = gallery.unit_disk()
        v = np.zeros(2)
        for d in [np.array([1.0, 0.0]), np.array([0.5, 0.5]),
                  np.array([-0.3, 0.7])]:
            out = pascoletti_serafini(inst, v, d, TOLS, x_start=np.zeros(2))
            sup_out = weighted_sum(inst, -out.lam, TOLS, x_start=np.zeros(2))
            sup_val = -sup_out.alpha_or_z
            dual_obj = -out.lam @ v + sup_val
            assert abs(dual_obj - out.alpha_or_z) <= 10 * TOLS.solver_tol

    def test_lambda_normalization_exact(self):
        inst = gallery.parabola_image(np.pi / 6)
        v = inst.A @ inst.known_point
        d = np.array([0.5, 0.5])
        out = pascoletti_serafini(inst, v, d, TOLS, x_start=inst.known_point)
        assert out.status == STATUS_OPTIMAL
        assert abs(out.lam @ d - 1.0) <= 1e-7


class TestNormMin:
    def test_parabola_projection(self):
        inst = gallery.parabola_image(0.0)
        out = norm_min(inst, np.array([0.0, -1.0]), TOLS,
                       x_start=inst.known_point)
        np.testing.assert_allclose(out.x, [0.0, 0.0], atol=1e-3)
        z = out.alpha_or_z
        assert np.linalg.norm(z) == pytest.approx(1.0, abs=1e-5)
        np.testing.assert_allclose(out.lam, [0.0, 1.0], atol=1e-3)
        # Cut is {y : y2 >= -shift}.
        h = out.cut.halfspace
        np.testing.assert_allclose(h.w, [0.0, -1.0], atol=1e-3)
        assert h.alpha <= 1e-3

    def test_interior_point_no_cut(self):
        inst = gallery.unit_disk()
        out = norm_min(inst, np.array([0.1, 0.2]), TOLS, x_start=np.zeros(2))
        assert np.linalg.norm(out.alpha_or_z) <= TOLS.solver_tol
        assert out.cut is None

    def test_disk_exterior_point(self):
        inst = gallery.unit_disk()
        out = norm_min(inst, np.array([2.0, 0.0]), TOLS, x_start=np.zeros(2))
        np.testing.assert_allclose(out.x, [1.0, 0.0], atol=1e-4)
        np.testing.assert_allclose(out.lam, [-1.0, 0.0], atol=1e-4)
        assert np.linalg.norm(out.alpha_or_z) == pytest.approx(1.0, abs=1e-5)
        # Dual has unit Euclidean norm by construction.
        assert np.linalg.norm(out.lam) <= 1.0 + 1e-7

    def test_strong_duality_residual(self):
        inst = gallery.unit_disk()
        for v in [np.array([2.0, 0.0]), np.array([1.5, -1.5]),
                  np.array([0.0, 3.0])]:
            out = norm_min(inst, v, TOLS, x_start=np.zeros(2))
            inf_out = weighted_sum(inst, out.lam, TOLS, x_start=np.zeros(2))
            dual_obj = -out.lam @ v + inf_out.alpha_or_z
            assert abs(dual_obj - np.linalg.norm(out.alpha_or_z)) \
                <= 10 * TOLS.solver_tol


class TestCutValidity:
    @pytest.mark.parametrize("make", [gallery.unit_disk,
                                      gallery.intersecting_ellipses_2d,
                                      lambda: gallery.parabola_image(np.pi / 6),
                                      gallery.round_cone])
    def test_cuts_contain_feasible_images(self, make):
        # Every produced cut must contain the image of 200 sampled feasible
        # points with slack no worse than -(shift + 1e-6).
        inst = make()
        rng = np.random.default_rng(17)
        x0 = inst.known_point
        samples = sample_feasible(inst, 200, rng, x0)
        v0 = inst.A @ x0
        cuts = []
        for i in range(inst.a):
            w = np.zeros(inst.a)
            w[i] = 1.0
            for ww in (w, -w):
                out = weighted_sum(inst, ww, TOLS, x_start=x0)
                if out.cut is not None:
                    cuts.append(out.cut)
        for d in np.vstack([np.eye(inst.a), -np.eye(inst.a)]):
            out = pascoletti_serafini(inst, v0, d, TOLS, x_start=x0)
            if out.status == STATUS_OPTIMAL and out.cut is not None:
                cuts.append(out.cut)
        exterior = v0 + 3.0 * np.ones(inst.a)
        out = norm_min(inst, exterior, TOLS, x_start=x0)
        if out.cut is not None:
            cuts.append(out.cut)
        assert cuts
        for cut in cuts:
            h = cut.halfspace
            for x in samples:
                y = inst.A @ x
                assert h.w @ y - h.alpha <= cut.shift + 1e-6
