"""Tests for problem loading, validation and recession constraints."""

import json

import numpy as np
import pytest

from convproj import gallery
from convproj.errors import DimensionMismatch, NotConvex, ParseError
from convproj.model import (
    LinearConstraint,
    QuadraticConstraint,
    SecondOrderConeConstraint,
    from_projection_form,
    instance_to_dict,
    load_instance,
    recession_constraints,
    save_instance,
)

# ---------------------------------------------------------------------------
# Independent oracle: d is a recession direction of {x : g_i(x) <= 0} iff
# x + t d stays feasible for arbitrarily large t from any feasible x.  Checked
# by brute force at t up to 1e6 from a fixed interior point.
# ---------------------------------------------------------------------------

def ray_oracle(constraints, x0, d, t_max=1e6):
    ts = [1.0, 10.0, 1e2, 1e3, 1e4, 1e6]
    return all(
        all(c.value(x0 + t * d) <= 1e-6 * max(1.0, t) for c in constraints)
        for t in ts if t <= t_max
    )


def direction_grid(dim, per_axis=9):
    axes = [np.linspace(-1.0, 1.0, per_axis)] * dim
    pts = np.stack(np.meshgrid(*axes), axis=-1).reshape(-1, dim)
    norms = np.sum(np.abs(pts), axis=1)
    pts = pts[norms > 1e-9]
    return pts / np.sum(np.abs(pts), axis=1, keepdims=True)


def in_recession_system(rec, d, tol=1e-9):
    return all(c.value(d) <= tol for c in rec)


class TestRecessionConstraints:
    def test_parabola_matches_ray_oracle(self):
        inst = gallery.parabola_image(0.0)
        rec = recession_constraints(inst)
        x0 = np.array([0.0, 2.0])
        for d in direction_grid(2):
            assert in_recession_system(rec, d) == ray_oracle(inst.constraints, x0, d)

    def test_parabola_closed_form(self):
        # {x: x1^2 <= x2} recedes exactly along {d1 = 0, d2 >= 0}.
        rec = recession_constraints(gallery.parabola_image(0.0))
        assert in_recession_system(rec, np.array([0.0, 1.0]))
        assert not in_recession_system(rec, np.array([0.0, -1.0]))
        assert not in_recession_system(rec, np.array([0.5, 0.5]))

    def test_bounded_ellipsoid_trivial_cone(self):
        inst = gallery.unit_disk(2)
        rec = recession_constraints(inst)
        for d in direction_grid(2):
            assert not in_recession_system(rec, d)
        assert in_recession_system(rec, np.zeros(2))

    def test_tube_line_matches_ray_oracle(self):
        theta = np.pi / 3
        inst = gallery.tube(theta)
        rec = recession_constraints(inst)
        axis = np.array([0.0, np.sin(theta), np.cos(theta)])
        axis /= np.linalg.norm(axis, 1)
        assert in_recession_system(rec, axis)
        assert in_recession_system(rec, -axis)
        x0 = np.zeros(3)
        for d in direction_grid(3, per_axis=5):
            assert in_recession_system(rec, d, tol=1e-7) == ray_oracle(
                inst.constraints, x0, d)

    def test_cone_recedes_into_itself(self):
        inst = gallery.round_cone()
        rec = recession_constraints(inst)
        assert in_recession_system(rec, np.array([0.0, 0.0, 1.0]))
        assert in_recession_system(rec, np.array([0.3, 0.4, 0.5]))
        assert not in_recession_system(rec, np.array([0.0, 0.0, -1.0]))

    def test_feasible_rays_stay_feasible(self):
        # Sampled recession directions keep sampled feasible points feasible.
        rng = np.random.default_rng(7)
        for inst in [gallery.parabola_image(np.pi / 6), gallery.tube(),
                     gallery.round_cone()]:
            rec = recession_constraints(inst)
            dirs = [d for d in direction_grid(inst.n, per_axis=5)
                    if in_recession_system(rec, d, tol=1e-9)]
            x0 = inst.known_point
            for d in dirs:
                for t in (1.0, 10.0, 1e3):
                    x = x0 + t * d
                    assert inst.max_violation(x) <= 1e-7 * max(1.0, t)


class TestProjectionForm:
    def test_zero_identity_shape(self):
        ball = QuadraticConstraint(2.0 * np.eye(3), np.zeros(3), -1.0)
        inst = from_projection_form([ball], k=2)
        assert inst.n == 3 and inst.a == 2
        np.testing.assert_allclose(inst.A, [[0, 1, 0], [0, 0, 1]])

    def test_full_projection_is_identity(self):
        ball = QuadraticConstraint(2.0 * np.eye(2), np.zeros(2), -1.0)
        inst = from_projection_form([ball], k=2)
        np.testing.assert_allclose(inst.A, np.eye(2))

    def test_k_too_large(self):
        ball = QuadraticConstraint(2.0 * np.eye(2), np.zeros(2), -1.0)
        with pytest.raises(DimensionMismatch):
            from_projection_form([ball], k=3)


class TestLoadInstance:
    def test_round_trip(self, tmp_path):
        inst = gallery.intersecting_ellipses_2d()
        path = tmp_path / "inst.json"
        save_instance(inst, path)
        loaded = load_instance(path)
        assert loaded.n == 3 and loaded.a == 2
        np.testing.assert_array_equal(loaded.A, inst.A)
        assert len(loaded.constraints) == 2
        np.testing.assert_array_equal(loaded.constraints[0].P, inst.constraints[0].P)

    def test_simple_schema(self, tmp_path):
        doc = {
            "name": "halfparabola",
            "n": 2,
            "a": 2,
            "A": [[1.0, 0.0], [0.0, 1.0]],
            "constraints": [
                {"type": "quadratic", "P": [[2.0, 0.0], [0.0, 0.0]],
                 "q": [0.0, -1.0], "r": 0.0}
            ],
        }
        path = tmp_path / "p.json"
        path.write_text(json.dumps(doc))
        inst = load_instance(path)
        assert inst.n == inst.a == 2
        assert isinstance(inst.constraints[0], QuadraticConstraint)

    def test_indefinite_matrix_rejected(self, tmp_path):
        doc = {
            "n": 2, "a": 2, "A": [[1.0, 0.0], [0.0, 1.0]],
            "constraints": [
                {"type": "quadratic", "P": [[0.0, 1.0], [1.0, 0.0]],
                 "q": [0.0, 0.0], "r": -1.0}
            ],
        }
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(NotConvex):
            load_instance(path)

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(ParseError):
            load_instance(path)

    def test_dimension_mismatch(self, tmp_path):
        doc = {
            "n": 2, "a": 2, "A": [[1.0, 0.0], [0.0, 1.0]],
            "constraints": [{"type": "linear", "a": [1.0, 0.0, 0.0], "b": 1.0}],
        }
        path = tmp_path / "dims.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(DimensionMismatch):
            load_instance(path)

    def test_infeasible_known_point_rejected(self, tmp_path):
        doc = {
            "n": 1, "a": 1, "A": [[1.0]],
            "constraints": [{"type": "linear", "a": [1.0], "b": 0.0}],
            "known_point": [1.0],
        }
        path = tmp_path / "kp.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(ParseError):
            load_instance(path)

    def test_gallery_instances_serialize(self, tmp_path):
        for make in [gallery.intersecting_ellipses_2d, gallery.intersecting_ellipses_3d,
                     gallery.parabola_image, gallery.tube, gallery.round_cone]:
            inst = make()
            d = instance_to_dict(inst)
            path = tmp_path / f"{inst.name}.json"
            path.write_text(json.dumps(d))
            loaded = load_instance(path)
            assert loaded.name == inst.name


class TestConstraintEvaluation:
    def test_linear(self):
        c = LinearConstraint(np.array([1.0, -2.0]), 3.0)
        assert c.value(np.array([1.0, 1.0])) == pytest.approx(-4.0)
        np.testing.assert_array_equal(c.grad(np.zeros(2)), [1.0, -2.0])

    def test_soc_value_and_grad(self):
        c = SecondOrderConeConstraint(np.eye(2), np.zeros(2),
                                      np.zeros(2), 1.0)
        # ||x|| <= 1
        assert c.value(np.array([3.0, 4.0])) == pytest.approx(4.0)
        g = c.grad(np.array([3.0, 4.0]))
        np.testing.assert_allclose(g, [0.6, 0.8])

    def test_soc_recession_drops_offsets(self):
        inst = gallery.round_cone()
        rec = inst.constraints[0].recession()[0]
        assert isinstance(rec, SecondOrderConeConstraint)
        assert rec.g == 0.0
        np.testing.assert_array_equal(rec.e, np.zeros(2))
