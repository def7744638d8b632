"""Approximating a set that is itself a cone: the round second-order cone.

Here the image equals its own recession cone, so the interesting output is the
pair of direction sets: certified inner directions strictly inside the cone
and outer directions spanning a polyhedral cone that contains it, with the two
caps delta-close in the l1 metric.  The vertex phase is nearly free; the apex
is already within epsilon of the image.
"""

import numpy as np

from convproj import gallery
from convproj.algorithms import solve_general, verify_bundle
from convproj.model import Tolerances
from convproj.plotting import emit_plot_data

instance = gallery.round_cone()
tols = Tolerances(epsilon=0.01, delta=0.2)

bundle = solve_general(instance, tols)
print("termination:", bundle.termination)
print("inner directions:", bundle.Y_in.shape[0])
print("outer directions:", bundle.Y_out.shape[0])
print(f"optimizations={bundle.stats.n_scalarizations} "
      f"polyhedron_evals={bundle.stats.n_polyhedron_evals}")

# Every sampled boundary ray of the true cone must lie inside the outer cone.
angles = np.linspace(0, 2 * np.pi, 32, endpoint=False)
rays = np.stack([np.cos(angles), np.sin(angles), np.ones_like(angles)], axis=1)
rays /= np.abs(rays).sum(axis=1, keepdims=True)
from convproj.polyhedra import point_to_polytope_l1
hull = np.vstack([bundle.Y_out, np.zeros(3)])
worst = max(point_to_polytope_l1(r, hull) for r in rays)
print("worst boundary-ray distance to the outer cone cap:", round(worst, 8))

report = verify_bundle(bundle, instance, seed=0, n_samples=200)
print("verification passed:", report.passed)

paths = emit_plot_data(bundle, instance, "round_cone")
print("meshes written to:", ", ".join(paths))
