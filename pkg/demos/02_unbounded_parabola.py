"""Two unbounded planar images: a parabola epigraph and its rotated twin.

The upright epigraph's single recession direction (0, 1) is a vertex of the
l1 unit ball, so the recession search certifies it immediately and the outer
direction set closes onto it.  Rotating the set by 30 degrees moves the
recession ray off the ball vertices: no probe direction is ever exactly
aspirated, no inner direction is found, and the run instead terminates once
the outer cone becomes delta-thin.  Both outcomes are valid finite
(epsilon, delta)-certificates; they differ in whether the inner approximation
is unbounded (first case) or bounded (second).
"""

import numpy as np

from convproj import gallery
from convproj.algorithms import solve_general
from convproj.model import Tolerances
from convproj.plotting import emit_plot_data

tols = Tolerances(epsilon=0.01, delta=0.1)

upright = gallery.parabola_image(0.0)
bundle = solve_general(upright, tols, v=np.array([0.0, 2.0]))
print("upright epigraph:")
print("  termination:", bundle.termination)
print("  inner directions:", bundle.Y_in.tolist())
print("  outer directions:", np.round(bundle.Y_out, 4).tolist())
print(f"  optimizations={bundle.stats.n_scalarizations} "
      f"polyhedron_evals={bundle.stats.n_polyhedron_evals}")
emit_plot_data(bundle, upright, "parabola_upright")

rotated = gallery.parabola_image(np.pi / 6)
bundle = solve_general(rotated, tols, v=rotated.A @ rotated.known_point)
true_dir = np.array([np.sin(np.pi / 6), np.cos(np.pi / 6)])
true_dir /= np.linalg.norm(true_dir, 1)
print("rotated epigraph:")
print("  termination:", bundle.termination)
print("  inner directions:", bundle.Y_in.tolist())
print("  outer directions:", np.round(bundle.Y_out, 4).tolist())
print("  true recession direction:", np.round(true_dir, 4).tolist())
print(f"  optimizations={bundle.stats.n_scalarizations} "
      f"polyhedron_evals={bundle.stats.n_polyhedron_evals}")
emit_plot_data(bundle, rotated, "parabola_rotated")
