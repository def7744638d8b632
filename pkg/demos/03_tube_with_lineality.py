"""A set whose recession cone is a full line: an infinite elliptic cylinder.

The cylinder {x : x1^2 + (x2 cos t - x3 sin t)^2 <= 1} recedes along the line
spanned by (0, sin t, cos t) in both directions.  The recession search
certifies both signed axis directions, the vertex refinement then wraps the
bounded cross-section, and the final outer cone collapses to exactly that
line.
"""

import numpy as np

from convproj import gallery
from convproj.algorithms import solve_general
from convproj.model import Tolerances
from convproj.plotting import emit_plot_data

theta = np.pi / 3
instance = gallery.tube(theta)
tols = Tolerances(epsilon=0.01, delta=0.1)

bundle = solve_general(instance, tols)
axis = np.array([0.0, np.sin(theta), np.cos(theta)])
axis /= np.linalg.norm(axis, 1)

print("termination:", bundle.termination)
print("axis (l1-normalized):", np.round(axis, 4).tolist())
print("inner directions:", np.round(bundle.Y_in, 4).tolist())
print("outer directions:", np.round(bundle.Y_out, 4).tolist())
print(f"optimizations={bundle.stats.n_scalarizations} "
      f"polyhedron_evals={bundle.stats.n_polyhedron_evals}")

paths = emit_plot_data(bundle, instance, "tube")
print("meshes written to:", ", ".join(paths))
