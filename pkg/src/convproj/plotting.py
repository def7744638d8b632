"""Plot-data writers: layered SVG for planar runs, OFF meshes for spatial ones.

Unbounded approximations are truncated for plotting only: cone directions are
extended from the hull points out to a recorded truncation radius, so the
files are reproducible from their own header.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .algorithms import SolutionBundle
from .model import ProblemInstance

INNER_COLOR = "#4878cf"   # conv A[X_bar] (+ inner cone)
A0_COLOR = "#f2c744"      # running outer approximation
OUTER_COLOR = "#9467bd"   # hull + outer cone + epsilon ball


def truncation_radius(bundle: SolutionBundle) -> float:
    verts = bundle.A0_v.vertices
    if verts.shape[0] == 0:
        return 5.0
    return max(5.0, 2.0 * float(np.abs(verts).sum(axis=1).max()))


def _extend(points: np.ndarray, directions: np.ndarray, radius: float) -> np.ndarray:
    if directions.shape[0] == 0 or points.shape[0] == 0:
        return points
    far = np.concatenate([points + radius * d for d in directions], axis=0)
    return np.vstack([points, far])


def _l1_ball_corners(eps: float, dim: int) -> np.ndarray:
    return np.vstack([np.eye(dim), -np.eye(dim)]) * eps


def approximation_point_clouds(bundle: SolutionBundle, instance: ProblemInstance,
                               radius: float):
    """Generator point clouds for the three nested approximations.

    Returns (inner, a0, outer): hull points of conv A[X_bar] + cone Y_in,
    of A0, and of conv A[X_bar] + cone Y_out + the epsilon ball, each
    truncated at ``radius`` along its cone directions.
    """
    imgs = bundle.X_bar @ instance.A.T
    eps = bundle.tolerances.epsilon
    inner = _extend(imgs, bundle.Y_in, radius)
    a0 = _extend(bundle.A0_v.vertices, bundle.A0_v.rays, radius)
    corners = _l1_ball_corners(eps, instance.a)
    padded = np.concatenate([imgs + c for c in corners], axis=0)
    outer = _extend(np.vstack([imgs, padded]), bundle.Y_out, radius)
    return inner, a0, outer


def _hull_polygon(points: np.ndarray) -> np.ndarray:
    """Counterclockwise boundary of the 2D hull, tolerant of degeneracy."""
    pts = np.unique(np.round(points, 12), axis=0)
    if pts.shape[0] <= 2:
        return pts
    try:
        hull = ConvexHull(pts)
        return pts[hull.vertices]
    except QhullError:
        # Collinear cloud: order along the principal direction.
        c = pts - pts.mean(axis=0)
        _, _, vt = np.linalg.svd(c, full_matrices=False)
        order = np.argsort(c @ vt[0])
        return pts[order]


def write_svg(path, bundle: SolutionBundle, instance: ProblemInstance,
              radius: float) -> None:
    """Layered SVG of the three planar approximations (largest at the back)."""
    inner, a0, outer = approximation_point_clouds(bundle, instance, radius)
    layers = [
        (OUTER_COLOR, _hull_polygon(outer)),
        (A0_COLOR, _hull_polygon(a0)),
        (INNER_COLOR, _hull_polygon(inner)),
    ]
    all_pts = np.vstack([poly for _, poly in layers if poly.shape[0]])
    lo = all_pts.min(axis=0)
    hi = all_pts.max(axis=0)
    span = np.maximum(hi - lo, 1e-9)
    pad = 0.05 * span.max()
    width, height = span[0] + 2 * pad, span[1] + 2 * pad

    def to_svg(p):
        # SVG's y axis points down.
        return (p[0] - lo[0] + pad, (hi[1] - p[1]) + pad)

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f"<!-- truncation_radius={radius!r} epsilon={bundle.tolerances.epsilon!r} "
        f"termination={bundle.termination} -->",
        f'<svg xmlns="http://www.w3.org/2000/svg" '
        f'viewBox="0 0 {width:.6g} {height:.6g}" '
        f'width="640" height="{640 * height / width:.6g}">',
    ]
    for color, poly in layers:
        if poly.shape[0] == 0:
            continue
        pts = " ".join(f"{x:.6g},{y:.6g}" for x, y in map(to_svg, poly))
        lines.append(
            f'  <polygon points="{pts}" fill="{color}" fill-opacity="0.85" '
            f'stroke="#333" stroke-width="{0.002 * width:.6g}"/>')
    lines.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_off(path, points: np.ndarray, radius: float) -> None:
    """Triangulated hull of a 3D point cloud in OFF format."""
    pts = np.unique(np.round(points, 12), axis=0)
    faces = []
    if pts.shape[0] >= 4:
        try:
            hull = ConvexHull(pts)
        except QhullError:
            try:
                hull = ConvexHull(pts, qhull_options="QJ")
            except QhullError:
                hull = None
        if hull is not None:
            faces = hull.simplices.tolist()
    with open(path, "w") as fh:
        fh.write("OFF\n")
        fh.write(f"# truncation_radius={radius!r}\n")
        fh.write(f"{pts.shape[0]} {len(faces)} 0\n")
        for p in pts:
            fh.write(" ".join(f"{c!r}" for c in p) + "\n")
        for f in faces:
            fh.write(f"3 {f[0]} {f[1]} {f[2]}\n")


def emit_plot_data(bundle: SolutionBundle, instance: ProblemInstance,
                   out_prefix: str, radius: float | None = None) -> list:
    """Write plot files for a bundle; returns the paths written.

    Planar images produce a single layered SVG; spatial ones produce one OFF
    mesh per approximation.
    """
    if radius is None:
        radius = truncation_radius(bundle)
    written = []
    if instance.a == 2:
        path = f"{out_prefix}.svg"
        write_svg(path, bundle, instance, radius)
        written.append(path)
    elif instance.a == 3:
        inner, a0, outer = approximation_point_clouds(bundle, instance, radius)
        for tag, cloud in (("inner", inner), ("a0", a0), ("outer", outer)):
            path = f"{out_prefix}_{tag}.off"
            write_off(path, cloud, radius)
            written.append(path)
    else:
        raise ValueError(f"plot data only supports image dimensions 2 and 3, "
                         f"got {instance.a}")
    return written
