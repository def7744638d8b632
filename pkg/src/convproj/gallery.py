"""Ready-made problem instances used by the demos and the test suite."""

from __future__ import annotations

import numpy as np

from .model import (
    ProblemInstance,
    QuadraticConstraint,
    SecondOrderConeConstraint,
)


def unit_disk(a: int = 2) -> ProblemInstance:
    """The Euclidean unit ball mapped by the identity."""
    n = a
    return ProblemInstance(
        A=np.eye(n),
        constraints=[QuadraticConstraint(2.0 * np.eye(n), np.zeros(n), -1.0)],
        n=n,
        a=a,
        known_point=np.zeros(n),
        name=f"unit_disk_{n}d",
    )


def intersecting_ellipses_2d() -> ProblemInstance:
    """Two ellipsoids in R^3, image = projection onto the first two coordinates."""
    c1 = QuadraticConstraint(
        P=np.diag([2.0, 0.5, 2.0]),
        q=np.array([0.0, -0.5, 0.0]),
        r=-0.75,
    )
    c2 = QuadraticConstraint(
        P=np.diag([0.5, 2.0, 0.5]),
        q=np.array([-0.5, 0.0, -0.5]),
        r=-0.5,
    )
    A = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    return ProblemInstance(A=A, constraints=[c1, c2], n=3, a=2,
                           known_point=np.array([0.5, 0.5, 0.5]),
                           name="intersecting_ellipses_2d")


def intersecting_ellipses_3d() -> ProblemInstance:
    """Two ellipsoids in R^4, image = projection onto the first three coordinates."""
    c1 = QuadraticConstraint(
        P=np.diag([2.0, 0.5, 2.0, 0.5]),
        q=np.array([0.0, -0.5, 0.0, -0.5]),
        r=-0.5,
    )
    c2 = QuadraticConstraint(
        P=np.diag([0.5, 2.0, 0.5, 2.0]),
        q=np.array([-0.5, 0.0, -0.5, 0.0]),
        r=-0.5,
    )
    A = np.hstack([np.eye(3), np.zeros((3, 1))])
    return ProblemInstance(A=A, constraints=[c1, c2], n=4, a=3,
                           known_point=np.array([0.5, 0.5, 0.5, 0.5]),
                           name="intersecting_ellipses_3d")


def parabola_image(theta: float = 0.0) -> ProblemInstance:
    """A parabola epigraph rotated clockwise by ``theta``, mapped by the identity.

    The set is {x : (x1 cos t - x2 sin t)^2 <= x1 sin t + x2 cos t}; its single
    recession direction is (sin t, cos t).  For theta = 0 this is the plain
    epigraph of x -> x^2 with recession ray (0, 1).
    """
    c, s = np.cos(theta), np.sin(theta)
    m = np.array([c, -s])
    P = 2.0 * np.outer(m, m)
    q = -np.array([s, c])
    if theta == 0.0:
        known = np.array([0.0, 2.0])
    else:
        known = np.array([c - s, s + c])
    return ProblemInstance(
        A=np.eye(2),
        constraints=[QuadraticConstraint(P, q, 0.0)],
        n=2,
        a=2,
        known_point=known,
        name=f"parabola_theta_{theta:.4f}",
    )


def tube(theta: float = np.pi / 3) -> ProblemInstance:
    """An unbounded elliptic cylinder whose axis is a full line.

    The set is {x : x1^2 + (x2 cos t - x3 sin t)^2 <= 1}; its recession cone is
    the line spanned by (0, sin t, cos t).
    """
    c, s = np.cos(theta), np.sin(theta)
    m = np.array([0.0, c, -s])
    P = 2.0 * (np.outer(np.array([1.0, 0.0, 0.0]), np.array([1.0, 0.0, 0.0]))
               + np.outer(m, m))
    return ProblemInstance(
        A=np.eye(3),
        constraints=[QuadraticConstraint(P, np.zeros(3), -1.0)],
        n=3,
        a=3,
        known_point=np.zeros(3),
        name=f"tube_theta_{theta:.4f}",
    )


def round_cone() -> ProblemInstance:
    """The second-order cone {x : ||(x1, x2)|| <= x3}, mapped by the identity."""
    C = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    soc = SecondOrderConeConstraint(C, np.zeros(2), np.array([0.0, 0.0, 1.0]), 0.0)
    return ProblemInstance(
        A=np.eye(3),
        constraints=[soc],
        n=3,
        a=3,
        known_point=np.array([0.0, 0.0, 1.0]),
        name="round_cone",
    )


def random_ellipsoid_instance(rng: np.random.Generator, n: int, n_ellipsoids: int,
                              a: int) -> ProblemInstance:
    """Intersection of random ellipsoids sharing an interior point, random map.

    The ellipsoids are centered near a common anchor so the instance always has
    a strictly feasible point; the image is bounded because each ellipsoid is.
    """
    anchor = rng.uniform(-1.0, 1.0, size=n)
    constraints = []
    for _ in range(n_ellipsoids):
        B = rng.normal(size=(n, n)) / np.sqrt(n)
        Q = B.T @ B + 0.3 * np.eye(n)
        center = anchor + rng.uniform(-0.2, 0.2, size=n)
        # (x-c)^T Q (x-c) <= 1 in the standard quadratic form.
        constraints.append(QuadraticConstraint(2.0 * Q, -2.0 * Q @ center,
                                               float(center @ Q @ center) - 1.0))
    A = rng.normal(size=(a, n))
    return ProblemInstance(A=A, constraints=constraints, n=n, a=a,
                           known_point=anchor, name="random_ellipsoids")
