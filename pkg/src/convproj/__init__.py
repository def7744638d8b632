"""Polyhedral approximation of images of convex sets under linear maps.

The package computes verifiable inner and outer polyhedral approximations of
``cl {A x : x in X}`` for a convex feasible set ``X`` described by linear,
convex-quadratic and second-order-cone inequalities.  Bounded images are
handled by an outer-approximation driver; unbounded ones additionally get a
two-sided approximation of the recession cone of the image.
"""

from .errors import (
    ConvprojError,
    DimensionGuardExceeded,
    DimensionMismatch,
    EmptyPolyhedron,
    FailedPhaseOne,
    InfeasibleScalarization,
    IterationLimit,
    NotConvex,
    NumericalFailure,
    ParseError,
    UnboundedInput,
    UnboundedProblem,
)
from .model import (
    Constraint,
    LinearConstraint,
    ProblemInstance,
    QuadraticConstraint,
    SecondOrderConeConstraint,
    Tolerances,
    from_projection_form,
    load_instance,
    recession_constraints,
    save_instance,
)

__all__ = [
    "ConvprojError",
    "DimensionGuardExceeded",
    "DimensionMismatch",
    "EmptyPolyhedron",
    "FailedPhaseOne",
    "InfeasibleScalarization",
    "IterationLimit",
    "NotConvex",
    "NumericalFailure",
    "ParseError",
    "UnboundedInput",
    "UnboundedProblem",
    "Constraint",
    "LinearConstraint",
    "ProblemInstance",
    "QuadraticConstraint",
    "SecondOrderConeConstraint",
    "Tolerances",
    "from_projection_form",
    "load_instance",
    "recession_constraints",
    "save_instance",
]
