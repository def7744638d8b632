"""Exception types shared across the package."""


class ConvprojError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(ConvprojError):
    """A problem or bundle file is malformed."""


class DimensionMismatch(ConvprojError):
    """Array shapes are inconsistent with the declared dimensions."""


class NotConvex(ConvprojError):
    """A quadratic constraint matrix has a significantly negative eigenvalue."""


class EmptyPolyhedron(ConvprojError):
    """A halfspace system has no feasible point."""


class DimensionGuardExceeded(ConvprojError):
    """A polyhedral computation was requested above the dimension guard."""


class UnboundedInput(ConvprojError):
    """An operation that requires bounded input received rays."""


class FailedPhaseOne(ConvprojError):
    """No strictly feasible point was found (empty or flat feasible set)."""


class NumericalFailure(ConvprojError):
    """The numerical engine stagnated or produced an inconsistent solution."""


class InfeasibleScalarization(ConvprojError):
    """A scalarization was posed with an unreachable anchor point."""


class UnboundedProblem(ConvprojError):
    """The bounded-problem driver was given an unbounded instance."""


class IterationLimit(ConvprojError):
    """An iterative driver exceeded its iteration cap before converging."""
