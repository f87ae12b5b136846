"""Exception hierarchy.

ValueError and friends signal misuse of an interface (bad shapes, wrong
degrees, unparseable input).  DeformationError and its subclasses signal
genuine mathematical obstructions discovered at runtime; the CLI maps
them to a dedicated exit code so scripts can tell the two apart.
"""

from __future__ import annotations


class DeformationError(Exception):
    """A mathematical obstruction, not a programming error."""


class CohomologyObstruction(DeformationError):
    """Nonzero cohomology where exactness was required."""

    def __init__(self, degree: int, dimension: int, message: str | None = None):
        self.degree = degree
        self.dimension = dimension
        super().__init__(message or
                         f"cohomology in degree {degree} has dimension {dimension}")


class NotMaurerCartan(DeformationError):
    """Base point of a deformation is not a solution."""


class NotCocycle(DeformationError):
    """A first-order direction that is not closed."""


class NotKDeformation(DeformationError):
    """A series prefix fails the order-by-order solution equations."""

    def __init__(self, order: int, message: str | None = None):
        self.order = order
        super().__init__(message or f"series fails the solution equations at order {order}")


class OutsidePerturbationNeighbourhood(DeformationError):
    """Perturbed homotopy operators are not invertible at this point."""


class SeriesDivergence(DeformationError):
    """Numeric summation detected growth past the configured order cap."""
