"""Exception types raised across the package."""


class PlanarDilError(Exception):
    """Base class for all package errors."""


class DomainError(PlanarDilError, ValueError):
    """A point lies on or outside the boundary of the domain."""


class UnsupportedDomainError(PlanarDilError, ValueError):
    """The requested domain kind is not a disk or an annulus."""


class DegenerateProblemError(PlanarDilError, ValueError):
    """Coincident nodes or an otherwise degenerate configuration."""


class ParameterError(PlanarDilError, ValueError):
    pass


class ShapeError(PlanarDilError, ValueError):
    pass


class PoleError(PlanarDilError, ValueError):
    """A rational function has a pole where it must be analytic."""


class ConditioningError(PlanarDilError, ArithmeticError):
    """A computation is too ill-conditioned to be trusted."""


class NotCoinvariantError(ConditioningError):
    """A subspace is not (numerically) invariant under the adjoint of M."""
