"""Exception hierarchy shared by all modules."""


class HoloquadError(Exception):
    """Base class for every error raised by this package."""


class DomainError(HoloquadError, ValueError):
    """An argument lies outside the region where an operation is defined."""


class PoleError(DomainError):
    """A gamma-type function was evaluated at one of its poles."""


class DegenerateParametersError(DomainError):
    """Parameters are too close to integers for a generic connection formula."""


class NonConvergenceError(HoloquadError, ArithmeticError):
    """A series or quadrature failed to reach its tolerance within its budget."""


class GeometryError(DomainError):
    """Affine sections do not describe a valid convex quadrilateral."""


class SolverError(HoloquadError, ArithmeticError):
    """The accessory-parameter solver could not bracket or verify a root."""


class ConfigError(HoloquadError, ValueError):
    """A run configuration is malformed."""
