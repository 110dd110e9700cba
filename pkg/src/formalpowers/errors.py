"""Exception hierarchy shared by every subpackage."""


class FormalPowerError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(FormalPowerError, ValueError):
    """A point, radius or path lies outside the region where a quantity is defined."""


class ProfileError(FormalPowerError, ValueError):
    """A permittivity profile is malformed or produced a non-positive value."""


class PathError(FormalPowerError, ValueError):
    """An integration path is degenerate or comes too close to the origin."""


class EvaluationError(FormalPowerError, ArithmeticError):
    """An integrand or basis function returned non-finite values."""


class PreconditionError(FormalPowerError, ValueError):
    """An analytic precondition (e.g. Phi_z bounded and nonvanishing) failed at a sample."""


class PathDependenceError(FormalPowerError, ArithmeticError):
    """Two homotopic paths produced different integrals; the integrand is not closed."""


class ConfigError(FormalPowerError, ValueError):
    """A configuration document failed to parse or validate."""
