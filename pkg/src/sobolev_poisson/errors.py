"""Exception hierarchy shared by every module of the package."""


class SobolevError(Exception):
    """Base class for all errors raised by :mod:`sobolev_poisson`."""


class DomainError(SobolevError, ValueError):
    """A point or field lies outside the domain an operation works on."""


class SingularPointError(DomainError):
    """A derivative was requested exactly at a kink of a piecewise kernel."""


class EvaluationError(SobolevError, ArithmeticError):
    """A field produced a non-finite value at a quadrature node."""


class CapabilityError(SobolevError):
    """A field lacks derivative data needed by the requested operation."""


class ParseError(SobolevError, ValueError):
    """Malformed field expression; ``position`` is the 0-based offset."""

    def __init__(self, message, position=None):
        self.position = position
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


class UnknownNameError(ParseError, NameError):
    """An identifier in an expression is neither a variable, constant nor function."""


class UnsupportedObservableError(SobolevError):
    """A bracket left the closed family of observables the engine can differentiate."""


class GeometryError(SobolevError, ValueError):
    """A curve or surface patch is degenerate."""
