"""Exception types raised across the package."""


class GaugeSpectralError(Exception):
    """Base class for all package errors."""


class DomainError(GaugeSpectralError, ValueError):
    """A point lies outside the compact set a function is defined on."""


class ArgumentError(GaugeSpectralError, ValueError):
    """Invalid or mutually incompatible arguments."""


class ConvergenceError(GaugeSpectralError, ArithmeticError):
    """An iterative construction did not reach its tolerance."""


class EssentialDiscontinuityError(ConvergenceError):
    """A one-sided limit could not be extracted; the input is possibly not regulated."""


class NumericalError(GaugeSpectralError, ArithmeticError):
    """A linear-algebra routine failed to converge."""


class GaugeTooSmallError(GaugeSpectralError, RuntimeError):
    """Building a fine partition would need more cells than allowed."""


class DivergenceSuspected(GaugeSpectralError, ArithmeticError):
    """A truncated integral could not be certified as convergent.

    Carries the partial sums observed before giving up and, when known, the
    truncation radius of each.
    """

    def __init__(self, message, partial_sums=(), radii=()):
        super().__init__(message)
        self.partial_sums = list(partial_sums)
        self.radii = list(radii)
