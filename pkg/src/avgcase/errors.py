"""Exception types raised by avgcase."""


class AvgCaseError(Exception):
    """Base class for all library errors."""


class UnsupportedOperationError(AvgCaseError):
    """The operation is not defined for this distribution variant."""


class SingularCoefficientError(AvgCaseError):
    """A recurrence coefficient has a vanishing denominator."""

    def __init__(self, msg, degree):
        super().__init__(msg)
        self.degree = degree


class DegeneracyError(AvgCaseError):
    """A polynomial vanishes at zero, so it cannot be made residual."""

    def __init__(self, msg, degree):
        super().__init__(msg)
        self.degree = degree


class PrecisionError(AvgCaseError):
    """Quadrature did not reach the requested accuracy."""


class DivergenceError(AvgCaseError):
    """An optimizer blew up.

    ``last_finite_t`` is the last iteration whose metrics were finite and
    below the divergence threshold.
    """

    def __init__(self, msg, last_finite_t):
        super().__init__(msg)
        self.last_finite_t = last_finite_t


class ConfigError(AvgCaseError):
    """An experiment configuration is malformed."""
