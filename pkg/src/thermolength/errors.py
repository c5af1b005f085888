"""Exception types raised by the numerical kernels and solvers."""


class ThermoLengthError(Exception):
    """Base class for all package errors."""


class NonDiagonalizable(ThermoLengthError):
    pass


class SingularEigenvalue(ThermoLengthError):
    pass


class NotHurwitz(ThermoLengthError):
    pass


class NotPositiveDefinite(ThermoLengthError):
    pass


class SingularMatrix(ThermoLengthError):
    pass


class SingularMetric(ThermoLengthError):
    pass


class NonPositiveMetric(ThermoLengthError):
    pass


class DomainExceeded(ThermoLengthError):
    pass


class NotConverged(ThermoLengthError):
    def __init__(self, message, iterations=None, residual=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class ConfigError(ThermoLengthError):
    """Invalid run configuration; the message names the offending field."""
