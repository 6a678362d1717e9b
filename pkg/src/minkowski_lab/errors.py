"""Exception hierarchy shared by all modules."""


class LabError(Exception):
    """Base class for errors raised by minkowski_lab."""


class ConfigError(LabError, ValueError):
    """Unknown label, bad parameters, or a parameter set violating a build constraint."""


class DomainError(LabError, ValueError):
    """A point or parameter lies outside the admissible set."""


class ContractError(LabError, ValueError):
    """An input violates an operation's precondition (e.g. a non-symmetric matrix)."""


class SizeError(LabError, ValueError):
    """An index or dimension is out of the supported range."""


class FrameError(LabError, ArithmeticError):
    """The induced metric is degenerate or not positive definite."""


class SignatureError(FrameError):
    """No non-null normal frame exists in the indefinite signature."""


class QuadratureError(LabError, ArithmeticError):
    """An integrand produced a non-finite value."""


class PreconditionError(LabError, ValueError):
    """A numerical precondition of an identity (e.g. parallel normals) fails."""


class HypothesisViolation(LabError):
    """A theorem hypothesis (sign of sigma_k, convexity, ...) fails on the sample."""

    def __init__(self, message, details=None):
        super().__init__(message)
        self.details = details or {}


class SolverError(LabError, RuntimeError):
    """An eigen-solver failed to converge."""
