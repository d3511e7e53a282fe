"""Exception hierarchy.

The CLI maps these onto exit codes: :class:`ConfigError` -> 1,
:class:`NumericalError` -> 2, :class:`ValidationFailure` -> 3.
"""

from __future__ import annotations


class LevyHitError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(LevyHitError, ValueError):
    """Invalid user input: bad parameters, unsorted points, unknown family."""


class DomainError(LevyHitError, ValueError):
    """A quantity was requested outside the set where it is defined."""


class ClassificationUnavailable(DomainError):
    """A custom model was used without a declared recurrence class."""


class UnsupportedFamily(DomainError):
    """The requested closed form does not exist for this process family."""


class NumericalError(LevyHitError, ArithmeticError):
    """Base class for numerical failures."""


class QuadratureError(NumericalError):
    def __init__(self, message: str, tail_estimate: float | None = None):
        super().__init__(message)
        self.tail_estimate = tail_estimate


class ExtrapolationError(NumericalError):
    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class SolverError(NumericalError):
    """Singular or ill-conditioned linear system."""

    def __init__(self, message: str, condition: float | None = None):
        super().__init__(message)
        self.condition = condition


class ConsistencyError(NumericalError):
    """Two routes to the same quantity disagree beyond tolerance."""


class InvariantError(NumericalError):
    """A constructed object violates its structural invariants."""


class ValidationFailure(LevyHitError):
    """An oracle or golden-value comparison failed."""

    def __init__(self, message: str, case: dict | None = None):
        super().__init__(message)
        self.case = case or {}
