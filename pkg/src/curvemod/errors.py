"""Exception types shared across the package."""

from __future__ import annotations


class CurvemodError(Exception):
    """Base class for all package errors."""


class InvalidCurveError(CurvemodError):
    """Curve is degenerate or violates a structural invariant."""


class InconsistentLiftingError(CurvemodError):
    """A lift varies on a parameter run where its image curve is constant."""


class PreconditionError(CurvemodError):
    """An operation was called with inputs violating its stated preconditions."""


class UnsupportedMappingError(CurvemodError):
    """Mapping lacks the declared structure (branch inverses, flags) an operation needs."""


class AnalyticUnavailableError(CurvemodError, LookupError):
    """No closed form is implemented for the requested combination."""


class NotApplicableError(CurvemodError):
    """The requested check does not apply (e.g. infinite essential supremum)."""


class SolverNonConvergenceError(CurvemodError):
    """Solver hit its iteration budget before certifying the requested gap.

    Carries the best iterate so callers can inspect partial progress.
    """

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class ScenarioError(CurvemodError):
    """Scenario file is malformed or fails schema validation."""
