"""Exception hierarchy.

Errors fall in two families that the CLI maps to distinct exit codes:
configuration problems (bad input files, unparsable expressions, unknown
surfaces) and numerical failures (singular points, integrator breakdown).
"""

from __future__ import annotations


class WagnerError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(WagnerError):
    """Invalid user input: surface files, run specs, CLI flags."""


class ExprSyntaxError(ConfigError):
    """An expression string could not be parsed.

    ``offset`` is the byte offset (UTF-8) of the offending token.
    """

    def __init__(self, message: str, text: str = "", offset: int = 0):
        self.text = text
        self.offset = offset
        super().__init__(f"{message} at byte offset {offset}")


class UnknownIdentifier(ExprSyntaxError):
    """A name outside the allowed variable and function sets."""


class UnknownSurface(ConfigError):
    pass


class InvalidParams(ConfigError):
    pass


class ChartMismatch(ConfigError):
    """An operation was handed a chart of the wrong kind."""


class NumericalError(WagnerError):
    """Base for failures of the numerics themselves."""


class DomainError(NumericalError, ArithmeticError):
    """Function evaluated outside its domain (log of x<=0, 1/0, ...)."""


class DegenerateMetric(NumericalError):
    """The metric is not positive definite at the requested point."""


class SingularPoint(NumericalError):
    """An operation that divides by the curvature hit K = 0."""


class StepUnderflow(NumericalError):
    pass


class LeftDomain(NumericalError):
    pass


class MaxStepsExceeded(NumericalError):
    pass


class InterpolationError(NumericalError):
    pass


class TurningPoint(NumericalError):
    """The trajectory becomes tangent to a parallel inside the span."""

    def __init__(self, message: str, u2: float):
        self.u2 = u2
        super().__init__(message)


class NonTransversal(NumericalError):
    pass


class SingularApproach(NumericalError):
    """The lifted integration reached the singular set.

    ``trajectory`` holds everything integrated up to the last safe sample.
    """

    def __init__(self, message: str, trajectory=None):
        self.trajectory = trajectory
        super().__init__(message)
