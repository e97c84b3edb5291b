"""Error types shared across the library.

Everything derives from AgdlabError so callers can catch the whole family,
while the CLI maps validation problems and I/O problems to distinct exit
codes.
"""


class AgdlabError(Exception):
    """Base class for all library errors."""


class InvalidSpecError(AgdlabError, ValueError):
    """A problem or method specification violates its preconditions."""


class UndefinedConditionNumberError(AgdlabError, ValueError):
    """Condition number requested for an objective with mu = 0."""


class MethodInapplicableError(AgdlabError, ValueError):
    """A method requiring strong convexity was given a mu = 0 objective."""


class DivergenceError(AgdlabError, RuntimeError):
    """A run produced a non-finite iterate or state.

    Carries the step index at which the first non-finite value appeared.
    """

    def __init__(self, step: int, message: str = ""):
        self.step = step
        super().__init__(message or f"non-finite state at step {step}")


class TimeDomainError(AgdlabError, ValueError):
    """A time-varying flow was evaluated outside its valid time domain."""


class InsufficientDataError(AgdlabError, ValueError):
    """Too few usable data points for a requested fit."""


class TrajectoryMismatchError(AgdlabError, ValueError):
    """Two trajectories cannot be compared (different objectives or ranges)."""


class InternalConsistencyError(AgdlabError, RuntimeError):
    """An algebraic identity the implementation relies on failed numerically."""


class ConfigValidationError(AgdlabError, ValueError):
    """An experiment config failed validation.

    ``fields`` lists the offending paths, e.g. ``["methods[0].kind"]``.
    """

    def __init__(self, fields, message: str = ""):
        self.fields = list(fields)
        super().__init__(message or f"invalid config fields: {', '.join(self.fields)}")
