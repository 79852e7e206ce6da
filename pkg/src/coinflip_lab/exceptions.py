"""Exception classes for coinflip-lab."""

from typing import Any


class CoinflipLabError(Exception):
    """Base exception for every error raised by the library."""

    pass


class ArityError(CoinflipLabError):
    """Raised when an arity is invalid or two arities disagree."""

    pass


class CoordinateError(CoinflipLabError):
    """Raised for coordinates out of range, duplicate coordinates, or full-control restrictions."""

    pass


class ParameterError(CoinflipLabError):
    """Raised when a numeric parameter is outside its documented range.

    Also raised for formula-mode attack parameters that degenerate at the requested size.
    """

    pass


class SpecParseError(CoinflipLabError):
    """Raised when a builtin id, truth-table file or protocol spec document cannot be parsed."""

    pass


class CapacityError(CoinflipLabError):
    """Raised when an exact computation would exceed a configured capacity bound.

    ``bound`` names the limit (``EXACT_BUDGET``, ``MAX_ARITY``, ``MAX_COALITIONS``) and
    ``limit`` carries its active value, so callers can report which knob to turn.
    """

    def __init__(self, message: str, bound: str, limit: int) -> None:
        super().__init__(message)
        self.bound = bound
        self.limit = limit


class NotEnoughMassError(CoinflipLabError):
    """Raised when the target outcome is too unlikely for an attack's precondition."""

    def __init__(self, message: str, measured: Any, required: Any) -> None:
        super().__init__(message)
        self.measured = measured
        self.required = required


class InvariantViolation(CoinflipLabError):
    """Raised when a runtime check of an asserted inequality fails.

    The attack never proceeds past a failed check. ``trace`` holds the events recorded
    up to the failure; ``report`` holds the partial report when one exists.
    """

    def __init__(
        self, message: str, trace: list[dict[str, Any]] | None = None, report: Any = None
    ) -> None:
        super().__init__(message)
        self.trace = trace or []
        self.report = report


class ScheduleError(CoinflipLabError):
    """Raised when a pipeline schedule is arithmetically inconsistent.

    ``stage`` is the 1-based round at which the schedule breaks.
    """

    def __init__(self, message: str, stage: int) -> None:
        super().__init__(message)
        self.stage = stage
