"""Desk-scale lab for collective coin flipping and leader election with full information."""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("coinflip-lab")
except PackageNotFoundError:
    __version__ = "0.1.0"

from .boolfn import BooleanFunction, influence, load_function, prob, restrict_optimal
from .construct import Assembly, Pipeline, PipelineConfig, build_pipeline
from .corpus import make_protocol, parse_protocol
from .exceptions import (
    ArityError,
    CapacityError,
    CoinflipLabError,
    CoordinateError,
    InvariantViolation,
    NotEnoughMassError,
    ParameterError,
    ScheduleError,
    SpecParseError,
)
from .protocol import ProtocolSpec, exact_adversary_value, monte_carlo_value, resilience_check

__all__ = [
    "ArityError",
    "Assembly",
    "BooleanFunction",
    "CapacityError",
    "CoinflipLabError",
    "CoordinateError",
    "InvariantViolation",
    "NotEnoughMassError",
    "ParameterError",
    "Pipeline",
    "PipelineConfig",
    "ProtocolSpec",
    "ScheduleError",
    "SpecParseError",
    "build_pipeline",
    "exact_adversary_value",
    "influence",
    "load_function",
    "make_protocol",
    "monte_carlo_value",
    "parse_protocol",
    "prob",
    "resilience_check",
    "restrict_optimal",
    "__version__",
]
