"""Evaluable tail bounds and Monte Carlo sizing.

The tail bounds use natural-log exponentials exactly as the formulas are written;
``iterated_log`` and everything that feeds attack schedules use base 2.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

from .exceptions import ParameterError


def as_fraction(value: float | int | str | Fraction) -> Fraction:
    """Convert a user-facing probability to an exact rational.

    Floats go through their shortest repr, so 0.1 becomes 1/10 rather than its binary expansion.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(value)


def _check_open_unit(name: str, value: float) -> None:
    if not 0 < value < 1:
        raise ParameterError(f"{name} must lie in (0, 1), got {value}")


@dataclass(frozen=True)
class TailParams:
    """Parameters shared by the tail bounds; construction validates the ranges."""

    n: int
    p: float
    delta: float

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ParameterError(f"n must be positive, got {self.n}")
        _check_open_unit("p", self.p)
        # delta = 1 is the degenerate X <= 0 tail; the formula still holds there.
        if not 0 < self.delta <= 1:
            raise ParameterError(f"delta must lie in (0, 1], got {self.delta}")

    @property
    def mean(self) -> float:
        return self.n * self.p


def chernoff_lower_tail(n: int, p: float, delta: float) -> float:
    """Upper bound on Pr[X <= (1 - delta) * n * p] for X ~ Bin(n, p): exp(-delta^2 np / 2)."""
    params = TailParams(n, p, delta)
    return math.exp(-(params.delta**2) * params.mean / 2)


def reverse_markov(mean: float | Fraction, p: float | Fraction) -> float | Fraction:
    """Lower bound on Pr[X > p] for X in [0, 1] with E[X] = mean: (mean - p) / (1 - p).

    Exact when both arguments are Fractions.
    """
    if not 0 <= p < mean <= 1:
        raise ParameterError(f"reverse Markov needs 0 <= p < mean <= 1, got p={p}, mean={mean}")
    return (mean - p) / (1 - p)


def azuma_bound(mu: float, eta: float, steps: int) -> float:
    """Bound on Pr[Z_steps < (1 - eta) * steps * mu] for a [0, 1]-increment submartingale."""
    _check_open_unit("mu", mu)
    _check_open_unit("eta", eta)
    if steps < 1:
        raise ParameterError(f"steps must be positive, got {steps}")
    return math.exp(-(eta**2) * mu * steps / 2)


def hoeffding_halfwidth(trials: int, confidence: float) -> float:
    """Two-sided Hoeffding half-width for a mean of ``trials`` [0, 1] samples."""
    _check_open_unit("confidence", confidence)
    if trials < 1:
        raise ParameterError(f"trials must be positive, got {trials}")
    return math.sqrt(math.log(2 / (1 - confidence)) / (2 * trials))


def sample_size(eps: float, confidence: float) -> int:
    """Smallest n with 2 * exp(-2 n eps^2) <= 1 - confidence."""
    _check_open_unit("eps", eps)
    _check_open_unit("confidence", confidence)
    return math.ceil(math.log(2 / (1 - confidence)) / (2 * eps * eps))


def iterated_log(x: float, k: int) -> float:
    """k-fold base-2 logarithm, floored at 1 after every application."""
    if k < 0:
        raise ParameterError(f"k must be non-negative, got {k}")
    value = float(x)
    for _ in range(k):
        value = max(1.0, math.log2(max(value, 1.0)))
    return value


def log_star(x: float) -> int:
    """Number of base-2 logarithms needed to bring x down to at most 1."""
    count = 0
    value = float(x)
    while value > 1:
        value = math.log2(value)
        count += 1
    return count
