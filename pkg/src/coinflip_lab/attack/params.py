from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass
from enum import StrEnum
from fractions import Fraction
from typing import Any

from ..const import DEFAULT_BOOST, MAX_SPLIT_RETRIES, THEOREM_CONSTANT
from ..exceptions import ParameterError
from ..stats import as_fraction, iterated_log

_LOGGER = logging.getLogger(__name__)

#: Exponent of the iterated log in the asymptotic parameter schedule.
SCHEDULE_EXPONENT = 10**4


class AttackMode(StrEnum):
    FORMULA = "formula"
    DESK = "desk"

    @classmethod
    def _missing_(cls, value: object) -> AttackMode | None:
        # "paper" is the command-line spelling of FORMULA
        if isinstance(value, str) and value.lower() == "paper":
            return cls.FORMULA
        return None


def lemma_steps(arity: int, gamma: float | Fraction, delta: float | Fraction, h: int) -> int:
    """Step budget ceil(100 * arity * log2(1/delta) / (gamma * log2(h/2))).

    Returns ``arity`` when h <= 2, where the formula has no finite value.
    """
    gamma, delta = float(as_fraction(gamma)), float(as_fraction(delta))
    if h <= 2:
        return arity
    return math.ceil(100 * arity * math.log2(1 / delta) / (gamma * math.log2(h / 2)))


def theorem_bound(players: int, rounds: int, gamma: float | Fraction) -> float:
    """Coalition size C * players / (gamma * log^(rounds)(players)) guaranteed asymptotically."""
    return THEOREM_CONSTANT * players / (float(gamma) * iterated_log(players, rounds))


@dataclass(frozen=True)
class AttackParams:
    """Knobs of the heavy/random process and the chisel loop.

    ``gamma`` is the process's slack: a run succeeds once the target outcome has probability
    at least ``1 - gamma``. ``boost`` is the target of every intermediate recursive boost.
    """

    h: int
    c: int
    gamma: Fraction
    delta: Fraction
    r: int
    mode: AttackMode = AttackMode.DESK
    boost: Fraction = Fraction(DEFAULT_BOOST)
    candidates: int = 50
    retries: int = MAX_SPLIT_RETRIES

    def __post_init__(self) -> None:
        for name in ("gamma", "delta", "boost"):
            object.__setattr__(self, name, as_fraction(getattr(self, name)))
        object.__setattr__(self, "mode", AttackMode(self.mode))
        if not 0 < self.gamma < 1:
            raise ParameterError(f"gamma must lie in (0, 1), got {self.gamma}")
        if not 0 < self.delta < 1:
            raise ParameterError(f"delta must lie in (0, 1), got {self.delta}")
        if not Fraction(1, 2) < self.boost < 1:
            raise ParameterError(f"boost must lie in (1/2, 1), got {self.boost}")
        for name in ("h", "c", "r", "candidates", "retries"):
            if getattr(self, name) < 1:
                raise ParameterError(f"{name} must be at least 1, got {getattr(self, name)}")

    @classmethod
    def desk(
        cls,
        arity: int,
        gamma: float | Fraction,
        delta: float | Fraction = Fraction(1, 3),
        h: int | None = None,
        c: int | None = None,
        r: int | None = None,
        **extra: Any,
    ) -> AttackParams:
        """Explicit desk-scale values; unset ones get small defaults that fit ``arity``."""
        h = h if h is not None else max(2, min(8, arity))
        c = c if c is not None else min(2, arity)
        if r is None:
            r = lemma_steps(arity, gamma, delta, h)
            if r > arity:
                _LOGGER.debug("Step budget %d clamped to arity %d", r, arity)
                r = arity
        return cls(h=h, c=c, gamma=gamma, delta=delta, r=r, mode=AttackMode.DESK, **extra)

    @classmethod
    def from_formula(
        cls, arity: int, rounds: int, gamma: float | Fraction, delta: float | Fraction, **extra: Any
    ) -> AttackParams:
        """Values from the asymptotic schedule; refuses sizes where they degenerate."""
        base = iterated_log(arity, rounds - 1)
        h = math.floor(base ** (1 / SCHEDULE_EXPONENT))
        c_value = arity / base**SCHEDULE_EXPONENT if base > 1 else float(arity)
        if h < 8 or c_value < 1:
            raise ParameterError(
                f"formula schedule degenerates at arity {arity}, k={rounds}: "
                f"h={h}, c={c_value:.3g}; use desk mode"
            )
        params = cls(
            h=h,
            c=math.floor(c_value),
            gamma=gamma,
            delta=delta,
            r=lemma_steps(arity, gamma, delta, h),
            mode=AttackMode.FORMULA,
            **extra,
        )
        params.check_lemma(arity)
        return params

    def check_lemma(self, arity: int) -> None:
        """Preconditions of the heavy/random process guarantee, enforced in formula mode."""
        if not 8 <= self.h <= arity:
            raise ParameterError(f"h={self.h} must satisfy 8 <= h <= {arity}")
        if not self.h * math.log2(self.h / 2) < 40 * arity / float(self.gamma):
            raise ParameterError(f"h={self.h} too large for arity {arity} and gamma {self.gamma}")
        if not 1 <= self.c <= arity:
            raise ParameterError(f"c={self.c} must satisfy 1 <= c <= {arity}")

    def with_gamma(self, gamma: Fraction) -> AttackParams:
        return dataclasses.replace(self, gamma=gamma)

    def as_dict(self) -> dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in dataclasses.fields(self)}
