from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from .base import ReportModel
from .estimate import MonteCarloEstimate


@dataclass
class AttackReport(ReportModel):
    """Outcome of a protocol attack.

    ``claimed_value`` comes from the attack's own bookkeeping; ``verified_value`` is always
    recomputed by the protocol oracle and is the number callers should trust.
    """

    protocol: str
    players: int
    rounds: int
    outcome: int
    gamma: Fraction
    seed: int
    b_r: tuple[int, ...] = ()
    b_h: tuple[int, ...] = ()
    b_i: tuple[int, ...] = ()
    coalition: tuple[int, ...] = ()
    claimed_value: Fraction | None = None
    verified_value: Fraction | None = None
    verification: str = "exact"
    monte_carlo: MonteCarloEstimate | None = None
    theorem_bound: float | None = None
    params: dict[str, Any] = field(default_factory=dict)
    bit_coalition: tuple[int, ...] | None = None
    bit_value: Fraction | None = None
    events: list[dict[str, Any]] = field(default_factory=list)

    @property
    def size(self) -> int:
        return len(self.coalition)

    @property
    def succeeded(self) -> bool:
        return self.verified_value is not None and self.verified_value >= 1 - self.gamma
