from dataclasses import dataclass
from fractions import Fraction

from .base import ReportModel


@dataclass
class ResilienceReport(ReportModel):
    """Worst coalition of a given size and whether the protocol is (b, gamma)-resilient.

    In Monte Carlo mode ``value`` is the flooding adversary's estimate, which is only a lower
    bound on the optimal adversary; ``lower_bound`` says so.
    """

    protocol: str
    players: int
    rounds: int
    b: int
    gamma: Fraction
    mode: str
    worst_coalition: tuple[int, ...]
    worst_outcome: str
    value: Fraction | float
    resilient: bool
    coalitions_checked: int
    lower_bound: bool = False
    trials: int | None = None
    seed: int | None = None
    ci_halfwidth: float | None = None
