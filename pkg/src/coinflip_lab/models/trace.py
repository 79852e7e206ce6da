from dataclasses import dataclass, field
from enum import StrEnum
from fractions import Fraction

from .base import ReportModel


class StepCase(StrEnum):
    HEAVY = "heavy"
    RANDOM = "random"
    GREEDY = "greedy"


@dataclass
class ProcessStep(ReportModel):
    """One corrupted coordinate.

    ``coordinate`` is in the original function's numbering; ``influence`` is its influence
    on the function restricted so far, ``running_sum`` the cumulative influence and ``prob``
    the probability of the target outcome after the step.
    """

    index: int
    coordinate: int
    case: StepCase
    influence: Fraction
    running_sum: Fraction
    prob: Fraction


@dataclass
class ProcessTrace(ReportModel):
    """Result of a greedy or semi-random corruption run."""

    outcome: int
    target: Fraction
    initial_prob: Fraction
    final_prob: Fraction
    success: bool
    b_r: tuple[int, ...] = ()
    b_h: tuple[int, ...] = ()
    steps: list[ProcessStep] = field(default_factory=list)

    @property
    def coalition(self) -> tuple[int, ...]:
        return tuple(sorted(self.b_r + self.b_h))

    @property
    def consumed(self) -> tuple[int, ...]:
        """Random-case coordinates in the order they were taken."""
        return tuple(step.coordinate for step in self.steps if step.case is StepCase.RANDOM)
