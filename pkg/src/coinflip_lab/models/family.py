from dataclasses import dataclass, field
from fractions import Fraction

from .base import ReportModel


@dataclass
class FamilyMember(ReportModel):
    """Per-function outcome of the common-set search; ``b_h`` is None when uncovered."""

    index: int
    outcome: int
    b_h: tuple[int, ...] | None
    value: Fraction


@dataclass
class FamilyResult(ReportModel):
    """Best candidate of the common random set search."""

    b_r: tuple[int, ...]
    coverage: Fraction
    candidate: int
    candidates: int
    order: tuple[int, ...]
    members: list[FamilyMember] = field(default_factory=list)

    def heavy_set(self, index: int) -> tuple[int, ...] | None:
        return self.members[index].b_h
