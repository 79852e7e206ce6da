from dataclasses import dataclass
from fractions import Fraction

from .base import ReportModel

CSV_COLUMNS = [
    "protocol",
    "players",
    "k",
    "coalition",
    "outcome",
    "value_num",
    "value_den",
    "mode",
    "trials",
    "seed",
    "ci",
]


@dataclass
class ExperimentRow(ReportModel):
    """One CSV summary row; exact values keep numerator and denominator apart."""

    protocol: str
    players: int
    k: int
    coalition: tuple[int, ...]
    outcome: str
    value: Fraction
    mode: str
    trials: int | None = None
    seed: int | None = None
    ci: float | None = None
    within_budget: bool | None = None

    def csv_cells(self) -> list[str]:
        return [
            self.protocol,
            str(self.players),
            str(self.k),
            " ".join(str(member) for member in self.coalition),
            self.outcome,
            str(self.value.numerator),
            str(self.value.denominator),
            self.mode,
            "" if self.trials is None else str(self.trials),
            "" if self.seed is None else str(self.seed),
            "" if self.ci is None else repr(self.ci),
        ]
