from dataclasses import dataclass
from fractions import Fraction

from .base import ReportModel


@dataclass
class MonteCarloEstimate(ReportModel):
    """Hit fraction of a seeded Monte Carlo run with its Hoeffding half-width."""

    hits: int
    trials: int
    seed: int
    confidence: float
    ci_halfwidth: float

    @property
    def estimate(self) -> float:
        return self.hits / self.trials

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.hits, self.trials)

    def contains(self, value: float | Fraction) -> bool:
        """True when ``value`` lies inside the confidence interval."""
        return abs(float(value) - self.estimate) <= self.ci_halfwidth
