"""Tests for the report models."""

from fractions import Fraction

from coinflip_lab.models import (
    AttackReport,
    ExperimentRow,
    FamilyMember,
    FamilyResult,
    MonteCarloEstimate,
    ProcessStep,
    ProcessTrace,
    StepCase,
)


class TestMonteCarloEstimate:
    def test_estimate_and_interval(self):
        estimate = MonteCarloEstimate(
            hits=30, trials=100, seed=1, confidence=0.99, ci_halfwidth=0.05
        )
        assert estimate.estimate == 0.3
        assert estimate.fraction == Fraction(3, 10)
        assert estimate.contains(Fraction(1, 3))
        assert not estimate.contains(0.4)


class TestProcessTrace:
    def test_coalition_and_consumed(self):
        steps = [
            ProcessStep(1, 4, StepCase.RANDOM, Fraction(1, 2), Fraction(1, 2), Fraction(3, 4)),
            ProcessStep(2, 2, StepCase.HEAVY, Fraction(1), Fraction(3, 2), Fraction(1)),
            ProcessStep(3, 1, StepCase.RANDOM, Fraction(0), Fraction(3, 2), Fraction(1)),
        ]
        trace = ProcessTrace(
            1, Fraction(7, 8), Fraction(1, 2), Fraction(1), True, (1, 4), (2,), steps
        )
        assert trace.coalition == (1, 2, 4)
        assert trace.consumed == (4, 1)
        assert dict(trace)["steps"][1]["case"] is StepCase.HEAVY


class TestAttackReport:
    def _report(self, verified):
        return AttackReport(
            protocol="parity-all",
            players=4,
            rounds=2,
            outcome=1,
            gamma=Fraction(1, 4),
            seed=0,
            coalition=(1, 3),
            verified_value=verified,
        )

    def test_size_and_success(self):
        assert self._report(Fraction(3, 4)).size == 2
        assert self._report(Fraction(3, 4)).succeeded
        assert not self._report(Fraction(1, 2)).succeeded
        assert not self._report(None).succeeded

    def test_nested_estimate_becomes_a_dict(self):
        report = self._report(Fraction(1))
        report.monte_carlo = MonteCarloEstimate(10, 10, 0, 0.9, 0.3)
        assert dict(report)["monte_carlo"]["hits"] == 10


class TestFamilyResult:
    def test_heavy_set(self):
        members = [FamilyMember(0, 1, (2,), Fraction(1)), FamilyMember(1, 1, None, Fraction(1, 2))]
        result = FamilyResult((1,), Fraction(1, 2), 0, 3, (1, 4), members)
        assert result.heavy_set(0) == (2,)
        assert result.heavy_set(1) is None


class TestExperimentRow:
    def test_csv_cells(self):
        row = ExperimentRow("maj", 5, 1, (1, 2), "1", Fraction(7, 8), "exact")
        assert row.csv_cells() == ["maj", "5", "1", "1 2", "1", "7", "8", "exact", "", "", ""]

    def test_monte_carlo_cells(self):
        row = ExperimentRow("maj", 5, 1, (), "1", Fraction(3, 5), "mc", 100, 7, 0.25)
        assert row.csv_cells()[-4:] == ["mc", "100", "7", "0.25"]
