"""Tests for coinflip_lab.attack.params."""

from fractions import Fraction

import pytest

from coinflip_lab.attack import AttackMode, AttackParams, lemma_steps, theorem_bound
from coinflip_lab.exceptions import ParameterError


class TestLemmaSteps:
    def test_formula(self):
        assert lemma_steps(10, Fraction(1, 2), Fraction(1, 2), 8) == 1000

    def test_small_h_falls_back_to_arity(self):
        assert lemma_steps(12, Fraction(1, 4), Fraction(1, 3), 2) == 12


def test_theorem_bound():
    assert theorem_bound(16, 2, Fraction(1, 4)) == pytest.approx(3.2e8)


class TestAttackParams:
    def test_desk_defaults(self):
        params = AttackParams.desk(4, Fraction(1, 4))
        assert (params.h, params.c, params.r) == (4, 2, 4)
        assert params.mode is AttackMode.DESK
        assert params.delta == Fraction(1, 3)
        assert params.boost == Fraction(3, 4)

    def test_desk_explicit_values(self):
        params = AttackParams.desk(16, 0.25, h=2, c=1, r=5, candidates=7)
        assert (params.h, params.c, params.r, params.candidates) == (2, 1, 5, 7)
        assert params.gamma == Fraction(1, 4)

    def test_desk_step_budget_for_h_two(self):
        assert AttackParams.desk(16, Fraction(1, 4), h=2).r == 16

    @pytest.mark.parametrize(
        "changes",
        [{"gamma": 0}, {"delta": 1}, {"boost": Fraction(1, 2)}, {"h": 0}, {"candidates": 0}],
    )
    def test_validation(self, changes):
        values = {"h": 4, "c": 2, "gamma": Fraction(1, 4), "delta": Fraction(1, 3), "r": 4}
        with pytest.raises(ParameterError):
            AttackParams(**{**values, **changes})

    def test_from_formula_degenerates_at_desk_sizes(self):
        with pytest.raises(ParameterError, match="use desk mode"):
            AttackParams.from_formula(4, 2, Fraction(1, 4), Fraction(1, 3))

    def test_check_lemma(self):
        params = AttackParams(8, 1, Fraction(1, 4), Fraction(1, 3), 4, mode="formula")
        with pytest.raises(ParameterError):
            params.check_lemma(4)
        params.check_lemma(16)

    def test_command_line_alias_of_formula_mode(self):
        assert AttackMode("paper") is AttackMode.FORMULA
        assert AttackMode("Paper") is AttackMode.FORMULA
        params = AttackParams(8, 1, Fraction(1, 4), Fraction(1, 3), 4, mode="paper")
        assert params.mode is AttackMode.FORMULA
        with pytest.raises(ValueError):
            AttackMode("asymptotic")

    def test_with_gamma(self):
        params = AttackParams.desk(6, Fraction(1, 4)).with_gamma(Fraction(1, 8))
        assert params.gamma == Fraction(1, 8)

    def test_as_dict(self):
        data = AttackParams.desk(6, Fraction(1, 4)).as_dict()
        assert set(data) >= {"h", "c", "gamma", "delta", "r", "mode", "boost"}
        assert data["mode"] is AttackMode.DESK
