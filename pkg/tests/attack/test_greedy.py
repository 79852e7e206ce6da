"""Tests for coinflip_lab.attack.greedy."""

from fractions import Fraction

import pytest

from coinflip_lab.attack import greedy_to, kkl_greedy
from coinflip_lab.boolfn import and_function, bias_value, constant, majority, parity
from coinflip_lab.exceptions import NotEnoughMassError, ParameterError
from coinflip_lab.models import StepCase


class TestKklGreedy:
    def test_parity_needs_one_coordinate(self):
        trace = kkl_greedy(parity(8), 1, Fraction(1, 10))
        assert trace.b_h == (1,)
        assert trace.final_prob == 1
        assert trace.success

    def test_majority_nine(self):
        trace = kkl_greedy(majority(9), 1, Fraction(1, 20))
        assert trace.b_h == (1, 2, 3, 4)
        assert trace.final_prob == Fraction(248, 256)
        assert bias_value(majority(9), trace.b_h, 1) == trace.final_prob

    def test_steps_record_half_influence_gains(self):
        trace = kkl_greedy(majority(9), 0, Fraction(1, 20))
        previous = trace.initial_prob
        for step in trace.steps:
            assert step.case is StepCase.GREEDY
            assert step.prob == previous + step.influence / 2
            previous = step.prob
        assert trace.steps[-1].running_sum == sum(s.influence for s in trace.steps)

    def test_explicit_target(self):
        trace = kkl_greedy(majority(9), 1, Fraction(1, 20), target=Fraction(3, 4))
        assert trace.b_h == (1, 2)
        assert trace.target == Fraction(3, 4)

    def test_not_enough_mass(self):
        with pytest.raises(NotEnoughMassError) as excinfo:
            kkl_greedy(and_function(4), 1, Fraction(1, 4))
        assert excinfo.value.measured == Fraction(1, 16)

    def test_gamma_range(self):
        with pytest.raises(ParameterError):
            kkl_greedy(parity(3), 1, 1)


class TestGreedyTo:
    def test_constant_function_stops(self):
        trace = greedy_to(constant(3, 0), 1, Fraction(1, 2))
        assert not trace.success
        assert trace.b_h == ()

    def test_full_control(self):
        trace = greedy_to(parity(2), 0, Fraction(1))
        assert trace.success
        assert trace.b_h == (1,)
