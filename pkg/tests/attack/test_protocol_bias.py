"""Tests for coinflip_lab.attack.protocol_bias."""

from fractions import Fraction

import numpy as np
import pytest

from coinflip_lab.attack import (
    AttackParams,
    HeavySetMap,
    bias_protocol,
    bias_protocol_multibit,
    round_lb_probe,
)
from coinflip_lab.corpus import make_protocol, parse_protocol, two_round_corpus
from coinflip_lab.exceptions import InvariantViolation, NotEnoughMassError, ParameterError
from coinflip_lab.protocol import exact_adversary_value
from coinflip_lab.stats import reverse_markov

GAMMA = Fraction(1, 4)


def _params(arity: int) -> AttackParams:
    return AttackParams.desk(arity, GAMMA)


class TestHeavySetMap:
    def test_assign_and_read(self):
        heavy = HeavySetMap.empty(4, 3)
        heavy.assign(1, [2, 5])
        assert heavy.slots[1].tolist() == [5, 2, 0]
        assert heavy.get(1) == (2, 5)
        assert heavy.get(0) is None
        assert heavy.slot(1, 1) == 5
        assert heavy.slot(1, 3) == 0
        assert heavy.slot(0, 1) is None

    def test_restricted(self):
        heavy = HeavySetMap.empty(4, 2)
        heavy.assign(1, [2, 5])
        heavy.assign(2, [])
        heavy.assign(3, [3])
        assert heavy.restricted(1, [5]).tolist() == [False, True, True, False]
        assert heavy.restricted(2, [4]).tolist() == [False, False, True, True]
        assert heavy.union() == {2, 3, 5}


class TestBiasProtocol:
    def test_one_round_majority(self):
        report = bias_protocol(parse_protocol("fn:majority:5"), GAMMA, _params(5))
        assert report.coalition == (1, 2)
        assert report.verified_value == Fraction(7, 8)
        assert report.succeeded

    def test_parity_all(self):
        report = bias_protocol(make_protocol("parity-all", 4, 2), GAMMA, _params(4))
        assert report.coalition == (1,)
        assert report.verified_value == 1
        assert report.b_h == (1,)

    def test_family_threshold_follows_the_measured_mass(self):
        # honest mass 1/2 exceeds gamma, so the family keeps prefixes of mass >= 1/4
        report = bias_protocol(make_protocol("parity-all", 4, 2), GAMMA, _params(4))
        family = next(e for e in report.events if e["phase"] == "family" and e["depth"] == 2)
        assert family["floor"] == reverse_markov(Fraction(1, 2), Fraction(1, 4)) == Fraction(1, 3)
        assert family["floor"] != reverse_markov(Fraction(1, 2), GAMMA / 2)

    def test_first_bit_is_won_in_round_one(self):
        report = bias_protocol(make_protocol("first-bit", 6, 2), GAMMA, _params(6))
        assert report.coalition == (1,)
        assert report.b_i == (1,)
        assert report.b_h == ()

    def test_select_then_vote(self):
        p = make_protocol("select-then-vote", 8, 2)
        report = bias_protocol(p, GAMMA, _params(8), seed=3)
        assert report.verified_value >= Fraction(3, 4)
        assert report.verified_value == exact_adversary_value(p, report.coalition, 1)
        assert set(report.coalition) == set(report.b_r) | set(report.b_h) | set(report.b_i)
        assert any(event["phase"] == "chisel" for event in report.events)

    def test_seeded_attack_repeats(self):
        p = make_protocol("tribes-of-xor", 4, 2, {"width": 2})
        first = bias_protocol(p, GAMMA, _params(4), seed=7)
        second = bias_protocol(p, GAMMA, _params(4), seed=7)
        assert first.coalition == second.coalition
        assert first.events == second.events

    def test_report_carries_bound_and_params(self):
        report = bias_protocol(make_protocol("parity-all", 4, 2), GAMMA, _params(4))
        assert report.theorem_bound > report.players
        assert report.params["h"] == 4
        assert report.claimed_value >= 1 - GAMMA

    def test_leader_protocols_are_rejected(self):
        with pytest.raises(ParameterError):
            bias_protocol(make_protocol("leader-mod", 4, 2), GAMMA, _params(4))

    def test_several_bits_need_the_multibit_attack(self):
        p = make_protocol("parity-all", 3, 2, {"r": 2})
        with pytest.raises(ParameterError, match="multi-bit"):
            bias_protocol(p, GAMMA, _params(6))

    def test_not_enough_mass(self):
        with pytest.raises(NotEnoughMassError):
            bias_protocol(make_protocol("tribes-of-xor", 6, 2, {"width": 3}), GAMMA, _params(6))

    def test_failed_verification_keeps_the_report(self, monkeypatch):
        monkeypatch.setattr(
            "coinflip_lab.attack.protocol_bias.exact_adversary_value",
            lambda *args, **kwargs: Fraction(0),
        )
        with pytest.raises(InvariantViolation) as excinfo:
            bias_protocol(make_protocol("parity-all", 4, 2), GAMMA, _params(4))
        assert excinfo.value.report.verified_value == 0
        assert excinfo.value.trace


class TestMultibit:
    def test_parity_with_two_bits_per_round(self):
        p = make_protocol("parity-all", 3, 2, {"r": 2})
        report = bias_protocol_multibit(p, GAMMA, _params(6))
        assert report.bit_coalition == (1,)
        assert report.coalition == (1,)
        assert report.bit_value == 1
        assert report.verified_value == 1

    def test_player_value_dominates_bit_value(self):
        p = make_protocol("last-round-majority", 3, 2, {"r": 2})
        report = bias_protocol_multibit(p, GAMMA, _params(6))
        assert report.verified_value >= report.bit_value >= 1 - GAMMA
        assert all(1 <= q <= 3 for q in report.coalition)

    @pytest.mark.parametrize("name", ["parity-all", "last-round-majority"])
    def test_one_round_two_bit_corpus(self, name):
        p = make_protocol(name, 4, 1, {"r": 2})
        assert p.bits == (2,)
        report = bias_protocol_multibit(p, GAMMA, _params(8))
        assert report.verified_value >= report.bit_value
        assert len(report.coalition) <= len(report.bit_coalition)
        assert exact_adversary_value(p, report.coalition, 1) == report.verified_value


class TestRoundProbe:
    def test_corpus(self):
        rows = round_lb_probe(two_round_corpus(), GAMMA, _params(8), Fraction(1, 2), seed=0)
        assert [row.protocol for row in rows] == [p.name for p in two_round_corpus()]
        for row in rows:
            assert row.value >= Fraction(3, 4)
            assert row.mode == "exact"
            assert row.within_budget == (len(row.coalition) <= row.players / 2)

    def test_multibit_rows(self):
        p = make_protocol("parity-all", 3, 2, {"r": 2})
        (row,) = round_lb_probe([p], GAMMA, _params(6), Fraction(1, 3))
        assert row.coalition == (1,)
        assert row.within_budget
