"""Tests for coinflip_lab.construct."""

import logging
import math
from fractions import Fraction

import numpy as np
import pytest

from coinflip_lab.boolfn import majority, prob
from coinflip_lab.construct import (
    Assembly,
    Pipeline,
    PipelineConfig,
    StageConfig,
    auto_resilient,
    bin_histograms,
    build_pipeline,
    check_transformation,
    grouping,
    lightest_bin,
    lightest_bin_failure_bound,
    resilient_round,
    splitting,
    transformation_bound,
    validate_schedule,
    verify_transformation_arithmetic,
    votes_from_bits,
)
from coinflip_lab.corpus import make_protocol
from coinflip_lab.config import override_settings
from coinflip_lab.exceptions import ArityError, CapacityError, ParameterError, ScheduleError
from coinflip_lab.protocol import draw_transcript, exact_adversary_value, monte_carlo_value


def _pairs(players: int, bad: tuple[int, ...] = ()) -> Assembly:
    return grouping(Assembly.singletons(players, bad), 2)


class TestAssembly:
    def test_singletons(self):
        a = Assembly.singletons(4, [2])
        assert (a.n, a.s) == (4, 1)
        assert a.bad_sets() == [1]
        assert a.good_sets() == [0, 2, 3]
        assert a.declared_b == 1

    def test_sets_must_share_a_size(self):
        with pytest.raises(ParameterError):
            Assembly(4, ((1, 2), (3,)))

    def test_sets_must_be_disjoint(self):
        with pytest.raises(ParameterError):
            Assembly(4, ((1, 2), (2, 3)))

    def test_members_in_range(self):
        with pytest.raises(ParameterError):
            Assembly(3, ((3, 4),))

    def test_declared_bound(self):
        with pytest.raises(ParameterError, match="declared bound"):
            Assembly.singletons(4, [1, 2], declared_b=1)

    def test_snapshot(self):
        snap = _pairs(4, (3,)).snapshot()
        assert snap == {
            "universe": 4,
            "n": 2,
            "s": 2,
            "sets": [[1, 2], [3, 4]],
            "bad_sets": [1],
            "declared_b": 1,
        }


class TestGroupingSplitting:
    def test_grouping(self):
        a = grouping(Assembly.singletons(6, [2]), 2)
        assert a.sets == ((1, 2), (3, 4), (5, 6))
        assert a.bad_sets() == [0]
        assert a.declared_b == 1

    def test_grouping_drops_leftovers(self, caplog):
        with caplog.at_level(logging.WARNING):
            a = grouping(Assembly.singletons(7), 2)
        assert a.n == 3
        assert "drops the last 1 sets" in caplog.text

    def test_grouping_factor(self):
        with pytest.raises(ParameterError):
            grouping(Assembly.singletons(4), 0)

    def test_splitting(self):
        a = splitting(grouping(Assembly.singletons(8, [3]), 4), 2)
        assert a.sets == ((1, 2), (3, 4), (5, 6), (7, 8))
        assert a.bad_sets() == [1]
        assert a.declared_b == 2

    def test_splitting_needs_a_divisor(self):
        with pytest.raises(ParameterError):
            splitting(grouping(Assembly.singletons(8), 4), 3)

    def test_forced_bad_follows_the_sets(self):
        a = Assembly(8, ((1, 2, 3, 4), (5, 6, 7, 8)), forced_bad=frozenset({1}))
        assert splitting(a, 2).bad_sets() == [2, 3]
        assert grouping(splitting(a, 2), 2).bad_sets() == [1]


class TestLightestBin:
    def test_votes_from_bits(self):
        bits = np.asarray([[1, 0, 1], [1, 1, 1]])
        assert votes_from_bits(bits, 4).tolist() == [1, 3]
        assert votes_from_bits(bits, 3).tolist() == [2, 1]

    def test_empty_bin_is_padded(self):
        a = grouping(Assembly.singletons(12), 3)
        result = lightest_bin(a, 4, votes=[0, 1, 1, 2])
        assert result.chosen == 3
        assert result.histogram == (1, 2, 1, 0)
        assert (result.voted, result.padded) == (0, 1)
        assert result.assembly.sets == ((1, 2, 3),)
        assert result.assembly.bad_sets() == [0]
        assert result.uniform

    def test_chosen_sets_come_before_padding(self):
        a = _pairs(16)
        result = lightest_bin(a, 4, votes=[2, 0, 0, 1, 1, 2, 2, 3])
        assert result.chosen == 3
        assert result.assembly.sets == ((15, 16), (1, 2))
        assert result.assembly.bad_sets() == [1]

    def test_ties_go_to_the_lowest_bin(self):
        a = _pairs(8)
        result = lightest_bin(a, 2, votes=[0, 1, 1, 0])
        assert result.chosen == 0
        assert result.assembly.sets == ((1, 2), (7, 8))
        assert result.padded == 0

    def test_beta_range(self):
        with pytest.raises(ParameterError):
            lightest_bin(_pairs(8), 5, votes=[0, 0, 0, 0])
        with pytest.raises(ParameterError):
            lightest_bin(_pairs(8), 0, votes=[0, 0, 0, 0])

    def test_vote_count(self):
        with pytest.raises(ArityError):
            lightest_bin(_pairs(8), 2, votes=[0, 1])

    def test_needs_rng_without_votes(self):
        with pytest.raises(ParameterError):
            lightest_bin(_pairs(8), 2)

    def test_non_uniform_votes_are_reported(self, caplog):
        with caplog.at_level(logging.INFO):
            result = lightest_bin(_pairs(8), 3, rng=np.random.default_rng(0))
        assert not result.uniform
        assert "not exactly uniform" in caplog.text

    def test_rejection_encoding_is_uniform(self):
        result = lightest_bin(_pairs(8), 3, rng=np.random.default_rng(0), vote_encoding="reject")
        assert result.uniform
        with pytest.raises(ParameterError):
            lightest_bin(_pairs(8), 3, rng=np.random.default_rng(0), vote_encoding="base64")

    def test_output_size(self):
        a = grouping(Assembly.singletons(96, range(1, 96, 8)), 3)
        for seed in range(10):
            result = lightest_bin(a, 4, rng=np.random.default_rng(seed))
            assert result.assembly.n == math.ceil(a.n / 4)
            assert sum(result.histogram) == a.n

    def test_adversary_hook(self):
        a = _pairs(16, (1, 3))
        calls = []

        def always_zero(histogram, count):
            calls.append((histogram.sum(), count))
            return [0] * count

        result = lightest_bin(a, 2, rng=np.random.default_rng(1), adversary=always_zero)
        assert calls == [(6, 2)]
        assert sum(result.histogram) == 8

    def test_seeded_runs_repeat(self):
        a = _pairs(32, (5,))
        first = lightest_bin(a, 4, rng=np.random.default_rng(9))
        second = lightest_bin(a, 4, rng=np.random.default_rng(9))
        assert first.assembly == second.assembly


class TestBinStatistics:
    @pytest.mark.slow
    def test_failure_rate_below_the_bound(self):
        n, beta, delta, trials = 4096, 64, 0.2, 10_000
        rows = bin_histograms(n, 6, beta, trials, seed=0)
        assert rows.shape == (trials, beta)
        assert (rows.sum(axis=1) == n).all()
        lightest = rows.min(axis=1)
        assert (lightest <= n // beta).all()
        failures = np.mean(lightest < (1 - delta) * n / beta)
        assert failures <= lightest_bin_failure_bound(n, 0, beta, delta)
        assert failures <= beta * math.exp(-(delta**2) * n / (2 * beta))

    def test_single_bin_never_fails(self):
        assert lightest_bin_failure_bound(100, 10, 1, 0.2) == 0.0

    def test_bound_is_capped(self):
        assert lightest_bin_failure_bound(10, 0, 5, 0.1) == 1.0


class TestResilientRound:
    def test_contributors_and_output(self):
        rr = resilient_round(Assembly.singletons(5, [2]), "majority:3")
        assert rr.contributors == (1, 2, 3)
        assert rr.bad_coordinates == (2,)
        assert rr.output({1: 1, 2: 0, 3: 1}) == 1
        assert rr.output({1: 0, 2: 1, 3: 0}) == 0

    def test_distances(self):
        rr = resilient_round(Assembly.singletons(3, [2]), majority(3))
        assert rr.honest_distance() == 0
        assert rr.adversarial_distance() == Fraction(1, 4)

    def test_adversarial_distance_respects_the_arity_cap(self):
        rr = resilient_round(Assembly.singletons(3, [2]), majority(3))
        with override_settings(max_arity=2), pytest.raises(CapacityError) as excinfo:
            rr.adversarial_distance()
        assert (excinfo.value.bound, excinfo.value.limit) == ("MAX_ARITY", 2)

    def test_too_few_sets(self):
        with pytest.raises(ArityError):
            resilient_round(Assembly.singletons(2), "majority:3")

    def test_as_protocol(self):
        rr = resilient_round(_pairs(10), "majority:3")
        p = rr.protocol()
        assert (p.players, p.bits) == (10, (1,))
        assert rr.contributors == (1, 3, 5)
        assert exact_adversary_value(p, [3], 1) == Fraction(3, 4)
        assert exact_adversary_value(p, [2], 1) == Fraction(1, 2)


class TestSchedules:
    def test_auto_resilient(self):
        assert auto_resilient(57) == "recmaj3:2"
        assert auto_resilient(2) == "recmaj3:0"

    def test_rounded_schedule_large(self, caplog):
        with caplog.at_level(logging.WARNING):
            cfg = PipelineConfig.rounded_schedule(4096, 2)
        assert cfg.stages == (StageConfig(36, 2),)
        assert "leave 28 unused" in caplog.text
        pipeline = Pipeline(cfg, 4096)
        assert [(plan.n, plan.s) for plan in pipeline.plans] == [(57, 36)]
        assert pipeline.fn_id == "recmaj3:2"

    def test_rounded_schedule_small_clamps(self, caplog):
        with caplog.at_level(logging.WARNING):
            cfg = PipelineConfig.rounded_schedule(7, 2)
        assert cfg.stages == (StageConfig(7, 1),)
        assert "clamped" in caplog.text
        assert "degenerates" in caplog.text
        assert Pipeline(cfg, 7).fn_id == "recmaj3:0"

    def test_stage_count(self):
        with pytest.raises(ScheduleError) as excinfo:
            PipelineConfig(3, (StageConfig(2, 2),))
        assert excinfo.value.stage == 2
        with pytest.raises(ScheduleError):
            PipelineConfig(0, ())

    def test_split_must_divide(self):
        cfg = PipelineConfig(3, (StageConfig(4, 2), StageConfig(3, 2)))
        with pytest.raises(ScheduleError) as excinfo:
            validate_schedule(cfg, 24)
        assert excinfo.value.stage == 2

    def test_beta_above_vote_space(self):
        cfg = PipelineConfig(2, (StageConfig(2, 5),))
        with pytest.raises(ScheduleError) as excinfo:
            validate_schedule(cfg, 24)
        assert excinfo.value.stage == 1

    def test_group_larger_than_players(self):
        with pytest.raises(ScheduleError):
            validate_schedule(PipelineConfig(2, (StageConfig(30, 2),)), 24)

    def test_delta_range(self):
        with pytest.raises(ScheduleError):
            validate_schedule(PipelineConfig(2, (StageConfig(2, 2, delta=0.0),)), 24)

    def test_resilient_function_too_wide(self):
        cfg = PipelineConfig(2, (StageConfig(4, 2),), resilient="majority:5")
        with pytest.raises(ScheduleError) as excinfo:
            Pipeline(cfg, 16)
        assert excinfo.value.stage == 2

    def test_params_round_trip(self):
        cfg = PipelineConfig(3, (StageConfig(4, 2), StageConfig(2, 2)), "parity:3")
        assert PipelineConfig.from_params(24, 3, cfg.to_params()) == cfg

    def test_malformed_stage_list(self):
        with pytest.raises(ScheduleError):
            PipelineConfig.from_params(24, 2, {"stages": [{"t": 4}]})

    def test_from_params_without_stages_uses_schedule(self):
        cfg = PipelineConfig.from_params(4096, 2, {"gamma": "1/8"})
        assert cfg.stages == (StageConfig(36, 2),)
        assert cfg.gamma == Fraction(1, 8)


class TestPipeline:
    CFG = PipelineConfig(3, (StageConfig(4, 2), StageConfig(2, 2)), "parity:3")

    def test_plans(self):
        pipeline = Pipeline(self.CFG, 24)
        assert [(plan.n, plan.s) for plan in pipeline.plans] == [(3, 4), (3, 2)]

    def test_vectorized_run_matches_assembly_replay(self):
        pipeline = Pipeline(self.CFG, 24)
        p = pipeline.protocol()
        rng = np.random.default_rng(4)
        for _ in range(50):
            transcript = draw_transcript(p, rng)
            assert p.evaluate(transcript) == pipeline.trace_output(transcript)

    def test_trace_assemblies(self):
        pipeline = Pipeline(self.CFG, 24)
        p = pipeline.protocol()
        history = pipeline.trace_assemblies(draw_transcript(p, np.random.default_rng(0)), [1])
        assert len(history) == 5
        assert [a.n for a in history] == [24, 6, 3, 6, 3]
        assert [a.s for a in history] == [1, 4, 4, 2, 2]

    def test_small_pipeline_is_fair(self):
        p = build_pipeline(PipelineConfig(2, (StageConfig(3, 2),)), 6)
        assert p.total_bits == 12
        assert exact_adversary_value(p, [], 1) == Fraction(1, 2)
        pipeline = Pipeline(PipelineConfig(2, (StageConfig(3, 2),)), 6)
        for index in range(0, 1 << 12, 37):
            transcript = p.split(index)
            assert p.outcome_table()[index] == pipeline.trace_output(transcript)

    def test_registered_in_corpus(self):
        p = make_protocol("lightest-bin-pipeline", 24, 3, self.CFG.to_params())
        assert p.name == "lightest-bin-pipeline"
        assert p.bits == (1, 1, 1)

    @pytest.mark.slow
    def test_large_pipeline_honest_estimate(self):
        pipeline = Pipeline(PipelineConfig.rounded_schedule(4096, 2), 4096)
        estimate = monte_carlo_value(pipeline.protocol(), None, 1, 100_000, seed=0)
        assert estimate.trials == 100_000
        assert estimate.contains(prob(pipeline.fn, 1))


class TestTransformationBounds:
    def test_grouping(self):
        a = Assembly.singletons(12, [1, 5])
        check = check_transformation(a, "grouping", {"t": 3})
        assert (check.bad_before, check.bad_after, check.bound) == (2, 2, 2.0)
        assert check.holds

    def test_splitting(self):
        a = grouping(Assembly.singletons(12, [1]), 4)
        check = check_transformation(a, "splitting", {"t": 2})
        assert check.bound == 2.0
        assert check.bad_after == 1
        assert verify_transformation_arithmetic(a, "splitting", {"t": 2})

    def test_lightest_bin_bound(self):
        a = grouping(Assembly.singletons(64, [1, 5, 9, 13]), 4)
        bound, failure = transformation_bound(a, "lightest_bin", {"beta": 4, "delta": 0.5})
        assert bound == pytest.approx(2.5)
        assert failure == 1.0

    def test_lightest_bin_check_runs(self):
        a = grouping(Assembly.singletons(64, [1]), 4)
        check = check_transformation(a, "lightest_bin", {"beta": 4, "seed": 3})
        assert check.result is not None
        assert check.result.n == 4

    def test_unknown_operation(self):
        with pytest.raises(ParameterError):
            check_transformation(Assembly.singletons(4), "shuffle", {})
        with pytest.raises(ParameterError):
            transformation_bound(Assembly.singletons(4), "shuffle", {})
