"""Assemblies of player sets, the three transformations on them and the protocol pipeline.

An assembly is a family of disjoint, equally sized player sets. Grouping merges consecutive
sets, splitting cuts every set into consecutive pieces and the lightest-bin round keeps the
sets that voted for the least popular bin. A pipeline chains these over k - 1 rounds and
spends the last round on a resilient function over one bit per surviving set.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

import numpy as np

from .boolfn import BooleanFunction, bias_value, load_function, prob
from .config import get_settings
from .exceptions import ArityError, CapacityError, ParameterError, ScheduleError
from .protocol import Domain, ProtocolSpec, Transcript
from .stats import as_fraction, chernoff_lower_tail

_LOGGER = logging.getLogger(__name__)

#: Adversary hook: (good-vote histogram, number of bad sets) -> one vote per bad set.
BadVoter = Callable[[np.ndarray, int], Sequence[int]]


@dataclass(frozen=True)
class Assembly:
    """Disjoint player sets of equal size over players 1..universe.

    A set is bad when it contains a bad player or its index is in ``forced_bad``
    (padding sets are marked that way). ``declared_b`` is the bound the set was built
    under, or None when only a statistical bound applies.
    """

    universe: int
    sets: tuple[tuple[int, ...], ...]
    bad_players: frozenset[int] = frozenset()
    forced_bad: frozenset[int] = frozenset()
    declared_b: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "sets", tuple(tuple(sorted(s)) for s in self.sets))
        object.__setattr__(self, "bad_players", frozenset(self.bad_players))
        object.__setattr__(self, "forced_bad", frozenset(self.forced_bad))
        sizes = {len(s) for s in self.sets}
        if len(sizes) > 1 or 0 in sizes:
            raise ParameterError(f"assembly sets must be non-empty and equal in size, got {sizes}")
        members = [m for s in self.sets for m in s]
        if len(set(members)) != len(members):
            raise ParameterError("assembly sets must be pairwise disjoint")
        if members and (min(members) < 1 or max(members) > self.universe):
            raise ParameterError(f"assembly members outside [1, {self.universe}]")
        if self.declared_b is not None and self.bad_set_count > self.declared_b:
            raise ParameterError(
                f"{self.bad_set_count} bad sets exceed the declared bound {self.declared_b}"
            )

    @classmethod
    def singletons(
        cls, universe: int, bad_players: Sequence[int] = (), declared_b: int | None = None
    ) -> Assembly:
        """Every player on its own; the declared bound defaults to the number of bad players."""
        bad = frozenset(bad_players)
        b = len(bad) if declared_b is None else declared_b
        return cls(universe, tuple((p,) for p in range(1, universe + 1)), bad, declared_b=b)

    @property
    def n(self) -> int:
        return len(self.sets)

    @property
    def s(self) -> int:
        return len(self.sets[0]) if self.sets else 0

    def is_bad(self, index: int) -> bool:
        return index in self.forced_bad or not self.bad_players.isdisjoint(self.sets[index])

    def bad_sets(self) -> list[int]:
        return [i for i in range(self.n) if self.is_bad(i)]

    def good_sets(self) -> list[int]:
        return [i for i in range(self.n) if not self.is_bad(i)]

    @property
    def bad_set_count(self) -> int:
        return len(self.bad_sets())

    def snapshot(self) -> dict[str, Any]:
        return {
            "universe": self.universe,
            "n": self.n,
            "s": self.s,
            "sets": [list(s) for s in self.sets],
            "bad_sets": self.bad_sets(),
            "declared_b": self.declared_b,
        }


def grouping(a: Assembly, t: int) -> Assembly:
    """Merge every t consecutive sets into one. Leftover sets are dropped."""
    if t < 1:
        raise ParameterError(f"grouping factor must be at least 1, got {t}")
    groups = a.n // t
    if a.n % t:
        _LOGGER.warning("Grouping %d sets by %d drops the last %d sets", a.n, t, a.n % t)
    sets = tuple(
        tuple(m for s in a.sets[g * t : (g + 1) * t] for m in s) for g in range(groups)
    )
    forced = frozenset(i // t for i in a.forced_bad if i // t < groups)
    return Assembly(a.universe, sets, a.bad_players, forced, a.declared_b)


def splitting(a: Assembly, t: int) -> Assembly:
    """Cut every set into t consecutive pieces of size s / t."""
    if t < 1 or a.s % t:
        raise ParameterError(f"splitting factor {t} must divide the set size {a.s}")
    size = a.s // t
    sets = tuple(s[j * size : (j + 1) * size] for s in a.sets for j in range(t))
    forced = frozenset(i * t + j for i in a.forced_bad for j in range(t))
    b = None if a.declared_b is None else a.declared_b * t
    return Assembly(a.universe, sets, a.bad_players, forced, b)


def pile_on_lightest(good_histogram: np.ndarray, bad_count: int) -> list[int]:
    """Every bad set votes for the bin that is currently lightest among good votes."""
    return [int(np.argmin(good_histogram))] * bad_count


def vote_weights(s: int, beta: int) -> np.ndarray:
    """2^j mod beta for the j-th member of a set, so votes stay small for any s."""
    return np.asarray([pow(2, j, beta) for j in range(s)], dtype=np.int64)


def votes_from_bits(bits: np.ndarray, beta: int) -> np.ndarray:
    """Read each row of member bits (first member least significant) as an integer mod beta."""
    return (bits.astype(np.int64) @ vote_weights(bits.shape[-1], beta)) % beta


@dataclass
class LightestBinResult:
    assembly: Assembly
    histogram: tuple[int, ...]
    chosen: int
    voted: int
    padded: int
    uniform: bool


def lightest_bin(
    a: Assembly,
    beta: int,
    rng: np.random.Generator | None = None,
    votes: Sequence[int] | None = None,
    adversary: BadVoter = pile_on_lightest,
    vote_encoding: str = "mod",
) -> LightestBinResult:
    """One lightest-bin round.

    Good sets vote with s uniform bits read as an integer mod beta ("reject" re-draws values
    past the last full multiple of beta instead). Bad sets vote last through ``adversary``.
    Explicit ``votes`` for every set bypass both. The output holds the sets of the lightest
    bin (lowest index on ties) padded to ceil(n / beta) with the lowest unused sets, which
    are marked bad.
    """
    if beta < 1 or beta > 1 << a.s:
        raise ParameterError(f"beta={beta} must lie in [1, 2^s] with s={a.s}")
    if vote_encoding not in ("mod", "reject"):
        raise ParameterError(f"unknown vote encoding {vote_encoding!r}")
    uniform = vote_encoding == "reject" or (1 << a.s) % beta == 0
    if not uniform:
        _LOGGER.info("Votes mod %d over %d bits are not exactly uniform", beta, a.s)

    if votes is not None:
        if len(votes) != a.n:
            raise ArityError(f"expected {a.n} votes, got {len(votes)}")
        cast = np.asarray(votes, dtype=np.int64) % beta
    else:
        if rng is None:
            raise ParameterError("lightest_bin needs an rng when votes are not given")
        good = a.good_sets()
        bad = a.bad_sets()
        good_votes = _draw_votes(rng, len(good), a.s, beta, vote_encoding)
        good_histogram = np.bincount(good_votes, minlength=beta)
        bad_votes = np.asarray(adversary(good_histogram, len(bad)), dtype=np.int64) % beta
        cast = np.empty(a.n, dtype=np.int64)
        cast[good] = good_votes
        cast[bad] = bad_votes

    histogram = np.bincount(cast, minlength=beta)
    chosen = int(np.argmin(histogram))
    keep = [i for i in range(a.n) if cast[i] == chosen]
    size = math.ceil(a.n / beta)
    padding = [i for i in range(a.n) if cast[i] != chosen][: size - len(keep)]
    indices = keep + sorted(padding)
    forced = {pos for pos, i in enumerate(indices) if i in padding or i in a.forced_bad}
    result = Assembly(a.universe, tuple(a.sets[i] for i in indices), a.bad_players, forced)
    return LightestBinResult(
        result, tuple(int(v) for v in histogram), chosen, len(keep), len(padding), uniform
    )


def _draw_votes(
    rng: np.random.Generator, count: int, s: int, beta: int, encoding: str
) -> np.ndarray:
    bits = rng.integers(0, 2, size=(count, s), dtype=np.uint8)
    if encoding == "mod" or s > 62:
        return votes_from_bits(bits, beta)
    limit = ((1 << s) // beta) * beta
    weights = np.int64(1) << np.arange(s, dtype=np.int64)
    values = bits.astype(np.int64) @ weights
    while np.any(rejected := values >= limit):
        fresh = rng.integers(0, 2, size=(int(rejected.sum()), s), dtype=np.uint8)
        values[rejected] = fresh.astype(np.int64) @ weights
    return values % beta


def bin_histograms(n: int, s: int, beta: int, trials: int, seed: int) -> np.ndarray:
    """Histograms of ``trials`` all-good lightest-bin votes, one row per trial."""
    rng = np.random.default_rng(seed)
    rows = np.empty((trials, beta), dtype=np.int64)
    for trial in range(trials):
        votes = votes_from_bits(rng.integers(0, 2, size=(n, s), dtype=np.uint8), beta)
        rows[trial] = np.bincount(votes, minlength=beta)
    return rows


def lightest_bin_failure_bound(n: int, b: int, beta: int, delta: float) -> float:
    """Probability that some bin gets fewer than (1 - delta)(n - b)/beta good votes."""
    if beta == 1 or n - b < 1:
        return 0.0
    return min(1.0, beta * chernoff_lower_tail(n - b, 1 / beta, delta))


@dataclass(frozen=True)
class ResilientRound:
    """Last round: the first member of each of the first ``fn.arity`` sets sends one bit."""

    assembly: Assembly
    fn: BooleanFunction

    @classmethod
    def build(cls, a: Assembly, fn: BooleanFunction) -> ResilientRound:
        if a.n < fn.arity:
            raise ArityError(f"{a.n} sets cannot feed a function of arity {fn.arity}")
        if a.n > fn.arity:
            _LOGGER.info("Resilient round uses the first %d of %d sets", fn.arity, a.n)
        return cls(a, fn)

    @property
    def contributors(self) -> tuple[int, ...]:
        return tuple(s[0] for s in self.assembly.sets[: self.fn.arity])

    @property
    def bad_coordinates(self) -> tuple[int, ...]:
        return tuple(i + 1 for i in range(self.fn.arity) if self.assembly.is_bad(i))

    def output(self, bits: Mapping[int, int]) -> int:
        """Apply the function to the contributors' bits, ``bits`` keyed by player."""
        index = 0
        for position, player in enumerate(self.contributors):
            index |= (bits[player] & 1) << position
        return self.fn(index)

    def honest_distance(self) -> Fraction:
        return abs(prob(self.fn, 1) - Fraction(1, 2))

    def adversarial_distance(self) -> Fraction:
        """Largest distance from 1/2 the bad sets reach, over both outcomes."""
        limit = get_settings().max_arity
        if self.fn.arity > limit:
            raise CapacityError(
                f"arity {self.fn.arity} exceeds MAX_ARITY={limit}", bound="MAX_ARITY", limit=limit
            )
        coords = self.bad_coordinates
        return max(bias_value(self.fn, coords, o) for o in (0, 1)) - Fraction(1, 2)

    def protocol(self) -> ProtocolSpec:
        """The round as a one-round coin protocol over the whole universe."""
        positions = np.asarray([c - 1 for c in self.contributors], dtype=np.int64)
        table = self.fn.table

        def batch(rounds: list[np.ndarray]) -> np.ndarray:
            picked = rounds[0][:, positions].astype(np.int64)
            return table[picked @ (np.int64(1) << np.arange(len(positions)))].astype(np.int64)

        def evaluate(t: Transcript) -> int:
            return self.output({p: (t[0] >> (p - 1)) & 1 for p in self.contributors})

        return ProtocolSpec(
            self.assembly.universe, (1,), Domain.COIN, evaluate, "resilient-round", {}, batch
        )


def resilient_round(a: Assembly, fn: BooleanFunction | str) -> ResilientRound:
    if isinstance(fn, str):
        fn = load_function(fn)
    return ResilientRound.build(a, fn)


# --- pipeline ---------------------------------------------------------------------


@dataclass(frozen=True)
class StageConfig:
    """Round ``i`` of k - 1: group (round 1) or split (later) by ``t``, then vote into ``beta``."""

    t: int
    beta: int
    delta: float = 0.2


def auto_resilient(n: int) -> str:
    """Largest recursive majority of 3 that fits n sets and MAX_ARITY."""
    limit = min(n, get_settings().max_arity)
    depth = 0
    while 3 ** (depth + 1) <= limit:
        depth += 1
    return f"recmaj3:{depth}"


@dataclass(frozen=True)
class PipelineConfig:
    rounds: int
    stages: tuple[StageConfig, ...]
    resilient: str = "auto"
    gamma: Fraction = Fraction(1, 4)

    def __post_init__(self) -> None:
        object.__setattr__(self, "gamma", as_fraction(self.gamma))
        if self.rounds < 1:
            raise ScheduleError(f"a pipeline needs at least one round, got {self.rounds}", 1)
        if len(self.stages) != self.rounds - 1:
            raise ScheduleError(
                f"{self.rounds} rounds need {self.rounds - 1} stages, got {len(self.stages)}",
                stage=min(len(self.stages), self.rounds - 1) + 1,
            )

    @classmethod
    def rounded_schedule(
        cls, players: int, rounds: int, gamma: float | Fraction = Fraction(1, 4), **extra: Any
    ) -> PipelineConfig:
        """t = 3 log2(size), beta = count / log2(count)^3, each rounded down and clamped.

        Round 1 uses the number of players for both; later rounds use the current set size
        and set count. Every rounding or clamp is logged.
        """
        stages: list[StageConfig] = []
        n, s = players, 1
        for stage in range(1, rounds):
            if stage == 1:
                t = _clamp(math.floor(3 * math.log2(max(players, 2))), 1, players, "t", stage)
                n, s = players // t, t
                if players % t:
                    _LOGGER.warning(
                        "Stage 1: %d players leave %d unused after grouping by %d",
                        players,
                        players % t,
                        t,
                    )
                raw_beta = math.floor(players / math.log2(max(players, 2)) ** 3)
            else:
                target = max(1, math.floor(3 * math.log2(max(s, 2))))
                t = _largest_divisor_at_most(s, max(1, s // target))
                n, s = n * t, s // t
                raw_beta = math.floor(n / math.log2(max(n, 2)) ** 3)
            beta = _clamp(raw_beta, 1, min(n, 1 << min(s, 62)), "beta", stage)
            if beta == 1:
                _LOGGER.warning("Stage %d degenerates to a single bin", stage)
            stages.append(StageConfig(t, beta))
            n = math.ceil(n / beta)
        return cls(rounds, tuple(stages), gamma=as_fraction(gamma), **extra)

    @classmethod
    def from_params(cls, players: int, rounds: int, params: Mapping[str, Any]) -> PipelineConfig:
        gamma = params.get("gamma", Fraction(1, 4))
        resilient = str(params.get("resilient", "auto"))
        if "stages" not in params:
            return cls.rounded_schedule(players, rounds, gamma, resilient=resilient)
        try:
            stages = tuple(
                StageConfig(int(s["t"]), int(s["beta"]), float(s.get("delta", 0.2)))
                for s in params["stages"]
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ScheduleError(f"malformed stage list: {exc}", stage=1) from exc
        return cls(rounds, stages, resilient, gamma)

    def to_params(self) -> dict[str, Any]:
        return {
            "stages": [{"t": s.t, "beta": s.beta, "delta": s.delta} for s in self.stages],
            "resilient": self.resilient,
            "gamma": str(self.gamma),
        }


def _clamp(value: int, low: int, high: int, name: str, stage: int) -> int:
    clamped = max(low, min(high, value))
    if clamped != value:
        _LOGGER.warning("Stage %d: %s=%d clamped to %d", stage, name, value, clamped)
    return clamped


def _largest_divisor_at_most(s: int, bound: int) -> int:
    return max(d for d in range(1, max(1, bound) + 1) if s % d == 0)


@dataclass
class _Plan:
    n: int
    s: int


class Pipeline:
    """A validated schedule, runnable as a protocol or replayed on assemblies."""

    def __init__(self, cfg: PipelineConfig, players: int) -> None:
        self.cfg = cfg
        self.players = players
        self.plans = validate_schedule(cfg, players)
        final = self.plans[-1] if self.plans else _Plan(players, 1)
        fn_id = auto_resilient(final.n) if cfg.resilient == "auto" else cfg.resilient
        self.fn = load_function(fn_id)
        self.fn_id = fn_id
        if self.fn.arity > final.n:
            raise ScheduleError(
                f"resilient function {fn_id} needs {self.fn.arity} sets, only {final.n} remain",
                stage=cfg.rounds,
            )
        width = cfg.stages[0].t if cfg.stages else 1
        # 0-based player indices of the round-1 sets
        self._groups = np.arange((players // width) * width).reshape(-1, width)

    def protocol(self) -> ProtocolSpec:
        return ProtocolSpec(
            players=self.players,
            bits=(1,) * self.cfg.rounds,
            domain=Domain.COIN,
            evaluator=self._evaluate,
            name="lightest-bin-pipeline",
            params=self.cfg.to_params(),
            batch_evaluator=self._batch,
        )

    def _batch(self, rounds: list[np.ndarray]) -> np.ndarray:
        trials = rounds[0].shape[0]
        sets = np.broadcast_to(self._groups, (trials, *self._groups.shape))
        for index, stage in enumerate(self.cfg.stages):
            if index > 0 and stage.t > 1:
                sets = sets.reshape(trials, sets.shape[1] * stage.t, sets.shape[2] // stage.t)
            bits = np.take_along_axis(
                rounds[index], sets.reshape(trials, -1), axis=1
            ).reshape(sets.shape)
            votes = votes_from_bits(bits, stage.beta)
            counts = (votes[..., None] == np.arange(stage.beta)).sum(axis=1)
            chosen = counts.argmin(axis=1)
            n = sets.shape[1]
            position = np.arange(n)
            key = np.where(votes == chosen[:, None], position, n + position)
            order = np.argsort(key, axis=1, kind="stable")[:, : math.ceil(n / stage.beta)]
            sets = np.take_along_axis(sets, order[:, :, None], axis=1)
        contributors = sets[:, : self.fn.arity, 0]
        picked = np.take_along_axis(rounds[-1], contributors, axis=1).astype(np.int64)
        index = picked @ (np.int64(1) << np.arange(self.fn.arity, dtype=np.int64))
        return self.fn.table[index].astype(np.int64)

    def _evaluate(self, t: Transcript) -> int:
        positions = np.arange(self.players)
        rounds = [
            np.asarray([(value >> int(i)) & 1 for i in positions], dtype=bool)[None, :]
            for value in t
        ]
        return int(self._batch(rounds)[0])

    def trace_assemblies(
        self, transcript: Transcript, bad_players: Sequence[int] = ()
    ) -> list[Assembly]:
        """Replay the transcript through the assembly transformations, one entry per step."""
        a = Assembly.singletons(self.players, bad_players)
        history = [a]
        for index, stage in enumerate(self.cfg.stages):
            a = grouping(a, stage.t) if index == 0 else splitting(a, stage.t)
            history.append(a)
            value = transcript[index]
            member_bits = np.asarray(
                [[(value >> (m - 1)) & 1 for m in s] for s in a.sets], dtype=np.int64
            )
            votes = votes_from_bits(member_bits, stage.beta)
            a = lightest_bin(a, stage.beta, votes=votes.tolist()).assembly
            history.append(a)
        return history

    def trace_output(self, transcript: Transcript, bad_players: Sequence[int] = ()) -> int:
        final = self.trace_assemblies(transcript, bad_players)[-1]
        last = transcript[-1]
        bits = {p: (last >> (p - 1)) & 1 for s in final.sets for p in s}
        return ResilientRound.build(final, self.fn).output(bits)


def validate_schedule(cfg: PipelineConfig, players: int) -> list[_Plan]:
    """Check divisibility and beta <= 2^s stage by stage; returns (n, s) after each stage."""
    plans: list[_Plan] = []
    n, s = players, 1
    for index, stage in enumerate(cfg.stages, start=1):
        if stage.t < 1 or stage.beta < 1:
            raise ScheduleError(f"stage {index}: t and beta must be positive", stage=index)
        if index == 1:
            if stage.t > players:
                raise ScheduleError(
                    f"stage 1: cannot group {players} players by {stage.t}", stage=index
                )
            n, s = players // stage.t, stage.t
        else:
            if s % stage.t:
                raise ScheduleError(
                    f"stage {index}: split factor {stage.t} does not divide set size {s}",
                    stage=index,
                )
            n, s = n * stage.t, s // stage.t
        if stage.beta > 1 << min(s, 62):
            raise ScheduleError(
                f"stage {index}: beta={stage.beta} exceeds 2^{s} possible votes", stage=index
            )
        if not 0 < stage.delta <= 1:
            raise ScheduleError(f"stage {index}: delta must lie in (0, 1]", stage=index)
        n = math.ceil(n / stage.beta)
        plans.append(_Plan(n, s))
    return plans


def build_pipeline(cfg: PipelineConfig, players: int) -> ProtocolSpec:
    """The k-round coin protocol described by ``cfg`` over ``players`` players."""
    return Pipeline(cfg, players).protocol()


# --- bound checks -----------------------------------------------------------------


@dataclass
class TransformationCheck:
    operation: str
    bad_before: int
    bad_after: int
    bound: float
    holds: bool
    failure_probability: float = 0.0
    result: Assembly | None = field(default=None, repr=False)


def transformation_bound(a: Assembly, op: str, params: Mapping[str, Any]) -> tuple[float, float]:
    """(bound on bad output sets, probability the bound may fail) for one transformation."""
    b = a.bad_set_count
    if op == "grouping":
        return float(b), 0.0
    if op == "splitting":
        return float(b * int(params["t"])), 0.0
    if op == "lightest_bin":
        beta, delta = int(params["beta"]), float(params.get("delta", 0.2))
        bound = math.ceil(a.n / beta) - (1 - delta) * (a.n - b) / beta
        return bound, lightest_bin_failure_bound(a.n, b, beta, delta)
    raise ParameterError(f"unknown transformation {op!r}")


def check_transformation(
    a: Assembly, op: str, params: Mapping[str, Any], rng: np.random.Generator | None = None
) -> TransformationCheck:
    """Apply one transformation and compare its bad-set count with the bound."""
    if op == "grouping":
        result = grouping(a, int(params["t"]))
    elif op == "splitting":
        result = splitting(a, int(params["t"]))
    elif op == "lightest_bin":
        result = lightest_bin(
            a, int(params["beta"]), rng=rng or np.random.default_rng(params.get("seed", 0))
        ).assembly
    else:
        raise ParameterError(f"unknown transformation {op!r}")
    bound, failure = transformation_bound(a, op, params)
    bad = result.bad_set_count
    return TransformationCheck(op, a.bad_set_count, bad, bound, bad <= bound, failure, result)


def verify_transformation_arithmetic(
    a: Assembly, op: str, params: Mapping[str, Any], rng: np.random.Generator | None = None
) -> bool:
    """True when the transformation's bad-set count respects its bound.

    The lightest-bin bound is statistical: it may fail with the probability reported by
    ``transformation_bound``.
    """
    return check_transformation(a, op, params, rng).holds
