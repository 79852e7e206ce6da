"""Multi-round full-information protocols and their optimal adversaries.

A transcript holds one integer per round. In round ``i`` player ``p`` owns bits
``[(p - 1) * r_i, p * r_i)`` of that integer, so player 1 is least significant. For exact
evaluation the rounds are concatenated into one global index with round 1 in the low bits.

Within a round the good players speak first and the coalition answers after seeing them;
that ordering is the only one modelled.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Collection, Iterable, Sequence
from dataclasses import dataclass, field
from enum import StrEnum
from fractions import Fraction
from itertools import combinations
from typing import Any, NamedTuple

import numpy as np

from .boolfn import BooleanFunction, CoordSet, check_arity, coord_set
from .config import get_settings
from .const import DEFAULT_CONFIDENCE
from .exceptions import ArityError, CapacityError, ParameterError
from .models import MonteCarloEstimate, ResilienceReport
from .stats import as_fraction, hoeffding_halfwidth
from .utils.parallel import chunk_ranges, map_ordered

_LOGGER = logging.getLogger(__name__)

Transcript = tuple[int, ...]
#: Vectorized evaluator: one ``(trials, players * r_i)`` bool array per round -> outcomes.
BatchEvaluator = Callable[[list[np.ndarray]], np.ndarray]
#: ``responder(history, good_bits)`` returns the coalition's bits for the current round.
Responder = Callable[[Transcript, int], int]
Outcome = int | Collection[int]

_TABLE_CHUNK = 1 << 16
_BATCH_CHUNK = 4096
_SCALAR_CHUNK = 1024


class Domain(StrEnum):
    COIN = "coin"
    LEADER = "leader"


class EvalMode(StrEnum):
    EXACT = "exact"
    MC = "mc"


def require_exact(total_bits: int, name: str = "protocol") -> None:
    """Refuse exact work on transcripts longer than the configured budget."""
    limit = get_settings().exact_budget
    if total_bits > limit:
        _LOGGER.warning("Refusing exact evaluation of %s: %d bits > %d", name, total_bits, limit)
        raise CapacityError(
            f"{name} has {total_bits} transcript bits, EXACT_BUDGET={limit}",
            bound="EXACT_BUDGET",
            limit=limit,
        )


@dataclass(frozen=True)
class BitLayout:
    """Which agent owns each transcript bit.

    ``owners[i][j]`` is the 1-based agent owning bit ``j`` of round ``i``. The player layout
    maps bits to players; the bit layout gives every (player, bit position) its own agent.
    """

    widths: tuple[int, ...]
    owners: tuple[tuple[int, ...], ...]
    agents: int

    @classmethod
    def for_players(cls, players: int, bits: Sequence[int]) -> BitLayout:
        owners = tuple(tuple(j // r + 1 for j in range(players * r)) for r in bits)
        return cls(tuple(players * r for r in bits), owners, players)

    @classmethod
    def for_bits(cls, players: int, bits: Sequence[int]) -> BitLayout:
        """Agent ``(p - 1) * R + s + 1`` owns bit ``s`` of player ``p`` in every round."""
        longest = max(bits)
        owners = tuple(
            tuple((j // r) * longest + j % r + 1 for j in range(players * r)) for r in bits
        )
        return cls(tuple(players * r for r in bits), owners, players * longest)

    @property
    def rounds(self) -> int:
        return len(self.widths)

    @property
    def offsets(self) -> tuple[int, ...]:
        result, total = [], 0
        for width in self.widths:
            result.append(total)
            total += width
        return tuple(result)

    @property
    def total_bits(self) -> int:
        return sum(self.widths)

    def positions(self, round_index: int, coalition: Collection[int]) -> list[int]:
        """Bit positions of ``round_index`` owned by the coalition, ascending."""
        return [j for j, owner in enumerate(self.owners[round_index]) if owner in coalition]

    def bad_mask(self, round_index: int, coalition: Collection[int]) -> int:
        mask = 0
        for j in self.positions(round_index, coalition):
            mask |= 1 << j
        return mask


@dataclass(frozen=True, eq=False)
class ProtocolSpec:
    """A k-round protocol: shape, output domain and a pure evaluator on transcripts."""

    players: int
    bits: tuple[int, ...]
    domain: Domain
    evaluator: Callable[[Transcript], int]
    name: str = "protocol"
    params: dict[str, Any] = field(default_factory=dict)
    batch_evaluator: BatchEvaluator | None = field(default=None, repr=False)
    _tables: dict[str, np.ndarray] = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self) -> None:
        if self.players < 1:
            raise ParameterError(f"a protocol needs at least one player, got {self.players}")
        bits = tuple(int(r) for r in self.bits)
        if not bits or min(bits) < 1:
            raise ParameterError(f"bits per round must be a non-empty list of r >= 1, got {bits}")
        object.__setattr__(self, "bits", bits)
        object.__setattr__(self, "domain", Domain(self.domain))

    @property
    def rounds(self) -> int:
        return len(self.bits)

    @property
    def widths(self) -> tuple[int, ...]:
        return tuple(self.players * r for r in self.bits)

    @property
    def total_bits(self) -> int:
        return sum(self.widths)

    @property
    def layout(self) -> BitLayout:
        return BitLayout.for_players(self.players, self.bits)

    def outcomes(self) -> range:
        return range(2) if self.domain is Domain.COIN else range(1, self.players + 1)

    def check_transcript(self, transcript: Transcript) -> None:
        if len(transcript) != self.rounds:
            raise ArityError(f"{self.name} has {self.rounds} rounds, got {len(transcript)}")
        for i, (value, width) in enumerate(zip(transcript, self.widths, strict=True)):
            if not 0 <= value < 1 << width:
                raise ArityError(f"round {i + 1} value {value} does not fit {width} bits")

    def split(self, index: int) -> Transcript:
        """Global transcript index to per-round integers."""
        rounds = []
        for width in self.widths:
            rounds.append(index & ((1 << width) - 1))
            index >>= width
        return tuple(rounds)

    def join(self, transcript: Sequence[int]) -> int:
        """Per-round integers (possibly only a prefix) to a global index."""
        index, shift = 0, 0
        for value, width in zip(transcript, self.widths, strict=False):
            index |= value << shift
            shift += width
        return index

    def evaluate(self, transcript: Transcript) -> int:
        self.check_transcript(transcript)
        return self.evaluator(transcript)

    def outcome_table(self) -> np.ndarray:
        """Outcome of every transcript, indexed by global index. Cached and read-only."""
        require_exact(self.total_bits, self.name)
        table = self._tables.get("outcomes")
        if table is None:
            table = self._build_table()
            bad = ~np.isin(table, np.asarray(self.outcomes()))
            if np.any(bad):
                culprit = int(np.flatnonzero(bad)[0])
                raise ParameterError(
                    f"{self.name} returned {int(table[culprit])} on {self.split(culprit)}, "
                    f"outside the {self.domain} domain"
                )
            table.flags.writeable = False
            self._tables["outcomes"] = table
        return table

    def _build_table(self) -> np.ndarray:
        size = 1 << self.total_bits
        if self.batch_evaluator is None:
            return np.fromiter(
                (self.evaluator(self.split(z)) for z in range(size)), dtype=np.int64, count=size
            )
        table = np.empty(size, dtype=np.int64)
        shifts = np.arange(self.total_bits, dtype=np.int64)
        for start in range(0, size, _TABLE_CHUNK):
            idx = np.arange(start, min(start + _TABLE_CHUNK, size), dtype=np.int64)
            bits = ((idx[:, None] >> shifts) & 1).astype(bool)
            rounds = np.split(bits, np.cumsum(self.widths)[:-1], axis=1)
            table[idx] = np.asarray(self.batch_evaluator(rounds), dtype=np.int64)
        return table


@dataclass(frozen=True)
class AdversaryStrategy:
    """A coalition and one responder per round.

    ``flood`` marks the constant strategy (every coalition bit equal to it), which the
    vectorized Monte Carlo path can apply without calling the responders.
    """

    coalition: CoordSet
    responders: tuple[Responder, ...]
    layout: BitLayout | None = None
    flood: int | None = None


def _draw(rng: np.random.Generator, width: int) -> int:
    return int.from_bytes(rng.bytes((width + 7) // 8), "little") & ((1 << width) - 1)


def draw_transcript(p: ProtocolSpec, rng: np.random.Generator) -> Transcript:
    """One uniformly random transcript, round by round."""
    return tuple(_draw(rng, width) for width in p.widths)


def honest_run(p: ProtocolSpec, rng: np.random.Generator) -> int:
    """Run ``p`` with every bit drawn uniformly from ``rng``."""
    return p.evaluator(draw_transcript(p, rng))


def _resolve_layout(p: ProtocolSpec, layout: BitLayout | None) -> BitLayout:
    layout = layout or p.layout
    if layout.widths != p.widths:
        raise ArityError(f"layout widths {layout.widths} do not match {p.name} {p.widths}")
    return layout


def run_with_adversary(p: ProtocolSpec, adv: AdversaryStrategy, rng: np.random.Generator) -> int:
    """Run ``p`` once against ``adv``.

    Good bits are drawn exactly as in ``honest_run``, so the empty coalition reproduces it
    seed for seed.
    """
    layout = _resolve_layout(p, adv.layout)
    if len(adv.responders) != p.rounds:
        raise ParameterError(
            f"strategy has {len(adv.responders)} responders for {p.rounds} rounds"
        )
    coalition = frozenset(coord_set(adv.coalition, layout.agents))
    history: list[int] = []
    for i, width in enumerate(p.widths):
        drawn = _draw(rng, width)
        mask = layout.bad_mask(i, coalition)
        if mask:
            good = drawn & ~mask
            drawn = good | (adv.responders[i](tuple(history), good) & mask)
        history.append(drawn)
    return p.evaluator(tuple(history))


def constant_strategy(
    p: ProtocolSpec, B: Iterable[int], value: int, layout: BitLayout | None = None
) -> AdversaryStrategy:
    """Flooding adversary: every coalition bit is ``value`` in every round."""
    layout = _resolve_layout(p, layout)
    coalition = coord_set(B, layout.agents)
    members = frozenset(coalition)
    masks = [layout.bad_mask(i, members) if value else 0 for i in range(p.rounds)]

    def responder_for(mask: int) -> Responder:
        return lambda history, good: mask

    return AdversaryStrategy(
        coalition, tuple(responder_for(m) for m in masks), layout, flood=int(bool(value))
    )


def _target_mask(p: ProtocolSpec, o: Outcome) -> np.ndarray:
    table = p.outcome_table()
    if isinstance(o, int | np.integer):
        if int(o) not in p.outcomes():
            raise ParameterError(f"outcome {o} is outside the {p.domain} domain of {p.name}")
        return table == int(o)
    wanted = np.asarray(sorted(int(v) for v in o), dtype=np.int64)
    return np.isin(table, wanted)


class _Choice(NamedTuple):
    good: list[int]
    bad: list[int]
    table: np.ndarray


def _compress(value: int, positions: list[int]) -> int:
    # positions are in most-significant-first order
    result = 0
    for pos in positions:
        result = (result << 1) | ((value >> pos) & 1)
    return result


def _expand(code: int, positions: list[int]) -> int:
    result = 0
    for k, pos in enumerate(reversed(positions)):
        result |= ((code >> k) & 1) << pos
    return result


def backward_induction(
    target: np.ndarray, layout: BitLayout, coalition: Collection[int], keep_choices: bool = False
) -> tuple[Fraction, list[_Choice]]:
    """Optimal adversary value of a 0/1 target table under ``layout``.

    Values are kept as integer counts of good-bit assignments. Rounds are folded from last to
    first: maximize over the coalition's bits of the round, then sum over its good bits.
    """
    members = frozenset(coalition)
    values = np.asarray(target, dtype=np.int64)
    offsets = layout.offsets
    good_total = 0
    choices: list[_Choice] = []
    for i in reversed(range(layout.rounds)):
        width = layout.widths[i]
        prefix = 1 << offsets[i]
        cube = values.reshape((2,) * width + (prefix,))
        bad = sorted(layout.positions(i, members), reverse=True)
        good = [j for j in range(width - 1, -1, -1) if j not in bad]
        # axis a of the cube carries bit width - 1 - a
        good_axes = [width - 1 - j for j in good]
        bad_axes = [width - 1 - j for j in bad]
        moved = cube.transpose(good_axes + bad_axes + [width]).reshape(
            1 << len(good), 1 << len(bad), prefix
        )
        if keep_choices:
            best = moved.argmax(axis=1)
            choices.insert(0, _Choice(good, bad, best))
        values = moved.max(axis=1).sum(axis=0)
        good_total += len(good)
    return Fraction(int(values[0]), 1 << good_total), choices


def table_adversary_value(
    target: np.ndarray, layout: BitLayout, coalition: Collection[int]
) -> Fraction:
    """``max_sigma Pr[target]`` for an explicit 0/1 table over the layout's transcripts."""
    require_exact(layout.total_bits)
    value, _ = backward_induction(target, layout, coalition)
    return value


def exact_adversary_value(
    p: ProtocolSpec, B: Iterable[int], o: Outcome, layout: BitLayout | None = None
) -> Fraction:
    """Exact ``max_sigma Pr[outcome = o]`` (or ``in o`` for a set) for coalition ``B``."""
    layout = _resolve_layout(p, layout)
    coalition = coord_set(B, layout.agents)
    value, _ = backward_induction(_target_mask(p, o), layout, coalition)
    _LOGGER.debug("Exact value of %s for B=%s toward %s: %s", p.name, coalition, o, value)
    return value


def optimal_strategy(
    p: ProtocolSpec, B: Iterable[int], o: Outcome, layout: BitLayout | None = None
) -> AdversaryStrategy:
    """The backward-induction witness; ties go to the numerically smallest coalition bits."""
    layout = _resolve_layout(p, layout)
    coalition = coord_set(B, layout.agents)
    _, choices = backward_induction(_target_mask(p, o), layout, coalition, keep_choices=True)
    offsets = layout.offsets

    def responder_for(choice: _Choice) -> Responder:
        def respond(history: Transcript, good: int) -> int:
            prefix = sum(value << offsets[j] for j, value in enumerate(history))
            code = int(choice.table[_compress(good, choice.good), prefix])
            return _expand(code, choice.bad)

        return respond

    return AdversaryStrategy(coalition, tuple(responder_for(c) for c in choices), layout)


def _hits(table_or_outcomes: np.ndarray, o: Outcome) -> int:
    if isinstance(o, int | np.integer):
        return int(np.count_nonzero(table_or_outcomes == int(o)))
    return int(np.count_nonzero(np.isin(table_or_outcomes, np.asarray(sorted(o)))))


def _batch_hits(
    p: ProtocolSpec, adv: AdversaryStrategy | None, o: Outcome, seed: int, chunk: int, size: int
) -> int:
    rng = np.random.default_rng([seed, chunk])
    layout = _resolve_layout(p, adv.layout if adv else None)
    members = frozenset(adv.coalition) if adv else frozenset()
    rounds = []
    for i, width in enumerate(p.widths):
        bits = rng.integers(0, 2, size=(size, width), dtype=np.uint8).astype(bool)
        if adv is not None and members:
            bits[:, layout.positions(i, members)] = bool(adv.flood)
        rounds.append(bits)
    assert p.batch_evaluator is not None
    return _hits(np.asarray(p.batch_evaluator(rounds)), o)


def monte_carlo_value(
    p: ProtocolSpec,
    adv: AdversaryStrategy | None,
    o: Outcome,
    trials: int,
    seed: int,
    confidence: float = DEFAULT_CONFIDENCE,
    threads: int | None = None,
) -> MonteCarloEstimate:
    """Estimate ``Pr[outcome = o]`` against ``adv`` (honest when None).

    Work is split into chunks seeded by ``(seed, chunk index)`` so the result is the same for
    any thread count. Honest and flooding runs of protocols with a vectorized evaluator take
    the vectorized path; everything else replays trial ``t`` from ``(seed, t)``.
    """
    if trials < 1:
        raise ParameterError(f"trials must be positive, got {trials}")
    halfwidth = hoeffding_halfwidth(trials, confidence)

    if p.batch_evaluator is not None and (adv is None or adv.flood is not None):
        chunks = chunk_ranges(trials, _BATCH_CHUNK)
        counts = map_ordered(
            lambda idx: _batch_hits(p, adv, o, seed, idx, len(chunks[idx])),
            range(len(chunks)),
            threads,
        )
        return MonteCarloEstimate(sum(counts), trials, seed, confidence, halfwidth)

    def run_chunk(trial_range: range) -> int:
        hits = 0
        for trial in trial_range:
            rng = np.random.default_rng([seed, trial])
            outcome = honest_run(p, rng) if adv is None else run_with_adversary(p, adv, rng)
            hits += _hits(np.asarray([outcome]), o)
        return hits

    counts = map_ordered(run_chunk, chunk_ranges(trials, _SCALAR_CHUNK), threads)
    return MonteCarloEstimate(sum(counts), trials, seed, confidence, halfwidth)


def induced_round_function(p: ProtocolSpec, prefix: Transcript) -> BooleanFunction:
    """The last-round function left once rounds 1..k-1 are fixed to ``prefix``."""
    if p.domain is not Domain.COIN:
        raise ParameterError(f"{p.name} is a {p.domain} protocol; induced functions need coin")
    if p.rounds < 2:
        raise ParameterError("induced round functions need at least two rounds")
    if len(prefix) != p.rounds - 1:
        raise ArityError(f"prefix has {len(prefix)} rounds, expected {p.rounds - 1}")
    width = p.widths[-1]
    check_arity(width)
    p.check_transcript(tuple(prefix) + (0,))

    if p.total_bits <= get_settings().exact_budget:
        offset = p.total_bits - width
        suffixes = np.arange(1 << width, dtype=np.int64) << offset
        return BooleanFunction(width, p.outcome_table()[p.join(prefix) + suffixes] == 1)
    column = [p.evaluator(tuple(prefix) + (x,)) for x in range(1 << width)]
    return BooleanFunction(width, np.asarray(column) == 1)


def leader_to_coinflip(p: ProtocolSpec) -> ProtocolSpec:
    """Append a round in which the elected leader's first bit is the coin.

    The extra round has the same width per player as the last round of ``p``.
    """
    if p.domain is not Domain.LEADER:
        raise ParameterError(f"{p.name} is not a leader election protocol")
    r = p.bits[-1]

    def evaluate(transcript: Transcript) -> int:
        leader = p.evaluator(transcript[:-1])
        return (transcript[-1] >> ((leader - 1) * r)) & 1

    batch = None
    if p.batch_evaluator is not None:
        source = p.batch_evaluator

        def batch(rounds: list[np.ndarray]) -> np.ndarray:
            leaders = np.asarray(source(rounds[:-1]), dtype=np.int64)
            last = rounds[-1]
            return last[np.arange(last.shape[0]), (leaders - 1) * r].astype(np.int64)

    return ProtocolSpec(
        players=p.players,
        bits=p.bits + (r,),
        domain=Domain.COIN,
        evaluator=evaluate,
        name=f"{p.name}+coin",
        params={"source": p.name, **p.params},
        batch_evaluator=batch,
    )


def good_leader_probability(p: ProtocolSpec, B: Iterable[int]) -> Fraction:
    """Smallest probability, over all strategies of ``B``, that a good player is elected."""
    if p.domain is not Domain.LEADER:
        raise ParameterError(f"{p.name} is not a leader election protocol")
    coalition = coord_set(B, p.players)
    return 1 - exact_adversary_value(p, coalition, set(coalition))


class LeaderCoinCheck(NamedTuple):
    """Exact comparison of a leader protocol with the coin protocol derived from it."""

    good_leader: Fraction
    coin_values: tuple[Fraction, Fraction]
    bound: Fraction
    coin_bound_holds: bool
    leader_failure_implied: bool


def leader_coin_check(p: ProtocolSpec, B: Iterable[int]) -> LeaderCoinCheck:
    """Check both directions of the leader/coin relation for one coalition.

    The derived coin can be pushed to at most ``1 - good/2`` toward either outcome, and a
    coin pushed to ``v`` forces a bad leader with probability at least ``2v - 1``.
    """
    coalition = coord_set(B, p.players)
    good = good_leader_probability(p, coalition)
    coin = leader_to_coinflip(p)
    values = (
        exact_adversary_value(coin, coalition, 0),
        exact_adversary_value(coin, coalition, 1),
    )
    bound = 1 - good / 2
    return LeaderCoinCheck(
        good_leader=good,
        coin_values=values,
        bound=bound,
        coin_bound_holds=max(values) <= bound,
        leader_failure_implied=1 - good >= 2 * max(values) - 1,
    )


def resilience_check(
    p: ProtocolSpec,
    b: int,
    gamma: float | Fraction,
    mode: EvalMode = EvalMode.EXACT,
    trials: int = 10_000,
    seed: int = 0,
    confidence: float = DEFAULT_CONFIDENCE,
) -> ResilienceReport:
    """Find the worst coalition of size ``b`` and decide (b, gamma)-resilience.

    Coin protocols are resilient when no coalition pushes either outcome above 1 - gamma;
    leader protocols when no coalition gets one of its own elected with probability above
    1 - gamma. Adversary values only grow with the coalition, so size exactly ``b`` suffices.
    """
    mode = EvalMode(mode)
    gamma = as_fraction(gamma)
    if b < 0:
        raise ParameterError(f"coalition budget must be non-negative, got {b}")
    if b > p.players:
        _LOGGER.info("Coalition budget %d clamped to %d players", b, p.players)
        b = p.players
    settings = get_settings()
    count = math.comb(p.players, b)
    if count > settings.max_coalitions:
        raise CapacityError(
            f"{count} coalitions of size {b} exceed MAX_COALITIONS={settings.max_coalitions}",
            bound="MAX_COALITIONS",
            limit=settings.max_coalitions,
        )
    if mode is EvalMode.EXACT:
        require_exact(p.total_bits, p.name)

    worst: tuple[tuple[int, ...], str, Fraction | float, float | None] | None = None
    for members in combinations(range(1, p.players + 1), b):
        for label, target, flood in _resilience_targets(p, members):
            if mode is EvalMode.EXACT:
                value: Fraction | float = exact_adversary_value(p, members, target)
                ci = None
            else:
                estimates = [
                    monte_carlo_value(
                        p, constant_strategy(p, members, bit), target, trials, seed, confidence
                    )
                    for bit in flood
                ]
                best = max(estimates, key=lambda e: e.hits)
                value, ci = best.estimate, best.ci_halfwidth
            if worst is None or value > worst[2]:
                worst = (members, label, value, ci)

    assert worst is not None
    coalition, label, value, ci = worst
    _LOGGER.info("Worst coalition of %s at b=%d: %s -> %s", p.name, b, coalition, value)
    return ResilienceReport(
        protocol=p.name,
        players=p.players,
        rounds=p.rounds,
        b=b,
        gamma=gamma,
        mode=str(mode),
        worst_coalition=coalition,
        worst_outcome=label,
        value=value,
        resilient=value <= 1 - gamma,
        coalitions_checked=count,
        lower_bound=mode is EvalMode.MC,
        trials=trials if mode is EvalMode.MC else None,
        seed=seed if mode is EvalMode.MC else None,
        ci_halfwidth=ci,
    )


def _resilience_targets(
    p: ProtocolSpec, members: tuple[int, ...]
) -> list[tuple[str, Outcome, tuple[int, ...]]]:
    if p.domain is Domain.COIN:
        return [("0", 0, (0,)), ("1", 1, (1,))]
    return [("coalition", set(members), (0, 1))]
