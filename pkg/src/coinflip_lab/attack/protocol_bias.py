"""Biasing k-round coin protocols by recursion on the number of rounds.

The last round is attacked per prefix with the heavy/random process over a common random set.
Earlier rounds are attacked recursively on the indicator "the prefix still has a heavy set",
while the chisel loop halves the candidate supports of every heavy-set slot until each has at
most ``c`` coordinates.
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, NamedTuple

import numpy as np

from ..boolfn import BooleanFunction
from ..exceptions import InvariantViolation, NotEnoughMassError, ParameterError
from ..models import AttackReport, ExperimentRow
from ..protocol import (
    BitLayout,
    Domain,
    ProtocolSpec,
    exact_adversary_value,
    require_exact,
    table_adversary_value,
)
from ..stats import as_fraction, reverse_markov
from .greedy import greedy_to, kkl_greedy
from .params import AttackParams, theorem_bound
from .process import select_common_set

_LOGGER = logging.getLogger(__name__)


@dataclass
class HeavySetMap:
    """g: prefix -> heavy set or bottom.

    ``slots[alpha, j - 1]`` is the j-th largest element of g(alpha), 0 when g(alpha) has fewer
    than j elements; ``alive[alpha]`` is False exactly when g(alpha) is bottom.
    """

    slots: np.ndarray
    alive: np.ndarray

    @classmethod
    def empty(cls, prefixes: int, h: int) -> HeavySetMap:
        return cls(np.zeros((prefixes, h), dtype=np.int64), np.zeros(prefixes, dtype=bool))

    def assign(self, alpha: int, heavy: Sequence[int]) -> None:
        ordered = sorted(heavy, reverse=True)
        self.slots[alpha, :] = 0
        self.slots[alpha, : len(ordered)] = ordered
        self.alive[alpha] = True

    def get(self, alpha: int) -> tuple[int, ...] | None:
        if not self.alive[alpha]:
            return None
        return tuple(sorted(int(v) for v in self.slots[alpha] if v))

    def slot(self, alpha: int, j: int) -> int | None:
        """g_j(alpha); None for bottom, 0 for a vacant slot."""
        if not self.alive[alpha]:
            return None
        return int(self.slots[alpha, j - 1])

    def restricted(self, j: int, members: Sequence[int]) -> np.ndarray:
        """Alive mask after dropping prefixes whose j-th element escapes ``members``."""
        column = self.slots[:, j - 1]
        return self.alive & ((column == 0) | np.isin(column, np.asarray(members)))

    def union(self) -> set[int]:
        return {int(v) for v in np.unique(self.slots[self.alive]) if v}


class _Found(NamedTuple):
    """Coalition of one recursive call, split by how each member was chosen."""

    coalition: tuple[int, ...]
    b_r: frozenset[int]
    b_h: frozenset[int]
    b_i: frozenset[int]
    value: Fraction


@dataclass
class _RunState:
    params: AttackParams
    rng: np.random.Generator
    events: list[dict[str, Any]] = field(default_factory=list)
    memo: dict[tuple[bytes, int, Fraction], _Found] = field(default_factory=dict)

    def record(self, depth: int, phase: str, **details: Any) -> None:
        event = {"depth": depth, "phase": phase, **details}
        self.events.append(event)
        _LOGGER.debug("attack %s", event)

    def fail(self, message: str, depth: int, **details: Any) -> InvariantViolation:
        self.record(depth, "violation", message=message, **details)
        return InvariantViolation(message, trace=list(self.events))


def _truncate(layout: BitLayout, rounds: int) -> BitLayout:
    return BitLayout(layout.widths[:rounds], layout.owners[:rounds], layout.agents)


def _agents(layout: BitLayout, round_index: int, coordinates: Sequence[int]) -> frozenset[int]:
    return frozenset(layout.owners[round_index][c - 1] for c in coordinates)


def _bias(
    target: np.ndarray, layout: BitLayout, mass: Fraction, goal: Fraction, state: _RunState
) -> _Found:
    """Coalition (agent ids) pushing Pr[target] to at least ``goal`` under ``layout``.

    ``mass`` is a lower bound on the honest probability of ``target``. The result is checked
    with the exact oracle before it is returned.
    """
    depth = layout.rounds
    key = (np.packbits(target).tobytes(), depth, goal)
    if key in state.memo:
        return state.memo[key]
    if mass <= 0:
        raise NotEnoughMassError("target has zero honest probability", measured=mass, required=goal)

    if depth == 1:
        trace = greedy_to(BooleanFunction(layout.widths[0], target), 1, goal)
        b_r, b_h, b_i = frozenset(), _agents(layout, 0, trace.b_h), frozenset()
        state.record(depth, "greedy", coalition=sorted(b_h), value=trace.final_prob)
    else:
        b_r, b_h, b_i = _bias_rounds(target, layout, mass, goal, state)

    coalition = tuple(sorted(b_r | b_h | b_i))
    value = table_adversary_value(target, layout, coalition)
    if value < goal:
        raise state.fail(f"coalition reached {value} < {goal}", depth, coalition=coalition)
    found = _Found(coalition, b_r, b_h, b_i, value)
    state.memo[key] = found
    return found


def _bias_rounds(
    target: np.ndarray, layout: BitLayout, mass: Fraction, goal: Fraction, state: _RunState
) -> tuple[frozenset[int], frozenset[int], frozenset[int]]:
    params, depth = state.params, layout.rounds
    last = depth - 1
    width = layout.widths[last]
    prefixes = 1 << (layout.total_bits - width)
    earlier = _truncate(layout, last)
    eps = 1 - goal

    # column alpha holds the last-round function after prefix alpha
    columns = target.reshape(1 << width, prefixes)
    masses = [Fraction(int(v), 1 << width) for v in columns.sum(axis=0)]
    honest = sum(masses, Fraction(0)) / prefixes
    family = [alpha for alpha in range(prefixes) if masses[alpha] >= mass / 2]
    share = Fraction(len(family), prefixes)
    floor = reverse_markov(honest, mass / 2)
    state.record(depth, "family", size=len(family), share=share, floor=floor)
    if share < floor:
        raise state.fail(f"family share {share} below reverse Markov floor {floor}", depth)

    functions = [(BooleanFunction(width, columns[:, alpha]), 1) for alpha in family]
    found = select_common_set(functions, params.with_gamma(eps / 2), state.rng)
    heavy = HeavySetMap.empty(prefixes, params.h)
    for alpha, member in zip(family, found.members, strict=True):
        if member.b_h is not None:
            heavy.assign(alpha, member.b_h)
    covered = Fraction(int(heavy.alive.sum()), prefixes)
    state.record(depth, "heavy-map", b_r=found.b_r, coverage=found.coverage, alive=covered)
    if covered < mass / 6:
        raise state.fail(f"Pr[g != bottom] = {covered} below {mass / 6}", depth)

    b_i: set[int] = set()

    def measure(alive: np.ndarray) -> Fraction:
        return table_adversary_value(alive, earlier, b_i)

    def boost(alive: np.ndarray, to: Fraction) -> None:
        if measure(alive) >= to:
            return
        honest_alive = Fraction(int(alive.sum()), prefixes)
        b_i.update(_bias(alive, earlier, honest_alive, to, state).coalition)
        reached = measure(alive)
        state.record(depth, "boost", target=to, value=reached, b_i=sorted(b_i))
        if reached < to:
            raise state.fail(f"boost reached {reached} < {to}", depth)

    boost(heavy.alive, params.boost)
    supports = [list(range(1, width + 1)) for _ in range(params.h)]
    for j in range(1, params.h + 1):
        if not np.any(heavy.slots[heavy.alive, j - 1]):
            # every surviving heavy set is shorter than j
            supports[j - 1] = []
            continue
        while len(supports[j - 1]) > params.c:
            half, alive, value = _split(heavy, j, supports[j - 1], measure, state, depth)
            supports[j - 1] = half
            heavy.alive = alive
            _check_supports(heavy, supports, state, depth)
            state.record(depth, "chisel", slot=j, size=len(half), value=value)
            boost(heavy.alive, params.boost)

    boost(heavy.alive, 1 - eps / 2)
    b_r = _agents(layout, last, found.b_r)
    b_h = _agents(layout, last, sorted(heavy.union()))
    state.record(depth, "coalition", b_r=sorted(b_r), b_h=sorted(b_h), b_i=sorted(b_i))
    return b_r, b_h, frozenset(b_i)


def _split(
    heavy: HeavySetMap,
    j: int,
    support: list[int],
    measure: Callable[[np.ndarray], Fraction],
    state: _RunState,
    depth: int,
) -> tuple[list[int], np.ndarray, Fraction]:
    """Keep the better half of a random equipartition of ``support``."""
    floor = state.params.boost / 2
    for attempt in range(state.params.retries):
        shuffled = [support[i] for i in state.rng.permutation(len(support))]
        middle = len(shuffled) // 2
        best = None
        for half in (sorted(shuffled[:middle]), sorted(shuffled[middle:])):
            alive = heavy.restricted(j, half)
            value = measure(alive)
            if best is None or value > best[2]:
                best = (half, alive, value)
        assert best is not None
        if best[2] >= floor:
            return best
        state.record(depth, "split-retry", slot=j, attempt=attempt + 1, value=best[2])
    raise state.fail(f"no half of slot {j} kept mass {floor}", depth, slot=j)


def _check_supports(
    heavy: HeavySetMap, supports: list[list[int]], state: _RunState, depth: int
) -> None:
    for j, support in enumerate(supports, start=1):
        column = heavy.slots[heavy.alive, j - 1]
        if not support:
            continue
        escaped = column[(column != 0) & ~np.isin(column, np.asarray(support))]
        if escaped.size:
            raise state.fail(f"slot {j} escaped its support with {int(escaped[0])}", depth)


def _check_protocol(p: ProtocolSpec) -> None:
    if p.domain is not Domain.COIN:
        raise ParameterError(f"{p.name} is a {p.domain} protocol; biasing needs a coin protocol")
    require_exact(p.total_bits, p.name)


def _attack(
    p: ProtocolSpec, layout: BitLayout, gamma: Fraction, params: AttackParams, seed: int
) -> tuple[_Found, list[dict[str, Any]]]:
    target = p.outcome_table() == 1
    if p.rounds == 1:
        trace = kkl_greedy(BooleanFunction(layout.widths[0], target), 1, gamma)
        b_h = _agents(layout, 0, trace.b_h)
        found = _Found(tuple(sorted(b_h)), frozenset(), b_h, frozenset(), trace.final_prob)
        return found, [{"depth": 1, "phase": "greedy", "steps": [dict(s) for s in trace.steps]}]

    mass = Fraction(int(target.sum()), 1 << p.total_bits)
    if mass < gamma:
        raise NotEnoughMassError(
            f"Pr[{p.name} = 1] = {mass} is below gamma = {gamma}", measured=mass, required=gamma
        )
    state = _RunState(params, np.random.default_rng(seed))
    return _bias(target, layout, mass, 1 - gamma, state), state.events


def bias_protocol(
    p: ProtocolSpec,
    gamma: float | Fraction,
    params: AttackParams,
    seed: int = 0,
) -> AttackReport:
    """Find a coalition that (1 - gamma)-biases ``p`` toward 1.

    Every round must carry one bit per player. One round is the greedy attack; more rounds
    recurse. The reported value is recomputed by the protocol's exact oracle.
    """
    gamma = as_fraction(gamma)
    _check_protocol(p)
    if any(r != 1 for r in p.bits):
        raise ParameterError(f"{p.name} sends several bits per round; use the multi-bit attack")

    found, events = _attack(p, p.layout, gamma, params, seed)
    verified = exact_adversary_value(p, found.coalition, 1)
    report = _report(p, gamma, params, seed, found, verified, events)
    _LOGGER.info("Biased %s with |B|=%d to %s", p.name, len(found.coalition), verified)
    if verified < 1 - gamma:
        raise InvariantViolation(
            f"verified value {verified} below {1 - gamma}", trace=events, report=report
        )
    return report


def bias_protocol_multibit(
    p: ProtocolSpec,
    gamma: float | Fraction,
    params: AttackParams,
    seed: int = 0,
) -> AttackReport:
    """Attack the bit-level view of ``p`` and hand each corrupted bit's player to the coalition.

    Bit agent ``(p - 1) * R + s + 1`` is bit ``s`` of player ``p`` with R the longest message.
    Players own all of their bits, so the player-level value is at least the bit-level one.
    """
    gamma = as_fraction(gamma)
    _check_protocol(p)
    bits = BitLayout.for_bits(p.players, p.bits)
    longest = max(p.bits)
    found, events = _attack(p, bits, gamma, params, seed)

    def owners(agents: frozenset[int]) -> frozenset[int]:
        return frozenset((q - 1) // longest + 1 for q in agents)

    players = _Found(
        tuple(sorted(owners(frozenset(found.coalition)))),
        owners(found.b_r),
        owners(found.b_h),
        owners(found.b_i),
        found.value,
    )
    bit_value = table_adversary_value(p.outcome_table() == 1, bits, found.coalition)
    verified = exact_adversary_value(p, players.coalition, 1)
    report = _report(p, gamma, params, seed, players, verified, events)
    report.bit_coalition = found.coalition
    report.bit_value = bit_value
    _LOGGER.info(
        "Bit-level |B|=%d (%s) maps to %d players (%s)",
        len(found.coalition),
        bit_value,
        len(players.coalition),
        verified,
    )
    if verified < bit_value or verified < 1 - gamma:
        raise InvariantViolation(
            f"player-level value {verified} below bit level {bit_value} or target {1 - gamma}",
            trace=events,
            report=report,
        )
    return report


def _report(
    p: ProtocolSpec,
    gamma: Fraction,
    params: AttackParams,
    seed: int,
    found: _Found,
    verified: Fraction,
    events: list[dict[str, Any]],
) -> AttackReport:
    return AttackReport(
        protocol=p.name,
        players=p.players,
        rounds=p.rounds,
        outcome=1,
        gamma=gamma,
        seed=seed,
        b_r=tuple(sorted(found.b_r)),
        b_h=tuple(sorted(found.b_h)),
        b_i=tuple(sorted(found.b_i)),
        coalition=found.coalition,
        claimed_value=found.value,
        verified_value=verified,
        theorem_bound=theorem_bound(p.players, p.rounds, gamma),
        params=params.as_dict(),
        events=events,
    )


def round_lb_probe(
    protocols: Sequence[ProtocolSpec],
    gamma: float | Fraction,
    params: AttackParams,
    budget_fraction: float | Fraction,
    seed: int = 0,
) -> list[ExperimentRow]:
    """Attack every protocol and report |B| and the verified value, one row each.

    ``within_budget`` says whether |B| <= budget_fraction * players.
    """
    gamma = as_fraction(gamma)
    budget = as_fraction(budget_fraction)
    rows = []
    for p in protocols:
        if all(r == 1 for r in p.bits):
            report = bias_protocol(p, gamma, params, seed)
        else:
            report = bias_protocol_multibit(p, gamma, params, seed)
        rows.append(
            ExperimentRow(
                protocol=p.name,
                players=p.players,
                k=p.rounds,
                coalition=report.coalition,
                outcome="1",
                value=report.verified_value,
                mode="exact",
                seed=seed,
                within_budget=report.size <= budget * p.players,
            )
        )
    return rows
