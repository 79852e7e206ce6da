"""The heavy/random corruption process and the common random set search over a family."""

from __future__ import annotations

import logging
from collections.abc import Iterator, Sequence
from fractions import Fraction

import numpy as np

from ..boolfn import BooleanFunction, Function, bias_value, pivot_counts, prob, restrict_optimal_any
from ..exceptions import InvariantViolation, NotEnoughMassError, ParameterError
from ..models import FamilyMember, FamilyResult, ProcessStep, ProcessTrace, StepCase
from ..utils.parallel import map_ordered
from .params import AttackMode, AttackParams

_LOGGER = logging.getLogger(__name__)


def semi_random_process(
    f: BooleanFunction,
    o: int,
    params: AttackParams,
    rng: np.random.Generator | None = None,
    order: Sequence[int] | None = None,
    check_mass: bool = True,
) -> ProcessTrace:
    """Corrupt heavy coordinates when there are any, random ones otherwise.

    A coordinate is heavy when its influence on the restricted function is at least 2/h.
    Random picks come from ``rng`` or, when ``order`` is given, from the earliest unused
    element of ``order``. Runs at most ``params.r`` steps and stops once
    Pr[f = o] >= 1 - params.gamma or no coordinate is left.
    """
    if order is None and rng is None:
        raise ParameterError("semi_random_process needs an rng or an explicit order")
    if params.mode is AttackMode.FORMULA:
        params.check_lemma(f.arity)
    initial = prob(f, o)
    if check_mass and initial < params.gamma:
        raise NotEnoughMassError(
            f"Pr[f={o}] = {initial} is below gamma = {params.gamma}",
            measured=initial,
            required=params.gamma,
        )

    goal = 1 - params.gamma
    current: Function = f
    labels = list(range(1, f.arity + 1))
    used: set[int] = set()
    pending: Iterator[int] | None = iter(order) if order is not None else None
    p = initial
    running = Fraction(0)
    b_r: list[int] = []
    b_h: list[int] = []
    steps: list[ProcessStep] = []

    for _ in range(params.r):
        if p >= goal or not isinstance(current, BooleanFunction):
            break
        counts = pivot_counts(current)
        denominator = 1 << (current.arity - 1)
        heaviest = int(np.argmax(counts))
        if counts[heaviest] * params.h >= 2 * denominator:
            position, case = heaviest, StepCase.HEAVY
        elif pending is not None:
            coordinate = next((c for c in pending if c not in used), None)
            if coordinate is None:
                break
            position, case = labels.index(coordinate), StepCase.RANDOM
        else:
            assert rng is not None
            position, case = int(rng.integers(len(labels))), StepCase.RANDOM

        x = Fraction(int(counts[position]), denominator)
        current = restrict_optimal_any(current, (position + 1,), o)
        coordinate = labels.pop(position)
        used.add(coordinate)
        gained = prob(current, o)
        if gained != p + x / 2:
            raise InvariantViolation(
                f"restriction gain {gained - p} differs from half the influence {x / 2}",
                trace=[dict(step) for step in steps],
            )
        p = gained
        running += x
        (b_h if case is StepCase.HEAVY else b_r).append(coordinate)
        steps.append(ProcessStep(len(steps) + 1, coordinate, case, x, running, p))

    if len(b_h) > params.h:
        raise InvariantViolation(
            f"heavy set grew to {len(b_h)} > h={params.h}", trace=[dict(s) for s in steps]
        )
    return ProcessTrace(
        outcome=o,
        target=goal,
        initial_prob=initial,
        final_prob=p,
        success=p >= goal,
        b_r=tuple(sorted(b_r)),
        b_h=tuple(sorted(b_h)),
        steps=steps,
    )


def _candidate_order(arity: int, params: AttackParams, rng: np.random.Generator) -> tuple[int, ...]:
    return tuple(int(v) + 1 for v in rng.permutation(arity)[: min(params.r, arity)])


def _run_candidate(
    family: Sequence[tuple[BooleanFunction, int]], params: AttackParams, order: tuple[int, ...]
) -> list[ProcessTrace]:
    memo: dict[tuple[bytes, int], ProcessTrace] = {}
    traces = []
    for f, o in family:
        key = (f.table.tobytes(), o)
        if key not in memo:
            memo[key] = semi_random_process(f, o, params, order=order, check_mass=False)
        traces.append(memo[key])
    return traces


def select_common_set(
    family: Sequence[tuple[BooleanFunction, int]],
    params: AttackParams,
    rng: np.random.Generator,
    candidates: int | None = None,
    weights: Sequence[int] | None = None,
) -> FamilyResult:
    """Common random set search without the per-member mass precondition.

    Candidates are ranked by covered weight, then by a smaller random set; the first
    candidate wins remaining ties.
    """
    if not family:
        raise ParameterError("the family is empty")
    arity = family[0][0].arity
    if any(f.arity != arity for f, _ in family):
        raise ParameterError("every family member must have the same arity")
    weights = list(weights) if weights is not None else [1] * len(family)
    total = sum(weights)
    count = candidates or params.candidates
    orders = [_candidate_order(arity, params, rng) for _ in range(count)]

    def score(order: tuple[int, ...]) -> tuple[Fraction, tuple[int, ...], list[ProcessTrace]]:
        traces = _run_candidate(family, params, order)
        covered = sum(w for w, t in zip(weights, traces, strict=True) if t.success)
        b_r = sorted({c for t in traces if t.success for c in t.consumed})
        return Fraction(covered, total), tuple(b_r), traces

    scored = map_ordered(score, orders)
    best = 0
    for index, (coverage, b_r, _) in enumerate(scored):
        if (coverage, -len(b_r)) > (scored[best][0], -len(scored[best][1])):
            best = index
    coverage, b_r, traces = scored[best]
    _LOGGER.info(
        "Common set: candidate %d of %d covers %s with |B_R|=%d", best, count, coverage, len(b_r)
    )

    members = []
    for index, ((f, o), trace) in enumerate(zip(family, traces, strict=True)):
        if trace.success:
            value = bias_value(f, set(b_r) | set(trace.b_h), o)
            if value < trace.target:
                raise InvariantViolation(
                    f"member {index} re-verified at {value} < {trace.target}",
                    trace=[dict(trace)],
                )
            members.append(FamilyMember(index, o, trace.b_h, value))
        else:
            members.append(FamilyMember(index, o, None, bias_value(f, b_r, o)))
    return FamilyResult(b_r, coverage, best, count, orders[best], members)


def family_common_set(
    family: Sequence[tuple[BooleanFunction, int]],
    params: AttackParams,
    rng: np.random.Generator,
    candidates: int | None = None,
) -> FamilyResult:
    """One random set B_R plus a small heavy set per member that together bias most members.

    Every member must have Pr[f = o_f] >= params.gamma. Each covered member is re-verified
    exactly: B_R together with its heavy set (1 - gamma)-biases it.
    """
    if not family:
        raise ParameterError("the family is empty")
    for index, (f, o) in enumerate(family):
        mass = prob(f, o)
        if mass < params.gamma:
            raise NotEnoughMassError(
                f"family member {index}: Pr[f={o}] = {mass} is below gamma = {params.gamma}",
                measured=mass,
                required=params.gamma,
            )
    return select_common_set(family, params, rng, candidates)
