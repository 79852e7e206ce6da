from __future__ import annotations

import logging
from fractions import Fraction

import numpy as np

from ..boolfn import BooleanFunction, Function, pivot_counts, prob, restrict_optimal_any
from ..exceptions import InvariantViolation, NotEnoughMassError, ParameterError
from ..models import ProcessStep, ProcessTrace, StepCase
from ..stats import as_fraction

_LOGGER = logging.getLogger(__name__)


def kkl_greedy(
    f: BooleanFunction, o: int, gamma: float | Fraction, target: float | Fraction | None = None
) -> ProcessTrace:
    """Corrupt the most influential coordinate until Pr[f = o] >= 1 - gamma (or ``target``).

    Every pick is an influence argmax, so the coalition is reported as ``b_h``.
    """
    gamma = as_fraction(gamma)
    if not 0 < gamma < 1:
        raise ParameterError(f"gamma must lie in (0, 1), got {gamma}")
    mass = prob(f, o)
    if mass < gamma:
        raise NotEnoughMassError(
            f"Pr[f={o}] = {mass} is below gamma = {gamma}", measured=mass, required=gamma
        )
    goal = 1 - gamma if target is None else as_fraction(target)
    return greedy_to(f, o, goal)


def greedy_to(f: BooleanFunction, o: int, goal: Fraction) -> ProcessTrace:
    """Greedy corruption toward ``goal`` with no mass precondition.

    Stops early, unsuccessfully, when the function is constant at ``1 - o``.
    """
    current: Function = f
    labels = list(range(1, f.arity + 1))
    initial = prob(f, o)
    p = initial
    running = Fraction(0)
    steps: list[ProcessStep] = []
    chosen: list[int] = []

    while p < goal and isinstance(current, BooleanFunction):
        counts = pivot_counts(current)
        position = int(np.argmax(counts))
        if counts[position] == 0:
            break
        x = Fraction(int(counts[position]), 1 << (current.arity - 1))
        current = restrict_optimal_any(current, (position + 1,), o)
        coordinate = labels.pop(position)
        gained = prob(current, o)
        if gained != p + x / 2:
            raise InvariantViolation(
                f"restriction gain {gained - p} differs from half the influence {x / 2}",
                trace=[dict(step) for step in steps],
            )
        p = gained
        running += x
        chosen.append(coordinate)
        steps.append(ProcessStep(len(steps) + 1, coordinate, StepCase.GREEDY, x, running, p))

    _LOGGER.debug("Greedy toward %s picked %s, prob %s -> %s", o, chosen, initial, p)
    return ProcessTrace(
        outcome=o,
        target=goal,
        initial_prob=initial,
        final_prob=p,
        success=p >= goal,
        b_h=tuple(sorted(chosen)),
        steps=steps,
    )
