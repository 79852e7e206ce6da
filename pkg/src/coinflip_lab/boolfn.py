"""Exact boolean functions over {0,1}^arity stored as truth tables.

Coordinates are 1-based; bit 0 of a table index is coordinate 1. Every probability and
influence is an exact ``Fraction`` with a power-of-two denominator.
"""

from __future__ import annotations

import logging
import math
import re
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .config import get_settings
from .exceptions import ArityError, CapacityError, CoordinateError, ParameterError, SpecParseError
from .stats import as_fraction

_LOGGER = logging.getLogger(__name__)

#: Strictly increasing 1-based coordinate indices.
CoordSet = tuple[int, ...]

TABLE_HEADER = "boolfn v1 arity={arity}"
_HEADER_RE = re.compile(r"^boolfn v1 arity=(\d+)$")
_HEX_BODY_RE = re.compile(r"[0-9a-f]*")
_HEX_DIGITS = np.array(list("0123456789abcdef"))


def check_arity(arity: int) -> None:
    """Fail fast before allocating a table that exceeds the configured cap."""
    if arity < 1:
        raise ArityError(f"arity must be at least 1, got {arity}")
    limit = get_settings().max_arity
    if arity > limit:
        raise CapacityError(
            f"arity {arity} exceeds MAX_ARITY={limit}", bound="MAX_ARITY", limit=limit
        )


def coord_set(members: Iterable[int], arity: int) -> CoordSet:
    """Validate and normalize a coordinate set against ``arity``."""
    values = [int(m) for m in members]
    result = tuple(sorted(set(values)))
    if len(result) != len(values):
        raise CoordinateError(f"duplicate coordinates in {values}")
    if result and (result[0] < 1 or result[-1] > arity):
        raise CoordinateError(f"coordinates {list(result)} outside [1, {arity}]")
    return result


@dataclass(frozen=True, eq=False)
class BooleanFunction:
    """A function {0,1}^arity -> {0,1}; ``table[z]`` is f(z)."""

    arity: int
    table: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        check_arity(self.arity)
        table = np.asarray(self.table, dtype=bool)
        if table.shape != (1 << self.arity,):
            raise ArityError(
                f"table of shape {table.shape} does not match arity {self.arity}"
            )
        if table.flags.writeable:
            table = table.copy()
            table.flags.writeable = False
        object.__setattr__(self, "table", table)

    def __call__(self, index: int) -> int:
        return int(self.table[index])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BooleanFunction):
            return NotImplemented
        return self.arity == other.arity and bool(np.array_equal(self.table, other.table))

    def __hash__(self) -> int:
        return hash((self.arity, self.table.tobytes()))

    def __invert__(self) -> BooleanFunction:
        return negate(self)

    def ones(self) -> int:
        return int(np.count_nonzero(self.table))


@dataclass(frozen=True)
class ConstantFunction:
    """The 0-ary function left after every coordinate has been fixed."""

    value: int

    @property
    def arity(self) -> int:
        return 0


Function = BooleanFunction | ConstantFunction


def _check_bit(o: int) -> int:
    if o not in (0, 1):
        raise ParameterError(f"outcome must be 0 or 1, got {o}")
    return int(o)


def prob(f: Function, o: int) -> Fraction:
    """Exact Pr_z[f(z) = o]."""
    o = _check_bit(o)
    if isinstance(f, ConstantFunction):
        return Fraction(int(f.value == o))
    hits = f.ones() if o else (1 << f.arity) - f.ones()
    return Fraction(hits, 1 << f.arity)


def pivot_counts(f: BooleanFunction) -> np.ndarray:
    """Per coordinate, the number of index pairs {z, z^i} on which f differs."""
    counts = np.empty(f.arity, dtype=np.int64)
    for i in range(1, f.arity + 1):
        view = f.table.reshape(-1, 2, 1 << (i - 1))
        counts[i - 1] = np.count_nonzero(view[:, 0, :] != view[:, 1, :])
    return counts


def influence(f: BooleanFunction, i: int) -> Fraction:
    """Exact I_i(f) = Pr_z[f(z) != f(z with bit i flipped)]."""
    if not 1 <= i <= f.arity:
        raise CoordinateError(f"coordinate {i} outside [1, {f.arity}]")
    view = f.table.reshape(-1, 2, 1 << (i - 1))
    pivots = int(np.count_nonzero(view[:, 0, :] != view[:, 1, :]))
    return Fraction(pivots, 1 << (f.arity - 1))


def influences(f: Function) -> list[Fraction]:
    """All influences, coordinate 1 first."""
    if isinstance(f, ConstantFunction):
        return []
    denominator = 1 << (f.arity - 1)
    return [Fraction(int(c), denominator) for c in pivot_counts(f)]


def total_influence(f: Function) -> Fraction:
    return sum(influences(f), Fraction(0))


def negate(f: BooleanFunction) -> BooleanFunction:
    return BooleanFunction(f.arity, ~f.table)


def evaluate(f: BooleanFunction, bits: Sequence[int]) -> int:
    """Evaluate f on explicit input bits, ``bits[0]`` being coordinate 1."""
    if len(bits) != f.arity:
        raise ArityError(f"expected {f.arity} input bits, got {len(bits)}")
    index = 0
    for position, bit in enumerate(bits):
        index |= (int(bit) & 1) << position
    return f(index)


def restrict_fix(f: BooleanFunction, i: int, b: int) -> Function:
    """Fix coordinate ``i`` to ``b``; the remaining coordinates keep their order."""
    b = _check_bit(b)
    if not 1 <= i <= f.arity:
        raise CoordinateError(f"coordinate {i} outside [1, {f.arity}]")
    view = f.table.reshape(-1, 2, 1 << (i - 1))
    if f.arity == 1:
        return ConstantFunction(int(view[0, b, 0]))
    return BooleanFunction(f.arity - 1, view[:, b, :].reshape(-1))


def _optimal_table(f: BooleanFunction, coords: CoordSet, o: int) -> np.ndarray:
    cube = f.table.reshape((2,) * f.arity)
    # Axis 0 of the cube is the most significant bit, i.e. coordinate ``arity``.
    axes = tuple(f.arity - i for i in coords)
    reachable = (cube == bool(o)).any(axis=axes)
    result = reachable if o else ~reachable
    return result.reshape(-1)


def restrict_optimal(f: BooleanFunction, S: Iterable[int], o: int) -> BooleanFunction:
    """Hand ``S`` to the pointwise-optimal adversary pushing towards ``o``.

    The result g(y) is ``o`` iff some assignment to ``S`` gives f(x, y) = o.
    """
    o = _check_bit(o)
    coords = coord_set(S, f.arity)
    if len(coords) == f.arity:
        raise CoordinateError("the adversary would control every coordinate; use bias_value")
    if not coords:
        return f
    return BooleanFunction(f.arity - len(coords), _optimal_table(f, coords, o))


def restrict_optimal_any(f: Function, S: Iterable[int], o: int) -> Function:
    """Like ``restrict_optimal`` but full control collapses to a ConstantFunction."""
    o = _check_bit(o)
    if isinstance(f, ConstantFunction):
        coord_set(S, 0)
        return f
    coords = coord_set(S, f.arity)
    if len(coords) < f.arity:
        return restrict_optimal(f, coords, o)
    attainable = bool(np.any(f.table == bool(o)))
    return ConstantFunction(o if attainable else 1 - o)


def bias_value(f: Function, S: Iterable[int], o: int) -> Fraction:
    """Pr[f|_S = o] under the optimal adversary, allowing S to be every coordinate."""
    return prob(restrict_optimal_any(f, S, o), o)


def can_bias(f: BooleanFunction, S: Iterable[int], o: int, eps: float | Fraction) -> bool:
    """True iff ``S`` can (1 - eps)-bias f towards ``o``."""
    return prob(restrict_optimal(f, S, o), o) >= 1 - as_fraction(eps)


class InfluenceSumCheck(NamedTuple):
    """Outcome of checking the heavy-or-average influence inequality on one function."""

    applicable: bool
    holds: bool
    total: Fraction


def influence_sum_check(
    f: BooleanFunction, gamma: float | Fraction, theta: float | Fraction
) -> InfluenceSumCheck:
    """Check sum_i I_i(f) >= gamma * log2(1/theta) / 20 whenever the premise applies.

    The premise is gamma <= Pr[f=1] <= 1 - gamma and every influence at most theta.
    Logs are base 2.
    """
    gamma = as_fraction(gamma)
    theta = as_fraction(theta)
    if not 0 < gamma < Fraction(1, 2):
        raise ParameterError(f"gamma must lie in (0, 1/2), got {gamma}")
    if not 0 < theta < Fraction(1, 8):
        raise ParameterError(f"theta must lie in (0, 1/8), got {theta}")

    values = influences(f)
    total = sum(values, Fraction(0))
    p = prob(f, 1)
    applicable = gamma <= p <= 1 - gamma and max(values) <= theta
    if not applicable:
        return InfluenceSumCheck(False, True, total)
    required = float(gamma) * math.log2(1 / float(theta)) / 20
    return InfluenceSumCheck(True, float(total) >= required, total)


# --- builtin generators -----------------------------------------------------------


def _indices(arity: int) -> np.ndarray:
    check_arity(arity)
    return np.arange(1 << arity, dtype=np.int64)


def parity(arity: int) -> BooleanFunction:
    return BooleanFunction(arity, np.bitwise_count(_indices(arity)) & 1)


def majority(arity: int) -> BooleanFunction:
    """Strict majority; ``arity`` must be odd so there are no ties."""
    if arity % 2 == 0:
        raise ParameterError(f"majority needs an odd arity, got {arity}")
    return BooleanFunction(arity, 2 * np.bitwise_count(_indices(arity)) > arity)


def dictator(arity: int, i: int) -> BooleanFunction:
    if not 1 <= i <= arity:
        raise CoordinateError(f"dictator coordinate {i} outside [1, {arity}]")
    return BooleanFunction(arity, (_indices(arity) >> (i - 1)) & 1)


def or_function(arity: int) -> BooleanFunction:
    return BooleanFunction(arity, _indices(arity) != 0)


def and_function(arity: int) -> BooleanFunction:
    return BooleanFunction(arity, _indices(arity) == (1 << arity) - 1)


def constant(arity: int, bit: int) -> BooleanFunction:
    bit = _check_bit(bit)
    return BooleanFunction(arity, np.full(1 << arity, bool(bit)))


def tribes(tribe_count: int, width: int) -> BooleanFunction:
    """OR of ``tribe_count`` ANDs over consecutive blocks of ``width`` coordinates."""
    if tribe_count < 1 or width < 1:
        raise ParameterError(f"tribes needs positive sizes, got {tribe_count}x{width}")
    idx = _indices(tribe_count * width)
    result = np.zeros(idx.shape, dtype=bool)
    block = (1 << width) - 1
    for tribe in range(tribe_count):
        mask = block << (tribe * width)
        result |= (idx & mask) == mask
    return BooleanFunction(tribe_count * width, result)


def recursive_majority3(depth: int) -> BooleanFunction:
    """Majority-of-3 tree of the given depth over 3**depth coordinates (triples are consecutive)."""
    if depth < 0:
        raise ParameterError(f"depth must be non-negative, got {depth}")
    arity = 3**depth
    idx = _indices(arity)
    level = ((idx[:, None] >> np.arange(arity)) & 1).astype(np.int8)
    while level.shape[1] > 1:
        level = (level.reshape(idx.size, -1, 3).sum(axis=2) >= 2).astype(np.int8)
    return BooleanFunction(arity, level[:, 0])


def random_function(arity: int, density: float, seed: int) -> BooleanFunction:
    """Each table entry is 1 independently with probability ``density``.

    Uses ``numpy.random.default_rng(seed)``, so corpora are reproducible across runs.
    """
    if not 0 <= density <= 1:
        raise ParameterError(f"density must lie in [0, 1], got {density}")
    check_arity(arity)
    size = 1 << arity
    return BooleanFunction(arity, np.random.default_rng(seed).random(size) < density)


_BUILTINS: dict[str, Callable[..., BooleanFunction]] = {
    "parity": parity,
    "majority": majority,
    "dictator": dictator,
    "or": or_function,
    "and": and_function,
    "const": constant,
    "tribes": tribes,
    "recmaj3": recursive_majority3,
    "random": random_function,
}

_BUILTIN_ARGS: dict[str, tuple[type, ...]] = {
    "parity": (int,),
    "majority": (int,),
    "dictator": (int, int),
    "or": (int,),
    "and": (int,),
    "const": (int, int),
    "tribes": (int, int),
    "recmaj3": (int,),
    "random": (int, float, int),
}


def builtin_names() -> list[str]:
    return sorted(_BUILTINS)


def make_builtin(name: str, *params: int | float) -> BooleanFunction:
    """Build a named generator, e.g. ``make_builtin("tribes", 4, 3)``."""
    try:
        generator = _BUILTINS[name]
    except KeyError:
        raise SpecParseError(
            f"unknown boolean function {name!r}; known: {', '.join(builtin_names())}"
        ) from None
    expected = _BUILTIN_ARGS[name]
    if len(params) != len(expected):
        raise SpecParseError(f"{name} takes {len(expected)} parameters, got {len(params)}")
    return generator(*params)


def parse_builtin(spec: str) -> BooleanFunction:
    """Parse ids like ``parity:5``, ``tribes:4x3`` or ``random:12:0.5:42``."""
    name, _, rest = spec.strip().partition(":")
    raw = rest.replace("x", ":").split(":") if rest else []
    types = _BUILTIN_ARGS.get(name)
    if types is None:
        raise SpecParseError(f"unknown boolean function {name!r} in {spec!r}")
    if len(raw) != len(types):
        raise SpecParseError(f"{spec!r}: {name} takes {len(types)} parameters")
    try:
        params = [kind(value) for kind, value in zip(types, raw, strict=True)]
    except ValueError:
        raise SpecParseError(f"{spec!r}: malformed parameters") from None
    return make_builtin(name, *params)


# --- serialization ----------------------------------------------------------------


def dumps(f: BooleanFunction) -> str:
    """Header line, then the table as hex with the least-significant nibble first."""
    packed = np.packbits(f.table.astype(np.uint8), bitorder="little")
    nibbles = np.empty(packed.size * 2, dtype=np.uint8)
    nibbles[0::2] = packed & 0x0F
    nibbles[1::2] = packed >> 4
    count = -(-(1 << f.arity) // 4)
    return TABLE_HEADER.format(arity=f.arity) + "\n" + "".join(_HEX_DIGITS[nibbles[:count]]) + "\n"


def loads(text: str) -> BooleanFunction:
    lines = text.strip().splitlines()
    match = _HEADER_RE.match(lines[0].strip()) if lines else None
    if not match:
        raise SpecParseError("missing 'boolfn v1 arity=<n>' header")
    arity = int(match.group(1))
    check_arity(arity)
    body = "".join(line.strip() for line in lines[1:]).lower()
    expected = -(-(1 << arity) // 4)
    if len(body) != expected:
        raise SpecParseError(f"expected {expected} hex digits for arity {arity}, got {len(body)}")
    if not _HEX_BODY_RE.fullmatch(body):
        raise SpecParseError("table body contains non-hex characters")
    codes = np.frombuffer(body.encode("ascii"), dtype=np.uint8).astype(np.int16)
    values = np.where(codes >= ord("a"), codes - ord("a") + 10, codes - ord("0"))
    bits = (values[:, None] >> np.arange(4)) & 1
    return BooleanFunction(arity, bits.reshape(-1)[: 1 << arity])


def load_function(text: str) -> BooleanFunction:
    """Accept either a builtin id or serialized truth-table text."""
    if text.lstrip().startswith("boolfn "):
        return loads(text)
    return parse_builtin(text)
