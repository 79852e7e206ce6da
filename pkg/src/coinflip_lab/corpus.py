"""Builtin protocols and the protocol spec document codec.

A spec document looks like::

    {"kind": "builtin", "name": "select-then-vote", "k": 2, "players": 8,
     "bits": [1, 1], "domain": "coin", "params": {}}

``k``, ``bits`` and ``domain`` are optional; when present they must agree with what the
builtin produces.
"""

from __future__ import annotations

import json
import logging
from collections.abc import Callable
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from .boolfn import BooleanFunction, load_function, tribes
from .exceptions import ParameterError, SpecParseError
from .protocol import Domain, ProtocolSpec, Transcript

_LOGGER = logging.getLogger(__name__)

Builder = Callable[[int, int, dict[str, Any]], ProtocolSpec]


@dataclass(frozen=True)
class _Entry:
    builder: Builder
    kind: str
    default_rounds: int
    summary: str


_REGISTRY: dict[str, _Entry] = {}


def register(name: str, kind: str = "builtin", default_rounds: int = 1, summary: str = ""):
    def wrap(builder: Builder) -> Builder:
        _REGISTRY[name] = _Entry(builder, kind, default_rounds, summary)
        return builder

    return wrap


def protocol_names() -> list[str]:
    return sorted(_REGISTRY)


def describe() -> list[tuple[str, str, str]]:
    """(name, kind, summary) for every registered protocol."""
    return [(name, _REGISTRY[name].kind, _REGISTRY[name].summary) for name in protocol_names()]


# --- bit helpers ------------------------------------------------------------------


def _first_bits(value: int, players: int, r: int) -> list[int]:
    return [(value >> (p * r)) & 1 for p in range(players)]


def _strict_majority(ones: int, total: int) -> int:
    # ties go to 0
    return int(2 * ones > total)


def _pack(columns: np.ndarray) -> np.ndarray:
    """Bool matrix (trials, n) to integers, column 0 least significant."""
    return columns.astype(np.int64) @ (np.int64(1) << np.arange(columns.shape[1], dtype=np.int64))


# --- builtins ---------------------------------------------------------------------


def one_round_protocol(
    f: BooleanFunction, name: str | None = None, params: dict[str, Any] | None = None
) -> ProtocolSpec:
    """One round, one bit per player, output f of the broadcast bits."""
    table = f.table

    def batch(rounds: list[np.ndarray]) -> np.ndarray:
        return table[_pack(rounds[0])].astype(np.int64)

    return ProtocolSpec(
        players=f.arity,
        bits=(1,),
        domain=Domain.COIN,
        evaluator=lambda t: int(table[t[0]]),
        name=name or "one-round-fn",
        params=dict(params or {}),
        batch_evaluator=batch,
    )


@register("one-round-fn", summary="wraps a boolean function; params.fn is an id or truth table")
def _one_round_fn(players: int, k: int, params: dict[str, Any]) -> ProtocolSpec:
    if k != 1:
        raise SpecParseError(f"one-round-fn has exactly one round, got k={k}")
    if "fn" not in params:
        raise SpecParseError("one-round-fn needs params.fn")
    f = load_function(str(params["fn"]))
    if players and players != f.arity:
        raise SpecParseError(f"players={players} does not match the function's arity {f.arity}")
    label = str(params["fn"]).splitlines()[0][:48]
    return one_round_protocol(f, name=f"one-round-fn[{label}]", params=params)


@register("parity-all", default_rounds=2, summary="parity of every transcript bit")
def _parity_all(players: int, k: int, params: dict[str, Any]) -> ProtocolSpec:
    r = int(params.get("r", 1))

    def evaluate(t: Transcript) -> int:
        return sum(v.bit_count() for v in t) & 1

    def batch(rounds: list[np.ndarray]) -> np.ndarray:
        return (sum(b.sum(axis=1) for b in rounds) & 1).astype(np.int64)

    return ProtocolSpec(players, (r,) * k, Domain.COIN, evaluate, "parity-all", dict(params), batch)


@register(
    "select-then-vote",
    default_rounds=2,
    summary="round-1 majority picks a half; that half's round-2 majority is the coin",
)
def _select_then_vote(players: int, k: int, params: dict[str, Any]) -> ProtocolSpec:
    if k != 2 or players % 2:
        raise SpecParseError("select-then-vote needs k=2 and an even number of players")
    half = players // 2

    def evaluate(t: Transcript) -> int:
        side = _strict_majority(t[0].bit_count(), players)
        votes = (t[1] >> (side * half)) & ((1 << half) - 1)
        return _strict_majority(votes.bit_count(), half)

    def batch(rounds: list[np.ndarray]) -> np.ndarray:
        side = 2 * rounds[0].sum(axis=1) > players
        low = rounds[1][:, :half].sum(axis=1)
        high = rounds[1][:, half:].sum(axis=1)
        return (2 * np.where(side, high, low) > half).astype(np.int64)

    return ProtocolSpec(players, (1, 1), Domain.COIN, evaluate, "select-then-vote", {}, batch)


@register("last-round-majority", summary="strict majority of the last round's first bits")
def _last_round_majority(players: int, k: int, params: dict[str, Any]) -> ProtocolSpec:
    r = int(params.get("r", 1))

    def evaluate(t: Transcript) -> int:
        return _strict_majority(sum(_first_bits(t[-1], players, r)), players)

    def batch(rounds: list[np.ndarray]) -> np.ndarray:
        return (2 * rounds[-1][:, ::r].sum(axis=1) > players).astype(np.int64)

    return ProtocolSpec(
        players, (r,) * k, Domain.COIN, evaluate, "last-round-majority", dict(params), batch
    )


@register("first-bit", default_rounds=2, summary="player 1's first round-1 bit")
def _first_bit(players: int, k: int, params: dict[str, Any]) -> ProtocolSpec:
    def batch(rounds: list[np.ndarray]) -> np.ndarray:
        return rounds[0][:, 0].astype(np.int64)

    return ProtocolSpec(
        players, (1,) * k, Domain.COIN, lambda t: t[0] & 1, "first-bit", {}, batch
    )


@register(
    "tribes-of-xor",
    default_rounds=2,
    summary="tribes over each player's XOR of its round bits; params.width sets tribe width",
)
def _tribes_of_xor(players: int, k: int, params: dict[str, Any]) -> ProtocolSpec:
    width = int(params.get("width", 2))
    if players % width:
        raise SpecParseError(f"tribes-of-xor: width {width} does not divide {players} players")
    table = tribes(players // width, width).table

    def evaluate(t: Transcript) -> int:
        combined = 0
        for value in t:
            combined ^= value
        return int(table[combined])

    def batch(rounds: list[np.ndarray]) -> np.ndarray:
        combined = np.logical_xor.reduce(np.stack(rounds), axis=0)
        return table[_pack(combined)].astype(np.int64)

    return ProtocolSpec(
        players, (1,) * k, Domain.COIN, evaluate, "tribes-of-xor", {"width": width}, batch
    )


@register("leader-fixed", summary="always elects params.leader (default 1)")
def _leader_fixed(players: int, k: int, params: dict[str, Any]) -> ProtocolSpec:
    leader = int(params.get("leader", 1))
    if not 1 <= leader <= players:
        raise SpecParseError(f"leader {leader} outside [1, {players}]")

    def batch(rounds: list[np.ndarray]) -> np.ndarray:
        return np.full(rounds[0].shape[0], leader, dtype=np.int64)

    return ProtocolSpec(
        players,
        (1,) * k,
        Domain.LEADER,
        lambda t: leader,
        "leader-fixed",
        {"leader": leader},
        batch,
    )


@register("leader-mod", summary="round-1 bits as an integer, mod players, plus 1")
def _leader_mod(players: int, k: int, params: dict[str, Any]) -> ProtocolSpec:
    r = int(params.get("r", 1))

    def batch(rounds: list[np.ndarray]) -> np.ndarray:
        value = np.zeros(rounds[0].shape[0], dtype=np.int64)
        for column in range(rounds[0].shape[1] - 1, -1, -1):
            value = (2 * value + rounds[0][:, column]) % players
        return value + 1

    return ProtocolSpec(
        players,
        (r,) * k,
        Domain.LEADER,
        lambda t: t[0] % players + 1,
        "leader-mod",
        dict(params),
        batch,
    )


@register(
    "lightest-bin-pipeline",
    kind="composed",
    default_rounds=2,
    summary="grouping, lightest-bin rounds and a resilient function (see build)",
)
def _lightest_bin_pipeline(players: int, k: int, params: dict[str, Any]) -> ProtocolSpec:
    from .construct import PipelineConfig, build_pipeline

    cfg = PipelineConfig.from_params(players, k, params)
    return build_pipeline(cfg, players)


def make_protocol(
    name: str, players: int, k: int | None = None, params: dict[str, Any] | None = None
) -> ProtocolSpec:
    try:
        entry = _REGISTRY[name]
    except KeyError:
        raise SpecParseError(
            f"unknown protocol {name!r}; known: {', '.join(protocol_names())}"
        ) from None
    rounds = entry.default_rounds if k is None else k
    if rounds < 1:
        raise SpecParseError(f"k must be at least 1, got {rounds}")
    if players < 1 and name != "one-round-fn":
        raise SpecParseError(f"players must be at least 1, got {players}")
    try:
        return entry.builder(players, rounds, dict(params or {}))
    except ParameterError as exc:
        raise SpecParseError(f"{name}: {exc}") from exc


# --- documents --------------------------------------------------------------------


def load_protocol(document: dict[str, Any]) -> ProtocolSpec:
    """Build a protocol from a parsed spec document."""
    if not isinstance(document, dict):
        raise SpecParseError("a protocol spec must be a JSON object")
    kind = document.get("kind", "builtin")
    if kind not in ("builtin", "composed"):
        raise SpecParseError(f"unknown kind {kind!r}")
    name = document.get("name")
    if not isinstance(name, str):
        raise SpecParseError("protocol spec needs a string 'name'")
    params = document.get("params") or {}
    if not isinstance(params, dict):
        raise SpecParseError("'params' must be an object")
    try:
        players = int(document.get("players", 0))
        k = document.get("k")
        spec = make_protocol(name, players, None if k is None else int(k), params)
    except (TypeError, ValueError) as exc:
        raise SpecParseError(f"malformed protocol spec: {exc}") from exc

    if "bits" in document and list(document["bits"]) != list(spec.bits):
        raise SpecParseError(f"declared bits {document['bits']} but {name} uses {list(spec.bits)}")
    if "domain" in document and document["domain"] != str(spec.domain):
        raise SpecParseError(f"declared domain {document['domain']!r} but {name} is {spec.domain}")
    return spec


def dump_protocol(p: ProtocolSpec) -> dict[str, Any]:
    """Spec document for a registered protocol; derived protocols cannot be written out."""
    name = p.name.split("[")[0]
    entry = _REGISTRY.get(name)
    if entry is None:
        raise SpecParseError(f"{p.name} is not a registered protocol and cannot be serialized")
    return {
        "kind": entry.kind,
        "name": name,
        "k": p.rounds,
        "players": p.players,
        "bits": list(p.bits),
        "domain": str(p.domain),
        "params": {key: value for key, value in p.params.items() if key != "source"},
    }


def parse_protocol(text: str) -> ProtocolSpec:
    """Resolve a CLI protocol argument.

    Accepts a path to a spec document, inline JSON, ``fn:<boolean function id>`` or the
    shorthand ``<name>:<players>[:<k>]``.
    """
    text = text.strip()
    if text.startswith("{"):
        try:
            return load_protocol(json.loads(text))
        except json.JSONDecodeError as exc:
            raise SpecParseError(f"invalid protocol JSON: {exc}") from exc
    if text.startswith("fn:"):
        return make_protocol("one-round-fn", 0, 1, {"fn": text[3:]})
    path = Path(text)
    if path.suffix == ".json" or path.is_file():
        try:
            document = json.loads(path.read_text())
        except OSError as exc:
            raise SpecParseError(f"cannot read {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise SpecParseError(f"{path}: invalid JSON: {exc}") from exc
        _LOGGER.debug("Loaded protocol spec from %s", path)
        return load_protocol(document)

    name, _, rest = text.partition(":")
    fields = rest.split(":") if rest else []
    if not fields or len(fields) > 2:
        raise SpecParseError(f"expected <name>:<players>[:<k>], got {text!r}")
    try:
        numbers = [int(value) for value in fields]
    except ValueError:
        raise SpecParseError(f"{text!r}: players and k must be integers") from None
    return make_protocol(name, numbers[0], numbers[1] if len(numbers) > 1 else None)


def two_round_corpus() -> list[ProtocolSpec]:
    """Small two-round coin protocols used by the attack checks and the probe."""
    return [
        make_protocol("parity-all", 4, 2),
        make_protocol("parity-all", 6, 2),
        make_protocol("select-then-vote", 8, 2),
        make_protocol("last-round-majority", 6, 2),
        make_protocol("tribes-of-xor", 4, 2, {"width": 2}),
        make_protocol("first-bit", 6, 2),
    ]


def one_round_corpus(players: int) -> list[ProtocolSpec]:
    """One-round wrappers around the builtin boolean functions at ``players`` coordinates."""
    ids = [f"parity:{players}", f"or:{players}", f"dictator:{players}:1"]
    if players % 2:
        ids.append(f"majority:{players}")
    if players % 2 == 0:
        ids.append(f"tribes:{players // 2}x2")
    if players == 9 or players == 3:
        ids.append(f"recmaj3:{1 if players == 3 else 2}")
    ids.append(f"random:{players}:0.5:{players}")
    return [make_protocol("one-round-fn", players, 1, {"fn": fid}) for fid in ids]
