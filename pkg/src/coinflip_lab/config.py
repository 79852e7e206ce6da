"""Configuration management for coinflip-lab."""

import contextlib
import dataclasses
import json
import logging
import os
from collections.abc import Iterator
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .const import EXACT_BUDGET, MAX_ARITY, MAX_COALITIONS, THREADS_ENV_VAR

_LOGGER = logging.getLogger(__name__)

CONFIG_DIR = Path.home() / ".config" / "coinflip-lab"
CONFIG_FILE = CONFIG_DIR / "config.json"


@dataclass(frozen=True)
class Settings:
    """Capacity limits and parallelism shared by every module."""

    max_arity: int = MAX_ARITY
    exact_budget: int = EXACT_BUDGET
    max_coalitions: int = MAX_COALITIONS
    threads: int = 1


def load_config() -> dict[str, Any]:
    """Load configuration from file. Missing or unreadable files yield an empty dict."""
    if CONFIG_FILE.exists():
        try:
            with open(CONFIG_FILE) as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError) as exc:
            _LOGGER.warning("Ignoring unreadable config file %s: %s", CONFIG_FILE, exc)
            return {}
        if isinstance(data, dict):
            return data
        _LOGGER.warning("Ignoring config file %s: top level is not an object", CONFIG_FILE)
    return {}


def save_config(config: dict[str, Any]) -> None:
    """Save configuration to file."""
    CONFIG_DIR.mkdir(parents=True, exist_ok=True)
    with open(CONFIG_FILE, "w") as f:
        json.dump(config, f, indent=2, sort_keys=True)


def _settings_from_sources() -> Settings:
    config = load_config()
    known = {f.name for f in dataclasses.fields(Settings)}
    values: dict[str, int] = {}
    for key, value in config.items():
        if key not in known:
            _LOGGER.debug("Unknown config key %r ignored", key)
            continue
        try:
            values[key] = int(value)
        except (TypeError, ValueError):
            _LOGGER.warning("Config key %r must be an integer, got %r", key, value)

    threads = os.getenv(THREADS_ENV_VAR)
    if threads:
        try:
            values["threads"] = max(1, int(threads))
        except ValueError:
            _LOGGER.warning("%s must be an integer, got %r", THREADS_ENV_VAR, threads)

    return Settings(**values)


_override: Settings | None = None


def get_settings() -> Settings:
    """Return the active settings: defaults, then config file, then environment."""
    if _override is not None:
        return _override
    return _settings_from_sources()


@contextlib.contextmanager
def override_settings(**changes: int | None) -> Iterator[Settings]:
    """Temporarily replace individual settings. ``None`` values are ignored."""
    global _override
    previous = _override
    current = previous if previous is not None else _settings_from_sources()
    _override = dataclasses.replace(
        current, **{key: value for key, value in changes.items() if value is not None}
    )
    try:
        yield _override
    finally:
        _override = previous
