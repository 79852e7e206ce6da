"""JSON serialization helpers for reports."""

import enum
import json
from fractions import Fraction
from typing import Any

import numpy as np

from ..models.base import ReportModel


def _default(obj: Any) -> Any:
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, np.integer | np.bool_):
        return obj.item()
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, set | frozenset):
        return sorted(obj)
    if isinstance(obj, ReportModel):
        return dict(obj)
    raise TypeError(f"Object of type {type(obj).__name__} is not JSON serializable")


def to_json(data: Any, indent: int | None = None) -> str:
    """Serialize *data* to a JSON string.

    Fractions become ``"p/q"`` strings so exact values survive the round trip; enums, numpy
    scalars and arrays, sets and ``ReportModel`` instances are handled by a custom *default*.
    Keys are sorted so identical runs produce identical bytes.
    """
    return json.dumps(data, default=_default, ensure_ascii=False, indent=indent, sort_keys=True)
