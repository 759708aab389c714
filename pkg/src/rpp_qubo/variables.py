"""Typed identities of binary variables.

Every registered index of a :class:`~rpp_qubo.qubo.QuboModel` maps to one of
these keys (or to a plain int/str for generic models).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Hashable


@dataclass(frozen=True, order=True)
class NodeVar:
    """Vehicle ``vehicle`` is at ``location`` at step ``step`` (1-based)."""

    vehicle: str
    location: str
    step: int


@dataclass(frozen=True, order=True)
class SlackVar:
    """Unary slack unit ``unit`` for the capacity term of (vehicle, step)."""

    vehicle: str
    step: int
    unit: int


@dataclass(frozen=True, order=True)
class TspVar:
    location: str
    step: int


@dataclass(frozen=True, order=True)
class VrpVar:
    vehicle: str
    location: str
    step: int


@dataclass(frozen=True, order=True)
class EdgeVar:
    """Vehicle ``vehicle`` travels ``source`` -> ``target`` at step ``step``."""

    vehicle: str
    source: str
    target: str
    step: int


_KINDS = {
    "node": NodeVar,
    "slack": SlackVar,
    "tsp": TspVar,
    "vrp": VrpVar,
    "edge": EdgeVar,
}
_NAMES = {cls: name for name, cls in _KINDS.items()}


def describe(key: Hashable) -> dict:
    """JSON-friendly description of a variable key."""
    cls = type(key)
    if cls in _NAMES:
        return {"kind": _NAMES[cls], **asdict(key)}
    if isinstance(key, bool):
        raise TypeError("bool is not a valid variable key")
    if isinstance(key, int):
        return {"kind": "index", "index": key}
    if isinstance(key, str):
        return {"kind": "label", "label": key}
    raise TypeError(f"cannot describe variable key {key!r}")


def from_description(desc: dict) -> Hashable:
    fields = dict(desc)
    kind = fields.pop("kind")
    if kind == "index":
        return int(fields["index"])
    if kind == "label":
        return str(fields["label"])
    return _KINDS[kind](**fields)
