"""Event payload types for the append-only item store.

Payloads are small frozen dataclasses with a stable ``type`` tag used by the
newline-delimited log format. They never reference live objects, only item
ids and JSON-safe values, so a decoded payload is always equal to the one
that was written.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping

from ..errors import CorruptLog


@dataclass(frozen=True)
class Created:
    """First event of every item; carries kind, description link and props."""

    kind: str
    described_by: str | None
    props: Mapping[str, Any]
    state: str | None = None

    type = "Created"


@dataclass(frozen=True)
class PropertySet:
    key: str
    value: Any

    type = "PropertySet"


@dataclass(frozen=True)
class VersionAdded:
    """Adds a new immutable version; ``content`` is the full version document."""

    content: Mapping[str, Any]

    type = "VersionAdded"


@dataclass(frozen=True)
class OutcomeAttached:
    outcome: Mapping[str, Any]

    type = "OutcomeAttached"


@dataclass(frozen=True)
class Annotated:
    text: str

    type = "Annotated"


@dataclass(frozen=True)
class PermissionGranted:
    grantee: str

    type = "PermissionGranted"


@dataclass(frozen=True)
class StateTransition:
    """Compare-and-set lifecycle change; rejected when the current state
    differs from ``from_state``."""

    from_state: str | None
    to_state: str

    type = "StateTransition"


Payload = (
    Created
    | PropertySet
    | VersionAdded
    | OutcomeAttached
    | Annotated
    | PermissionGranted
    | StateTransition
)

_PAYLOAD_TYPES: dict[str, type] = {
    cls.type: cls
    for cls in (
        Created,
        PropertySet,
        VersionAdded,
        OutcomeAttached,
        Annotated,
        PermissionGranted,
        StateTransition,
    )
}


def payload_to_dict(payload: Payload) -> dict[str, Any]:
    if isinstance(payload, Created):
        return {
            "type": payload.type,
            "kind": payload.kind,
            "described_by": payload.described_by,
            "props": dict(payload.props),
            "state": payload.state,
        }
    if isinstance(payload, PropertySet):
        return {"type": payload.type, "key": payload.key, "value": payload.value}
    if isinstance(payload, VersionAdded):
        return {"type": payload.type, "content": dict(payload.content)}
    if isinstance(payload, OutcomeAttached):
        return {"type": payload.type, "outcome": dict(payload.outcome)}
    if isinstance(payload, Annotated):
        return {"type": payload.type, "text": payload.text}
    if isinstance(payload, PermissionGranted):
        return {"type": payload.type, "grantee": payload.grantee}
    if isinstance(payload, StateTransition):
        return {
            "type": payload.type,
            "from_state": payload.from_state,
            "to_state": payload.to_state,
        }
    raise TypeError(f"unsupported payload: {payload!r}")


def payload_from_dict(data: Mapping[str, Any]) -> Payload:
    try:
        tag = data["type"]
    except (KeyError, TypeError):
        raise CorruptLog("payload record has no type tag")
    cls = _PAYLOAD_TYPES.get(tag)
    if cls is None:
        raise CorruptLog(f"unknown payload type {tag!r}")
    fields = {k: v for k, v in data.items() if k != "type"}
    try:
        return cls(**fields)
    except TypeError as exc:
        raise CorruptLog(f"undecodable {tag} payload: {exc}")


@dataclass(frozen=True)
class Event:
    """One immutable entry of the global log.

    ``seq`` is the store-wide total order; ``at`` is the UTC wall clock at
    append time and is informational only (ordering authority is seq).
    """

    seq: int
    item: str
    actor: str
    at: str
    reason: str
    payload: Payload = field(compare=True)
