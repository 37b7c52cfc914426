"""Item identity and derived state for the description-driven store."""

from __future__ import annotations

import uuid
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Mapping

from .events import (
    Annotated,
    Created,
    Event,
    OutcomeAttached,
    PermissionGranted,
    PropertySet,
    StateTransition,
    VersionAdded,
)


def new_item_id() -> str:
    """Random 128-bit identifier in canonical hex-with-dashes text form."""
    return str(uuid.uuid4())


class ItemKind(str, Enum):
    DESCRIPTION = "Description"
    INSTANCE = "Instance"


@dataclass(frozen=True)
class ActorRef:
    """Minimal actor record. Identity is the id; the display name is
    presentation-only and never part of persisted state."""

    id: str
    display_name: str = ""

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("actor id must be non-empty")


@dataclass(frozen=True)
class ItemState:
    """Snapshot of one item, produced by folding its events in seq order.

    Immutable value: safe to hand across threads and to compare deeply.
    ``versions[0]`` is the creation-time property document, so
    ``current_version == len(versions)`` counts creation as version 1.
    """

    id: str
    kind: str
    described_by: str | None
    created_at: str
    created_by: str
    properties: Mapping[str, Any]
    versions: tuple[Mapping[str, Any], ...]
    lifecycle: str | None
    outcomes: tuple[Mapping[str, Any], ...] = ()
    annotations: tuple[tuple[str, str, str], ...] = ()
    shared_with: frozenset[str] = field(default_factory=frozenset)
    last_seq: int = 0

    @property
    def current_version(self) -> int:
        return len(self.versions)

    @classmethod
    def from_created(cls, event: Event) -> "ItemState":
        payload = event.payload
        assert isinstance(payload, Created)
        props = dict(payload.props)
        return cls(
            id=event.item,
            kind=payload.kind,
            described_by=payload.described_by,
            created_at=event.at,
            created_by=event.actor,
            properties=props,
            versions=(dict(props),),
            lifecycle=payload.state,
            last_seq=event.seq,
        )

    def apply(self, event: Event) -> "ItemState":
        """Fold one event into a new snapshot; the receiver is unchanged."""
        payload = event.payload
        if isinstance(payload, PropertySet):
            props = dict(self.properties)
            props[payload.key] = payload.value
            return replace(self, properties=props, last_seq=event.seq)
        if isinstance(payload, VersionAdded):
            return replace(
                self,
                versions=self.versions + (dict(payload.content),),
                last_seq=event.seq,
            )
        if isinstance(payload, OutcomeAttached):
            return replace(
                self,
                outcomes=self.outcomes + (dict(payload.outcome),),
                last_seq=event.seq,
            )
        if isinstance(payload, Annotated):
            note = (event.actor, event.at, payload.text)
            return replace(
                self, annotations=self.annotations + (note,), last_seq=event.seq
            )
        if isinstance(payload, PermissionGranted):
            return replace(
                self,
                shared_with=self.shared_with | {payload.grantee},
                last_seq=event.seq,
            )
        if isinstance(payload, StateTransition):
            return replace(self, lifecycle=payload.to_state, last_seq=event.seq)
        raise ValueError(f"cannot fold payload {payload!r} into existing state")

    def snapshot(self) -> dict[str, Any]:
        """Plain JSON-safe dict used for canonical digests and deep equality."""
        return {
            "id": self.id,
            "kind": self.kind,
            "described_by": self.described_by,
            "created_at": self.created_at,
            "created_by": self.created_by,
            "current_version": self.current_version,
            "lifecycle": self.lifecycle,
            "properties": dict(self.properties),
            "versions": [dict(v) for v in self.versions],
            "outcomes": [dict(o) for o in self.outcomes],
            "annotations": [list(a) for a in self.annotations],
            "shared_with": sorted(self.shared_with),
            "last_seq": self.last_seq,
        }
