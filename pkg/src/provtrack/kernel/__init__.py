"""Append-only, description-driven item kernel."""

from .events import (
    Annotated,
    Created,
    Event,
    OutcomeAttached,
    Payload,
    PermissionGranted,
    PropertySet,
    StateTransition,
    VersionAdded,
)
from .items import ActorRef, ItemKind, ItemState, new_item_id
from .store import ItemStore, Transaction, decode_record, encode_record

__all__ = [
    "ActorRef",
    "Annotated",
    "Created",
    "Event",
    "ItemKind",
    "ItemState",
    "ItemStore",
    "OutcomeAttached",
    "Payload",
    "PermissionGranted",
    "PropertySet",
    "StateTransition",
    "Transaction",
    "VersionAdded",
    "decode_record",
    "encode_record",
    "new_item_id",
]
