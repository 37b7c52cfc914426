"""Append-only, event-sourced item store.

Every domain object is an Item; every modification is an immutable Event
appended to a single newline-delimited log file. Nothing is ever rewritten
or deleted: historical versions stay resolvable forever and the whole store
can be rebuilt by replaying the log.

Log record layout (one JSON object per line, keys sorted)::

    {"at": "<RFC3339>", "crc": "<hex>", "item": "<id>", "payload": {...},
     "reason": "...", "seq": N, "actor": "<id>"}

The ``crc`` covers the canonical serialization of the record without the
``crc`` key and is verified on replay.

Concurrency: appends are funneled through one lock that assigns seq numbers
and flushes; reads go against immutable :class:`ItemState` snapshots and
need no lock.
"""

from __future__ import annotations

import json
import threading
import zlib
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Iterable

from ..errors import (
    CorruptLog,
    IllegalTransition,
    InvalidKind,
    SeqBeforeCreation,
    UnknownDescription,
    UnknownItem,
)
from .events import Created, Event, Payload, StateTransition, payload_from_dict, payload_to_dict
from .items import ActorRef, ItemKind, ItemState, new_item_id

Listener = Callable[[Event], None]


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat()


def _canonical(record: dict[str, Any]) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def encode_record(event: Event) -> str:
    record = {
        "seq": event.seq,
        "item": event.item,
        "actor": event.actor,
        "at": event.at,
        "reason": event.reason,
        "payload": payload_to_dict(event.payload),
    }
    record["crc"] = format(zlib.crc32(_canonical(record).encode("utf-8")), "08x")
    return _canonical(record) + "\n"


def decode_record(line: str) -> Event:
    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        raise CorruptLog(f"undecodable log record: {exc}")
    if not isinstance(record, dict):
        raise CorruptLog("log record is not an object")
    crc = record.pop("crc", None)
    if crc is None:
        raise CorruptLog("log record has no checksum")
    expected = format(zlib.crc32(_canonical(record).encode("utf-8")), "08x")
    if crc != expected:
        raise CorruptLog(f"checksum mismatch: {crc} != {expected}")
    try:
        return Event(
            seq=record["seq"],
            item=record["item"],
            actor=record["actor"],
            at=record["at"],
            reason=record["reason"],
            payload=payload_from_dict(record["payload"]),
        )
    except KeyError as exc:
        raise CorruptLog(f"log record missing field {exc}")


class Transaction:
    """Buffers a group of changes appended contiguously on commit.

    Events buffered here are validated against the store plus the pending
    overlay, get their seq and timestamp at commit time, and either all land
    in the log or none do.
    """

    def __init__(self, store: "ItemStore") -> None:
        self._store = store
        self._pending: list[tuple[str, str, str, Payload]] = []
        self._pending_states: dict[str, tuple[str, str | None]] = {}  # id -> (kind, lifecycle)
        self._committed = False

    def create_item(
        self,
        kind: ItemKind | str,
        described_by: str | None,
        props: dict[str, Any],
        actor: ActorRef,
        reason: str,
        state: str | None = None,
    ) -> str:
        kind_value = kind.value if isinstance(kind, ItemKind) else str(kind)
        if kind_value not in (ItemKind.DESCRIPTION.value, ItemKind.INSTANCE.value):
            raise InvalidKind(f"unknown item kind {kind_value!r}")
        if kind_value == ItemKind.INSTANCE.value:
            if described_by is None:
                raise InvalidKind("an Instance requires described_by")
            desc_kind = self._kind_of(described_by)
            if desc_kind is None:
                raise UnknownDescription(f"no such description item: {described_by}")
            if desc_kind != ItemKind.DESCRIPTION.value:
                raise InvalidKind(f"described_by {described_by} is not a Description")
        elif described_by is not None:
            raise InvalidKind("a Description cannot have described_by")
        item_id = new_item_id()
        payload = Created(kind=kind_value, described_by=described_by, props=dict(props), state=state)
        self._pending.append((item_id, actor.id, reason, payload))
        self._pending_states[item_id] = (kind_value, state)
        return item_id

    def record_event(self, item: str, payload: Payload, actor: ActorRef, reason: str) -> None:
        if isinstance(payload, Created):
            raise IllegalTransition("items are created once; use create_item")
        lifecycle = self._lifecycle_of(item)
        if isinstance(payload, StateTransition) and lifecycle != payload.from_state:
            raise IllegalTransition(
                f"cannot transition {item} from {payload.from_state!r}: current state is {lifecycle!r}"
            )
        self._pending.append((item, actor.id, reason, payload))
        if isinstance(payload, StateTransition):
            kind, _ = self._pending_states.get(item, (self._kind_of(item), None))
            self._pending_states[item] = (kind, payload.to_state)

    def _kind_of(self, item: str) -> str | None:
        if item in self._pending_states:
            return self._pending_states[item][0]
        state = self._store._states.get(item)
        return state.kind if state is not None else None

    def _lifecycle_of(self, item: str) -> str | None:
        if item in self._pending_states:
            return self._pending_states[item][1]
        state = self._store._states.get(item)
        if state is None:
            raise UnknownItem(f"no such item: {item}")
        return state.lifecycle

    def commit(self) -> list[int]:
        if self._committed:
            raise RuntimeError("transaction already committed")
        self._committed = True
        return self._store._append(self._pending)


class ItemStore:
    """The append-only object store.

    ``log_path=None`` keeps the store purely in memory (useful for throwaway
    fixtures); with a path, every append is written and flushed before the
    call returns and an existing file is replayed on open.
    """

    def __init__(
        self,
        log_path: str | Path | None,
        *,
        clock: Callable[[], str] | None = None,
    ) -> None:
        self._lock = threading.Lock()
        self._clock = clock or _utcnow
        self._events: list[Event] = []
        self._by_item: dict[str, list[Event]] = {}
        self._states: dict[str, ItemState] = {}
        self._listeners: list[Listener] = []
        self._log_path = Path(log_path) if log_path is not None else None
        self._fh = None
        if self._log_path is not None:
            if self._log_path.exists():
                self._load(self._log_path)
            else:
                self._log_path.parent.mkdir(parents=True, exist_ok=True)
            self._fh = open(self._log_path, "a", encoding="utf-8")

    # -- lifecycle ----------------------------------------------------------

    @classmethod
    def replay(cls, log_path: str | Path, **kwargs: Any) -> "ItemStore":
        """Rebuild a store from an existing log written by this module."""
        path = Path(log_path)
        if not path.exists():
            raise CorruptLog(f"no log at {path}")
        return cls(path, **kwargs)

    def _load(self, path: Path) -> None:
        expected_seq = 1
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    raise CorruptLog("blank line in log")
                event = decode_record(line)
                if event.seq != expected_seq:
                    raise CorruptLog(f"seq gap: expected {expected_seq}, found {event.seq}")
                expected_seq += 1
                self._apply(event)

    def close(self) -> None:
        if self._fh is not None:
            self._fh.flush()
            self._fh.close()
            self._fh = None

    def __enter__(self) -> "ItemStore":
        return self

    def __exit__(self, *exc: Any) -> None:
        self.close()

    # -- write path ----------------------------------------------------------

    def transaction(self) -> Transaction:
        return Transaction(self)

    def create_item(
        self,
        kind: ItemKind | str,
        described_by: str | None,
        props: dict[str, Any],
        actor: ActorRef,
        reason: str,
        state: str | None = None,
    ) -> str:
        txn = self.transaction()
        item_id = txn.create_item(kind, described_by, props, actor, reason, state=state)
        txn.commit()
        return item_id

    def record_event(self, item: str, payload: Payload, actor: ActorRef, reason: str) -> int:
        txn = self.transaction()
        txn.record_event(item, payload, actor, reason)
        return txn.commit()[0]

    def _append(self, entries: list[tuple[str, str, str, Payload]]) -> list[int]:
        if not entries:
            return []
        with self._lock:
            seqs: list[int] = []
            lines: list[str] = []
            events: list[Event] = []
            next_seq = len(self._events) + 1
            for item, actor_id, reason, payload in entries:
                event = Event(
                    seq=next_seq,
                    item=item,
                    actor=actor_id,
                    at=self._clock(),
                    reason=reason,
                    payload=payload,
                )
                lines.append(encode_record(event))
                events.append(event)
                seqs.append(next_seq)
                next_seq += 1
            if self._fh is not None:
                self._fh.write("".join(lines))
                self._fh.flush()
            for event in events:
                self._apply(event)
            return seqs

    def _apply(self, event: Event) -> None:
        if isinstance(event.payload, Created):
            state = ItemState.from_created(event)
        else:
            current = self._states.get(event.item)
            if current is None:
                raise CorruptLog(f"event {event.seq} references unknown item {event.item}")
            state = current.apply(event)
        self._events.append(event)
        self._by_item.setdefault(event.item, []).append(event)
        self._states[event.item] = state
        for listener in self._listeners:
            listener(event)

    # -- read path -----------------------------------------------------------

    def exists(self, item: str) -> bool:
        return item in self._states

    def get_state(self, item: str, as_of: int | None = None) -> ItemState:
        """Snapshot of ``item`` after folding events with seq <= ``as_of``."""
        events = self._by_item.get(item)
        if not events:
            raise UnknownItem(f"no such item: {item}")
        if as_of is None:
            return self._states[item]
        if as_of < events[0].seq:
            raise SeqBeforeCreation(
                f"as_of {as_of} precedes creation of {item} at seq {events[0].seq}"
            )
        state = ItemState.from_created(events[0])
        for event in events[1:]:
            if event.seq > as_of:
                break
            state = state.apply(event)
        return state

    def history(self, item: str) -> list[Event]:
        events = self._by_item.get(item)
        if not events:
            raise UnknownItem(f"no such item: {item}")
        return list(events)

    def events_since(self, after_seq: int = 0) -> list[Event]:
        if after_seq <= 0:
            return list(self._events)
        return self._events[after_seq:]

    @property
    def last_seq(self) -> int:
        return len(self._events)

    @property
    def item_count(self) -> int:
        return len(self._states)

    def item_ids(self) -> Iterable[str]:
        return self._states.keys()

    def states(self) -> dict[str, ItemState]:
        return dict(self._states)

    def digest(self) -> str:
        """Canonical state digest: hash of the sorted serialization of all
        item snapshots. Two stores with equal digests are state-identical."""
        import hashlib

        snapshots = {item_id: state.snapshot() for item_id, state in self._states.items()}
        blob = json.dumps(snapshots, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    # -- listeners -----------------------------------------------------------

    def attach(self, listener: Listener) -> None:
        """Register an index listener, first backfilling all past events."""
        with self._lock:
            for event in self._events:
                listener(event)
            self._listeners.append(listener)
