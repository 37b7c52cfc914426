"""Item kernel: append-only semantics, time travel, replay, log integrity."""

from __future__ import annotations

import json
import os
import threading

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from provtrack.errors import (
    CorruptLog,
    IllegalTransition,
    InvalidKind,
    SeqBeforeCreation,
    UnknownDescription,
    UnknownItem,
)
from provtrack.kernel import (
    ActorRef,
    Annotated,
    ItemKind,
    ItemStore,
    PermissionGranted,
    PropertySet,
    StateTransition,
    VersionAdded,
    encode_record,
)

U1 = ActorRef("u1", "Alice")
U2 = ActorRef("u2", "Bob")


@pytest.fixture
def store(tmp_path) -> ItemStore:
    with ItemStore(tmp_path / "events.log") as s:
        yield s


def test_create_description_item(store):
    item = store.create_item(ItemKind.DESCRIPTION, None, {"name": "CIVET"}, U1, "register")
    assert store.history(item)[0].payload.props == {"name": "CIVET"}
    assert len(store.history(item)) == 1
    state = store.get_state(item)
    assert state.kind == "Description"
    assert state.current_version == 1
    assert state.created_by == "u1"


def test_create_instance_requires_description(store):
    desc = store.create_item(ItemKind.DESCRIPTION, None, {}, U1, "d")
    inst = store.create_item(ItemKind.INSTANCE, desc, {}, U1, "instantiate")
    assert store.get_state(inst).described_by == desc

    with pytest.raises(UnknownDescription):
        store.create_item(ItemKind.INSTANCE, "no-such-id", {}, U1, "x")
    with pytest.raises(InvalidKind):
        store.create_item(ItemKind.INSTANCE, None, {}, U1, "x")
    with pytest.raises(InvalidKind):
        store.create_item(ItemKind.DESCRIPTION, desc, {}, U1, "x")
    with pytest.raises(InvalidKind):
        store.create_item(ItemKind.INSTANCE, inst, {}, U1, "instance of instance")
    with pytest.raises(InvalidKind):
        store.create_item("Sideways", None, {}, U1, "x")


def test_record_event_updates_state(store):
    item = store.create_item(ItemKind.DESCRIPTION, None, {}, U1, "d")
    seq = store.record_event(item, PropertySet("timeout", "3600"), U1, "tune")
    assert store.get_state(item).properties["timeout"] == "3600"
    assert seq == 2


def test_seq_strictly_increasing_across_callers(store):
    item = store.create_item(ItemKind.DESCRIPTION, None, {}, U1, "d")
    s1 = store.record_event(item, PropertySet("a", 1), U1, "first")
    s2 = store.record_event(item, PropertySet("b", 2), U2, "second")
    assert s2 == s1 + 1


def test_record_event_unknown_item(store):
    with pytest.raises(UnknownItem):
        store.record_event("missing", PropertySet("k", "v"), U1, "x")


def test_state_transition_guard(store):
    item = store.create_item(ItemKind.DESCRIPTION, None, {}, U1, "d", state="Defined")
    store.record_event(item, StateTransition("Defined", "Running"), U1, "go")
    with pytest.raises(IllegalTransition):
        store.record_event(item, StateTransition("Defined", "Running"), U1, "again")
    assert store.get_state(item).lifecycle == "Running"


def test_get_state_as_of(store):
    item = store.create_item(ItemKind.DESCRIPTION, None, {"n": 0}, U1, "d")
    created_seq = store.history(item)[0].seq
    store.record_event(item, PropertySet("n", 1), U1, "bump")
    assert store.get_state(item, as_of=created_seq).properties == {"n": 0}
    assert store.get_state(item).properties == {"n": 1}
    with pytest.raises(SeqBeforeCreation):
        store.get_state(item, as_of=created_seq - 1)


def test_as_of_equals_prefix_replay(tmp_path):
    """Brute-force oracle: state(as_of=k) must equal replaying the first k
    log lines from scratch."""
    path = tmp_path / "log"
    store = ItemStore(path)
    item = store.create_item(ItemKind.DESCRIPTION, None, {"i": 0}, U1, "d")
    for i in range(1, 8):
        store.record_event(item, PropertySet(f"k{i}", i), U1, f"set {i}")
    store.record_event(item, VersionAdded({"definition": {"v": 2}}), U1, "rev")
    store.close()

    lines = path.read_text().splitlines(keepends=True)
    for k in range(1, len(lines) + 1):
        truncated = tmp_path / f"prefix_{k}.log"
        truncated.write_text("".join(lines[:k]))
        replayed = ItemStore.replay(truncated)
        assert replayed.get_state(item).snapshot() == ItemStore(path).get_state(
            item, as_of=k
        ).snapshot()


def test_history_shape(store):
    item = store.create_item(ItemKind.DESCRIPTION, None, {}, U1, "d")
    assert [type(e.payload).__name__ for e in store.history(item)] == ["Created"]
    for i in range(4):
        store.record_event(item, PropertySet("k", i), U1, "m")
    history = store.history(item)
    assert len(history) == 5
    assert all(a.seq < b.seq for a, b in zip(history, history[1:]))
    with pytest.raises(UnknownItem):
        store.history("missing")


def test_histories_concatenated_equal_log_file(tmp_path):
    path = tmp_path / "log"
    store = ItemStore(path)
    items = [store.create_item(ItemKind.DESCRIPTION, None, {"i": i}, U1, "d") for i in range(3)]
    for i, item in enumerate(items * 2):
        store.record_event(item, PropertySet("n", i), U1, "m")
    store.close()

    merged = sorted(
        (event for item in items for event in ItemStore(path).history(item)),
        key=lambda e: e.seq,
    )
    raw = [line for line in path.read_text().splitlines()]
    assert len(merged) == len(raw)
    assert [encode_record(e).strip() for e in merged] == raw


def test_replay_empty_and_roundtrip(tmp_path):
    empty = ItemStore(tmp_path / "empty.log")
    empty.close()
    assert ItemStore.replay(tmp_path / "empty.log").item_count == 0

    path = tmp_path / "big.log"
    store = ItemStore(path)
    import random

    rng = random.Random(7)
    items = []
    for _ in range(40):
        items.append(store.create_item(ItemKind.DESCRIPTION, None, {}, U1, "d"))
    for n in range(1000):
        item = rng.choice(items)
        kind = rng.randrange(4)
        if kind == 0:
            store.record_event(item, PropertySet(f"k{rng.randrange(5)}", n), U1, "p")
        elif kind == 1:
            store.record_event(item, Annotated(f"note {n}"), U1, "a")
        elif kind == 2:
            store.record_event(item, PermissionGranted(f"u{rng.randrange(4)}"), U1, "g")
        else:
            store.record_event(item, VersionAdded({"definition": {"n": n}}), U1, "v")
    digest = store.digest()
    store.close()
    assert ItemStore.replay(path).digest() == digest


def test_corrupt_log_variants(tmp_path):
    path = tmp_path / "log"
    store = ItemStore(path)
    item = store.create_item(ItemKind.DESCRIPTION, None, {}, U1, "d")
    for i in range(3):
        store.record_event(item, PropertySet("k", i), U1, "m")
    store.close()
    lines = path.read_text().splitlines(keepends=True)

    gap = tmp_path / "gap.log"
    gap.write_text(lines[0] + lines[2] + lines[3])
    with pytest.raises(CorruptLog):
        ItemStore.replay(gap)

    flipped = tmp_path / "crc.log"
    tampered = lines[1].replace('"value":0', '"value":7')
    assert tampered != lines[1]
    flipped.write_text(lines[0] + tampered + lines[2] + lines[3])
    with pytest.raises(CorruptLog):
        ItemStore.replay(flipped)

    garbage = tmp_path / "garbage.log"
    garbage.write_text(lines[0] + "not json at all\n")
    with pytest.raises(CorruptLog):
        ItemStore.replay(garbage)


def test_append_only_byte_length(tmp_path):
    path = tmp_path / "log"
    store = ItemStore(path)
    sizes = [0]
    item = store.create_item(ItemKind.DESCRIPTION, None, {}, U1, "d")
    sizes.append(os.path.getsize(path))
    for i in range(5):
        store.record_event(item, PropertySet("k", i), U1, "m")
        sizes.append(os.path.getsize(path))
    store.get_state(item)
    store.history(item)
    sizes.append(os.path.getsize(path))
    assert sizes == sorted(sizes)
    store.close()


def test_version_permanence(store):
    item = store.create_item(
        ItemKind.DESCRIPTION, None, {"definition": {"v": 1, "blob": [1, 2, 3]}}, U1, "d"
    )
    originals = [dict(store.get_state(item).versions[0])]
    for v in range(2, 6):
        content = {"definition": {"v": v, "blob": list(range(v))}}
        store.record_event(item, VersionAdded(content), U1, "rev")
        originals.append(content)
    state = store.get_state(item)
    assert state.current_version == 5
    for v, original in enumerate(originals, start=1):
        assert json.dumps(state.versions[v - 1], sort_keys=True) == json.dumps(
            original, sort_keys=True
        )


def test_description_change_reflexivity(store):
    """Every mutation of a description is itself queryable via history."""
    item = store.create_item(ItemKind.DESCRIPTION, None, {}, U1, "d")
    store.record_event(item, PropertySet("a", 1), U1, "p1")
    store.record_event(item, VersionAdded({"definition": {}}), U1, "v2")
    store.record_event(item, PropertySet("b", 2), U2, "p2")
    changes = [
        e
        for e in store.history(item)
        if type(e.payload).__name__ in ("PropertySet", "VersionAdded")
    ]
    assert len(changes) == 3
    assert [e.actor for e in changes] == ["u1", "u1", "u2"]
    assert all(e.reason for e in changes)


def test_concurrent_writers_total_order(tmp_path):
    store = ItemStore(tmp_path / "log")
    item = store.create_item(ItemKind.DESCRIPTION, None, {}, U1, "d")
    seqs: list[int] = []
    lock = threading.Lock()

    def writer(worker: int) -> None:
        for i in range(50):
            seq = store.record_event(item, PropertySet(f"w{worker}", i), U1, "w")
            with lock:
                seqs.append(seq)

    threads = [threading.Thread(target=writer, args=(w,)) for w in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(seqs) == 200
    assert len(set(seqs)) == 200
    assert store.last_seq == 201
    store.close()
    assert ItemStore.replay(tmp_path / "log").digest() == store.digest()


def test_transaction_atomicity(store):
    txn = store.transaction()
    txn.create_item(ItemKind.DESCRIPTION, None, {}, U1, "will not commit")
    with pytest.raises(UnknownDescription):
        txn.create_item(ItemKind.INSTANCE, "missing", {}, U1, "boom")
    # nothing from the failed transaction hit the store
    assert store.item_count == 0

    txn = store.transaction()
    a = txn.create_item(ItemKind.DESCRIPTION, None, {}, U1, "a")
    b = txn.create_item(ItemKind.INSTANCE, a, {}, U1, "b")
    txn.record_event(a, PropertySet("child", b), U1, "link")
    seqs = txn.commit()
    assert seqs == [1, 2, 3]
    assert store.get_state(a).properties["child"] == b


# --- property tests ---------------------------------------------------------------

_ops = st.lists(
    st.one_of(
        st.tuples(st.just("prop"), st.sampled_from("abcd"), st.integers(0, 9)),
        st.tuples(st.just("note"), st.sampled_from(["x", "y"]), st.integers(0, 9)),
        st.tuples(st.just("grant"), st.sampled_from(["u2", "u3"]), st.integers(0, 9)),
    ),
    min_size=0,
    max_size=12,
)


@settings(max_examples=40, deadline=None)
@given(ops=_ops)
def test_fold_matches_prefix_replay_property(tmp_path_factory, ops):
    tmp = tmp_path_factory.mktemp("prop")
    path = tmp / "log"
    store = ItemStore(path)
    item = store.create_item(ItemKind.DESCRIPTION, None, {"seed": True}, U1, "base")
    for op, key, value in ops:
        if op == "prop":
            store.record_event(item, PropertySet(key, value), U1, "p")
        elif op == "note":
            store.record_event(item, Annotated(f"{key}{value}"), U1, "n")
        else:
            store.record_event(item, PermissionGranted(key), U1, "g")
    store.close()

    lines = path.read_text().splitlines(keepends=True)
    full = ItemStore.replay(path)
    for k in range(1, len(lines) + 1):
        prefix_path = tmp / "prefix.log"
        prefix_path.write_text("".join(lines[:k]))
        assert ItemStore.replay(prefix_path).get_state(item).snapshot() == full.get_state(
            item, as_of=k
        ).snapshot()


@settings(max_examples=30, deadline=None)
@given(
    props=st.dictionaries(
        st.text(min_size=1, max_size=6), st.integers(-5, 5), max_size=5
    )
)
def test_snapshot_digest_stable(tmp_path_factory, props):
    tmp = tmp_path_factory.mktemp("digest")
    store = ItemStore(tmp / "log")
    store.create_item(ItemKind.DESCRIPTION, None, props, U1, "d")
    digest = store.digest()
    assert store.digest() == digest  # reads are pure
    store.close()
    assert ItemStore.replay(tmp / "log").digest() == digest
