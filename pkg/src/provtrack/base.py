"""The analysis-base index: an in-process secondary index over kernel state.

The index is derived purely from the event stream, so it is identical
whether built live (one event at a time as operations run) or rebuilt by
replaying the log at startup. It answers the metadata, usage and lineage
queries without scanning the whole store, while the kernel remains the
single source of truth.

Lineage edges are stored in their natural relation direction; the
``DERIVED_SIDE`` table says which endpoint of each relation is the
*derived* (downstream) side, which is what orients origins/descendants
traversals.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator

from .kernel import (
    Created,
    Event,
    ItemStore,
    OutcomeAttached,
    PermissionGranted,
    PropertySet,
    StateTransition,
    VersionAdded,
)

# Lineage node kinds
DATA_ELEMENT = "data-element"
JOB_RECORD = "job-record"
ANALYSIS = "analysis"
OUTCOME = "outcome"
PIPELINE_VERSION = "pipeline-version"

# relation -> which endpoint ("from"/"to") is the derived/downstream side
DERIVED_SIDE = {
    "input-of": "to",
    "produced-by": "from",
    "derived-from": "from",
    "instantiated-from": "from",
    "part-of": "to",
}

WORKFLOW_STEP = "<workflow>"


def pipeline_version_node(pipeline: str, version: int) -> str:
    return f"{pipeline}@v{version}"


def outcome_node(analysis: str) -> str:
    return f"outcome-{analysis}"


@dataclass
class DatasetEntry:
    id: str
    name: str
    schema_note: str = ""
    element_ids: list[str] = field(default_factory=list)
    _members: set[str] = field(default_factory=set)  # mirrors element_ids


@dataclass
class ElementEntry:
    id: str
    dataset: str
    files: tuple[str, ...]
    metadata: dict[str, Any]


@dataclass
class AnalysisEntry:
    id: str
    owner: str
    pipeline: str
    pipeline_version: int
    dataset: str
    element_ids: tuple[str, ...]
    state: str
    created_at: str
    shared_with: set[str] = field(default_factory=set)
    cloned_from: str | None = None
    started_at: str | None = None
    finished_at: str | None = None


@dataclass
class AnalysisElementEntry:
    id: str
    parent: str
    element: str
    state: str


class AnalysisBase:
    """Secondary index; attach to a store and it stays current."""

    def __init__(self, store: ItemStore) -> None:
        self._store = store
        self.pipelines_by_name: dict[str, str] = {}
        self.pipeline_version_count: dict[str, int] = {}
        self.datasets: dict[str, DatasetEntry] = {}
        self.elements: dict[str, ElementEntry] = {}
        self.analyses: dict[str, AnalysisEntry] = {}
        self.analysis_elements: dict[str, AnalysisElementEntry] = {}
        self.elements_of_analysis: dict[str, list[str]] = {}
        self.records: dict[str, dict[str, Any]] = {}
        self.records_of_analysis: dict[str, list[str]] = {}
        self.outcomes: dict[str, dict[str, Any]] = {}
        self.record_kinds: dict[str, str] = {}  # system record descriptions
        self.nodes: dict[str, str] = {}  # lineage node id -> kind
        self._edges: set[tuple[str, str, str]] = set()
        self._out: dict[str, list[tuple[str, str, str]]] = {}
        self._in: dict[str, list[tuple[str, str, str]]] = {}
        store.attach(self.apply)

    # -- event application ----------------------------------------------------

    def apply(self, event: Event) -> None:
        payload = event.payload
        if isinstance(payload, Created):
            self._on_created(event, payload.props)
        elif isinstance(payload, PropertySet):
            self._on_property(event, payload)
        elif isinstance(payload, VersionAdded):
            pid = event.item
            if pid in self.pipeline_version_count:
                self.pipeline_version_count[pid] += 1
                self._add_node(
                    pipeline_version_node(pid, self.pipeline_version_count[pid]),
                    PIPELINE_VERSION,
                )
        elif isinstance(payload, StateTransition):
            self._on_transition(event, payload)
        elif isinstance(payload, PermissionGranted):
            entry = self.analyses.get(event.item)
            if entry is not None:
                entry.shared_with.add(payload.grantee)
        elif isinstance(payload, OutcomeAttached):
            self._on_outcome(event, dict(payload.outcome))

    def _on_created(self, event: Event, props: dict[str, Any]) -> None:
        item_type = props.get("type")
        if item_type == "pipeline":
            self.pipelines_by_name[props["name"]] = event.item
            self.pipeline_version_count[event.item] = 1
            self._add_node(pipeline_version_node(event.item, 1), PIPELINE_VERSION)
        elif item_type == "dataset":
            element_ids = list(props.get("elements", []))
            self.datasets[event.item] = DatasetEntry(
                id=event.item,
                name=props["name"],
                schema_note=props.get("schema_note", ""),
                element_ids=element_ids,
                _members=set(element_ids),
            )
        elif item_type == "data_element":
            self.elements[event.item] = ElementEntry(
                id=event.item,
                dataset=props["dataset"],
                files=tuple(props["files"]),
                metadata=dict(props.get("metadata", {})),
            )
            ds = self.datasets.get(props["dataset"])
            if ds is not None and event.item not in ds._members:
                ds.element_ids.append(event.item)
                ds._members.add(event.item)
            self._add_node(event.item, DATA_ELEMENT)
        elif item_type == "analysis":
            entry = AnalysisEntry(
                id=event.item,
                owner=props["owner"],
                pipeline=props["pipeline"],
                pipeline_version=int(props["pipeline_version"]),
                dataset=props["dataset"],
                element_ids=tuple(props["element_ids"]),
                state=event.payload.state or "Defined",  # type: ignore[union-attr]
                created_at=event.at,
                cloned_from=props.get("cloned_from"),
            )
            self.analyses[event.item] = entry
            self._add_node(event.item, ANALYSIS)
            self._add_edge(
                event.item,
                pipeline_version_node(entry.pipeline, entry.pipeline_version),
                "instantiated-from",
            )
            if entry.cloned_from:
                self._add_edge(event.item, entry.cloned_from, "derived-from")
        elif item_type == "analysis_element":
            self.analysis_elements[event.item] = AnalysisElementEntry(
                id=event.item,
                parent=props["parent"],
                element=props["element"],
                state=event.payload.state or "Pending",  # type: ignore[union-attr]
            )
            self.elements_of_analysis.setdefault(props["parent"], []).append(event.item)
        elif item_type == "provenance_record":
            self._on_record(event.item, props)
        elif item_type == "record_kind":
            self.record_kinds[props["name"]] = event.item

    def _on_record(self, record_id: str, props: dict[str, Any]) -> None:
        record = dict(props)
        record["id"] = record_id
        self.records[record_id] = record
        analysis = record["analysis"]
        self.records_of_analysis.setdefault(analysis, []).append(record_id)
        self._add_node(record_id, JOB_RECORD)
        self._add_edge(record_id, analysis, "part-of")
        self._add_edge(
            record_id,
            pipeline_version_node(record["pipeline"], int(record["pipeline_version"])),
            "instantiated-from",
        )
        for link in record.get("links", []):
            self._add_edge(record_id, link, "derived-from")
        if record.get("consumed_element") and record.get("element"):
            self._add_edge(record["element"], record_id, "input-of")

    def _on_property(self, event: Event, payload: PropertySet) -> None:
        ds = self.datasets.get(event.item)
        if ds is not None and payload.key == "elements":
            ds.element_ids = list(payload.value)
            ds._members = set(ds.element_ids)

    def _on_transition(self, event: Event, payload: StateTransition) -> None:
        analysis = self.analyses.get(event.item)
        if analysis is not None:
            analysis.state = payload.to_state
            if payload.to_state == "Running":
                analysis.started_at = event.at
            elif payload.to_state in ("Completed", "PartiallyFailed", "Failed"):
                analysis.finished_at = event.at
            return
        element = self.analysis_elements.get(event.item)
        if element is not None:
            element.state = payload.to_state

    def _on_outcome(self, event: Event, outcome: dict[str, Any]) -> None:
        analysis = event.item
        self.outcomes[analysis] = outcome
        node = outcome_node(analysis)
        self._add_node(node, OUTCOME)
        for record_id in outcome.get("produced_by", []):
            self._add_edge(node, record_id, "produced-by")

    # -- lineage graph ----------------------------------------------------------

    def _add_node(self, node: str, kind: str) -> None:
        self.nodes.setdefault(node, kind)

    def _add_edge(self, frm: str, to: str, relation: str) -> None:
        edge = (frm, to, relation)
        if edge in self._edges:
            return
        self._edges.add(edge)
        self._out.setdefault(frm, []).append(edge)
        self._in.setdefault(to, []).append(edge)

    def edges(self) -> set[tuple[str, str, str]]:
        return set(self._edges)

    def neighbours_toward_origins(self, node: str) -> Iterator[tuple[str, tuple[str, str, str]]]:
        """Edges leading from ``node`` toward its origins (node on derived side)."""
        for edge in self._out.get(node, []):
            if DERIVED_SIDE[edge[2]] == "from":
                yield edge[1], edge
        for edge in self._in.get(node, []):
            if DERIVED_SIDE[edge[2]] == "to":
                yield edge[0], edge

    def neighbours_toward_descendants(self, node: str) -> Iterator[tuple[str, tuple[str, str, str]]]:
        for edge in self._out.get(node, []):
            if DERIVED_SIDE[edge[2]] == "to":
                yield edge[1], edge
        for edge in self._in.get(node, []):
            if DERIVED_SIDE[edge[2]] == "from":
                yield edge[0], edge

    # -- lookups ----------------------------------------------------------------

    def pipeline_by_name(self, name: str) -> str | None:
        return self.pipelines_by_name.get(name)

    def iter_elements(self, dataset: str | None = None) -> Iterable[ElementEntry]:
        if dataset is None:
            return list(self.elements.values())
        ds = self.datasets.get(dataset)
        if ds is None:
            return []
        return [self.elements[eid] for eid in ds.element_ids if eid in self.elements]

    def analyses_referencing(
        self,
        pipeline: str | None = None,
        version: int | None = None,
        dataset: str | None = None,
        element: str | None = None,
    ) -> list[AnalysisEntry]:
        rows = []
        for entry in self.analyses.values():
            if pipeline is not None and entry.pipeline != pipeline:
                continue
            if version is not None and entry.pipeline_version != version:
                continue
            if dataset is not None and entry.dataset != dataset:
                continue
            if element is not None and element not in entry.element_ids:
                continue
            rows.append(entry)
        return rows
