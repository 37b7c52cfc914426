"""Read-side queries: constraint search, analysis retrieval, lineage, usage.

Everything here is read-only over kernel snapshots and the analysis-base
index, with deterministic ordering (by id, then seq) so results are stable.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass
from typing import Any, Iterable, Mapping

from ..base import AnalysisBase
from ..domain import DomainService
from ..errors import (
    NotVisible,
    UnknownDataset,
    UnknownNode,
    UnknownTarget,
    ValidationFailed,
)
from ..kernel import ActorRef, ItemStore
from ..orchestrator.jobs import ProvenanceRecord, parse_ts
from .constraints import Constraint, matches_all
from .lineage import LineageGraph


@dataclass(frozen=True)
class ElementHit:
    id: str
    metadata: Mapping[str, Any]
    files: tuple[str, ...]


@dataclass(frozen=True)
class AnalysisSummary:
    id: str
    owner: str
    state: str
    pipeline: str
    pipeline_version: int
    dataset: str
    element_count: int
    created_at: str
    started_at: str | None
    finished_at: str | None
    cloned_from: str | None

    def to_doc(self) -> dict[str, Any]:
        return dict(self.__dict__)


@dataclass(frozen=True)
class UsageRow:
    analysis: str
    owner: str
    pipeline_version: int
    created_at: str
    started_at: str | None
    finished_at: str | None

    def to_doc(self) -> dict[str, Any]:
        return dict(self.__dict__)


class QueryService:
    def __init__(self, store: ItemStore, base: AnalysisBase, domain: DomainService) -> None:
        self.store = store
        self.base = base
        self.domain = domain

    # -- datasets -----------------------------------------------------------------

    def find_data_elements(
        self,
        dataset: str | None = None,
        constraints: Iterable[Constraint | Mapping[str, Any]] = (),
    ) -> list[ElementHit]:
        """Elements whose metadata satisfies every constraint, ordered by id."""
        if dataset is not None and dataset not in self.base.datasets:
            raise UnknownDataset(f"no such dataset: {dataset}")
        parsed = [
            c if isinstance(c, Constraint) else Constraint.from_doc(c)
            for c in constraints
        ]
        hits = [
            ElementHit(id=e.id, metadata=dict(e.metadata), files=e.files)
            for e in self.base.iter_elements(dataset)
            if matches_all(e.metadata, parsed)
        ]
        return sorted(hits, key=lambda h: h.id)

    # -- analyses -----------------------------------------------------------------

    def list_analyses(
        self,
        viewer: ActorRef,
        owner: str | None = None,
        state: str | None = None,
        pipeline: str | None = None,
    ) -> list[AnalysisSummary]:
        rows = []
        for entry in self.base.analyses.values():
            if viewer.id != entry.owner and viewer.id not in entry.shared_with:
                continue
            if owner is not None and entry.owner != owner:
                continue
            if state is not None and entry.state != state:
                continue
            if pipeline is not None and entry.pipeline != pipeline:
                continue
            rows.append(self._summary(entry))
        return sorted(rows, key=lambda r: r.id)

    def _summary(self, entry) -> AnalysisSummary:
        return AnalysisSummary(
            id=entry.id,
            owner=entry.owner,
            state=entry.state,
            pipeline=entry.pipeline,
            pipeline_version=entry.pipeline_version,
            dataset=entry.dataset,
            element_count=len(entry.element_ids),
            created_at=entry.created_at,
            started_at=entry.started_at,
            finished_at=entry.finished_at,
            cloned_from=entry.cloned_from,
        )

    # -- workflow versions -----------------------------------------------------------

    def get_workflow_version(self, pipeline: str, version: int) -> dict[str, Any]:
        """The exact historical definition document of one pipeline version."""
        pdef = self.domain.get_pipeline(pipeline, version)
        state = self.store.get_state(pipeline)
        return copy.deepcopy(state.versions[pdef.version - 1]["definition"])

    # -- provenance records --------------------------------------------------------------

    def job_results(self, analysis: str, viewer: ActorRef) -> list[ProvenanceRecord]:
        """Every record of every element plus the whole-workflow record,
        failed attempts included, ordered by start time."""
        view = self.domain.get_analysis(analysis)
        if not view.visible_to(viewer.id):
            raise NotVisible(f"analysis {analysis} is not visible to {viewer.id}")
        record_ids = self.base.records_of_analysis.get(analysis, [])
        records = [
            ProvenanceRecord.from_props(rid, self.base.records[rid]) for rid in record_ids
        ]
        return sorted(records, key=lambda r: (parse_ts(r.started_at), r.id))

    # -- lineage ---------------------------------------------------------------------------

    def lineage(
        self,
        node: str,
        direction: str = "origins",
        depth: int | None = None,
    ) -> LineageGraph:
        if direction not in ("origins", "descendants"):
            raise ValidationFailed(f"unknown direction {direction!r}")
        if node not in self.base.nodes:
            raise UnknownNode(f"no such lineage node: {node}")
        step = (
            self.base.neighbours_toward_origins
            if direction == "origins"
            else self.base.neighbours_toward_descendants
        )
        nodes: dict[str, str] = {node: self.base.nodes[node]}
        edges: set[tuple[str, str, str]] = set()
        frontier = [node]
        level = 0
        while frontier and (depth is None or level < depth):
            level += 1
            next_frontier: list[str] = []
            for current in frontier:
                for neighbour, edge in step(current):
                    edges.add(edge)
                    if neighbour not in nodes:
                        nodes[neighbour] = self.base.nodes.get(neighbour, "unknown")
                        next_frontier.append(neighbour)
            frontier = next_frontier
        return LineageGraph.build(node, nodes, edges)

    # -- usage -----------------------------------------------------------------------------

    def usage(
        self,
        target: str,
        viewer: ActorRef,
        version: int | None = None,
    ) -> list[UsageRow]:
        """Analyses referencing a pipeline (version), dataset or data element."""
        if target in self.base.pipeline_version_count:
            entries = self.base.analyses_referencing(pipeline=target, version=version)
        elif target in self.base.datasets:
            entries = self.base.analyses_referencing(dataset=target)
        elif target in self.base.elements:
            entries = self.base.analyses_referencing(element=target)
        else:
            raise UnknownTarget(f"no pipeline, dataset or element with id {target}")
        rows = [
            UsageRow(
                analysis=e.id,
                owner=e.owner,
                pipeline_version=e.pipeline_version,
                created_at=e.created_at,
                started_at=e.started_at,
                finished_at=e.finished_at,
            )
            for e in entries
            if viewer.id == e.owner or viewer.id in e.shared_with
        ]
        return sorted(rows, key=lambda r: r.analysis)

    # -- element status (run monitor support) -------------------------------------------------

    def analysis_detail(self, analysis: str, viewer: ActorRef) -> dict[str, Any]:
        view = self.domain.get_analysis(analysis, viewer=viewer)
        elements = [
            {
                "id": item_id,
                "element": self.base.analysis_elements[item_id].element,
                "state": self.base.analysis_elements[item_id].state,
            }
            for item_id in self.base.elements_of_analysis.get(analysis, [])
        ]
        entry = self.base.analyses[analysis]
        return {
            "id": view.id,
            "owner": view.owner,
            "state": entry.state,
            "pipeline": view.pipeline,
            "pipeline_version": view.pipeline_version,
            "dataset": view.dataset,
            "element_ids": list(view.element_ids),
            "params": dict(view.params),
            "post_processing": [s.to_doc() for s in view.post_processing],
            "shared_with": sorted(view.shared_with),
            "annotations": [
                {"author": a, "at": t, "text": text} for a, t, text in view.annotations
            ],
            "cloned_from": view.cloned_from,
            "elements": sorted(elements, key=lambda e: e["id"]),
            "outcome": self.base.outcomes.get(analysis),
            "started_at": entry.started_at,
            "finished_at": entry.finished_at,
        }
