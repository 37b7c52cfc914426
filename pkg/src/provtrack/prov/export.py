"""Mapping of terminal analyses onto the PROV data model.

Data elements and output files become Entities, each job attempt and the
whole-workflow record become Activities, the owner becomes an Agent, and
the execution facts are expressed through the five core relations. The
serialization is deterministic: exporting the same analysis twice yields
byte-identical text.
"""

from __future__ import annotations

import hashlib
import json
from typing import Any

from ..base import WORKFLOW_STEP, AnalysisBase, outcome_node
from ..config import Config
from ..domain import DomainService
from ..errors import NotTerminal, NotVisible
from ..kernel import ActorRef, ItemStore
from ..orchestrator.jobs import ProvenanceRecord
from ..query import QueryService
from .document import ProvActivity, ProvDocument, Relation, serialize

TERMINAL_STATES = ("Completed", "PartiallyFailed", "Failed")


def _stringify(value: Any) -> str:
    return value if isinstance(value, str) else json.dumps(value)


def file_entity_suffix(locator: str) -> str:
    return hashlib.sha256(locator.encode("utf-8")).hexdigest()[:12]


class ProvExporter:
    def __init__(
        self,
        store: ItemStore,
        base: AnalysisBase,
        domain: DomainService,
        queries: QueryService,
        config: Config | None = None,
    ) -> None:
        self.store = store
        self.base = base
        self.domain = domain
        self.queries = queries
        self.config = config or Config()

    def export(self, analysis: str, format: str, viewer: ActorRef) -> str:
        return serialize(self.build_document(analysis, viewer), format)

    def build_document(self, analysis: str, viewer: ActorRef) -> ProvDocument:
        view = self.domain.get_analysis(analysis)
        if not view.visible_to(viewer.id):
            raise NotVisible(f"analysis {analysis} is not visible to {viewer.id}")
        if view.state not in TERMINAL_STATES:
            raise NotTerminal(f"analysis {analysis} is {view.state}, not terminal")
        prefix = self.config.prov_prefix
        doc = ProvDocument(namespaces={prefix: self.config.prov_base_uri})

        agent_id = f"{prefix}:user-{view.owner}"
        doc.agents[agent_id] = {"prov:type": "prov:Person"}

        for element_id in view.element_ids:
            element = self.domain.get_element(element_id)
            attrs = {k: _stringify(v) for k, v in sorted(element.metadata.items())}
            attrs["files"] = " ".join(element.files)
            doc.entities[f"{prefix}:data-element-{element_id}"] = attrs

        records = self.queries.job_results(analysis, viewer)
        file_entities: dict[str, str] = {}
        for record in records:
            for locator in record.outputs:
                if locator not in file_entities:
                    entity_id = f"{prefix}:file-{file_entity_suffix(locator)}"
                    file_entities[locator] = entity_id
                    doc.entities[entity_id] = {"locator": locator}

        annotations = {
            f"note:{i + 1}": f"{author} {at}: {text}"
            for i, (author, at, text) in enumerate(view.annotations)
        }
        for record in records:
            activity_id = self._activity_id(prefix, record)
            attrs = {
                "step": record.step,
                "status": record.status,
                "resource": record.resource,
                "attempt": str(record.attempt),
            }
            if record.error:
                attrs["error"] = record.error
            if record.step == WORKFLOW_STEP:
                attrs.update(annotations)
            doc.activities[activity_id] = ProvActivity(
                start_time=record.started_at,
                end_time=record.ended_at,
                attributes=attrs,
            )
            doc.relations.append(Relation("wasAssociatedWith", activity_id, agent_id))
            used_entities = self._inputs_of(prefix, record, file_entities)
            for entity in used_entities:
                doc.relations.append(Relation("used", activity_id, entity))
            for locator in record.outputs:
                out_entity = file_entities[locator]
                doc.relations.append(Relation("wasGeneratedBy", out_entity, activity_id))
                for entity in used_entities:
                    doc.relations.append(Relation("wasDerivedFrom", out_entity, entity))

        outcome = self.base.outcomes.get(analysis)
        if outcome is not None:
            outcome_id = f"{prefix}:{outcome_node(analysis)}"
            doc.entities[outcome_id] = {
                "result_link": outcome["result_link"],
                "registered_at": outcome["registered_at"],
            }
            workflow_activity = next(
                (
                    self._activity_id(prefix, r)
                    for r in records
                    if r.step == WORKFLOW_STEP
                ),
                None,
            )
            if workflow_activity is not None:
                doc.relations.append(
                    Relation("wasGeneratedBy", outcome_id, workflow_activity)
                )
            doc.relations.append(Relation("wasAttributedTo", outcome_id, agent_id))

        doc.relations = doc.sorted_relations()
        return doc

    @staticmethod
    def _activity_id(prefix: str, record: ProvenanceRecord) -> str:
        kind = "workflow" if record.step == WORKFLOW_STEP else "job"
        return f"{prefix}:{kind}-{record.id}"

    @staticmethod
    def _inputs_of(
        prefix: str, record: ProvenanceRecord, file_entities: dict[str, str]
    ) -> list[str]:
        used: list[str] = []
        if record.consumed_element and record.element:
            used.append(f"{prefix}:data-element-{record.element}")
        for locator in record.input_files:
            if locator in file_entities:
                used.append(file_entities[locator])
        return sorted(set(used))
