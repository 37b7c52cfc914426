"""Write-side domain operations over the item kernel.

Each operation maps to one kernel event or one transactionally grouped
batch, so domain changes are atomic and appear contiguously in the log.
"""

from __future__ import annotations

import logging
from typing import Any, Iterable, Mapping

from ..base import AnalysisBase
from ..errors import (
    ElementNotInDataset,
    EmptyElement,
    NotOwner,
    NotVisible,
    UnknownAnalysis,
    UnknownDataset,
    UnknownItem,
    UnknownPipeline,
    UnknownVersion,
    ValidationFailed,
)
from ..kernel import (
    ActorRef,
    Annotated,
    ItemKind,
    ItemStore,
    PermissionGranted,
    PropertySet,
    VersionAdded,
)
from .types import (
    Analysis,
    AnalysisElement,
    DataElement,
    Dataset,
    PipelineDefinition,
    StepSpec,
    check_param_value,
    resolve_params,
    toposort_steps,
    validate_pipeline_doc,
)

logger = logging.getLogger(__name__)


class DomainService:
    def __init__(self, store: ItemStore, base: AnalysisBase) -> None:
        self.store = store
        self.base = base

    # -- pipelines ------------------------------------------------------------

    def register_pipeline(
        self, doc: Mapping[str, Any], actor: ActorRef, reason: str
    ) -> tuple[str, int]:
        """Register a pipeline definition; re-registering a name adds a version."""
        definition = validate_pipeline_doc(doc)
        name = definition["name"]
        existing = self.base.pipeline_by_name(name)
        txn = self.store.transaction()
        if existing is None:
            pipeline_id = txn.create_item(
                ItemKind.DESCRIPTION,
                None,
                {"type": "pipeline", "name": name, "definition": definition},
                actor,
                reason,
            )
            step_items = {}
            for step in definition["steps"]:
                step_items[step["name"]] = txn.create_item(
                    ItemKind.DESCRIPTION,
                    None,
                    {"type": "step", "pipeline": pipeline_id, "name": step["name"]},
                    actor,
                    reason,
                )
            txn.record_event(pipeline_id, PropertySet("step_items", step_items), actor, reason)
            txn.commit()
            logger.info("registered pipeline %s (%s) v1", name, pipeline_id)
            return pipeline_id, 1
        state = self.store.get_state(existing)
        step_items = dict(state.properties.get("step_items", {}))
        txn.record_event(existing, VersionAdded({"definition": definition}), actor, reason)
        for step in definition["steps"]:
            if step["name"] not in step_items:
                step_items[step["name"]] = txn.create_item(
                    ItemKind.DESCRIPTION,
                    None,
                    {"type": "step", "pipeline": existing, "name": step["name"]},
                    actor,
                    reason,
                )
        txn.record_event(existing, PropertySet("step_items", step_items), actor, reason)
        txn.commit()
        version = self.store.get_state(existing).current_version
        logger.info("registered pipeline %s (%s) v%d", name, existing, version)
        return existing, version

    def get_pipeline(self, pipeline: str, version: int | None = None) -> PipelineDefinition:
        try:
            state = self.store.get_state(pipeline)
        except UnknownItem:
            raise UnknownPipeline(f"no such pipeline: {pipeline}")
        if state.properties.get("type") != "pipeline":
            raise UnknownPipeline(f"item {pipeline} is not a pipeline")
        if version is not None and not 1 <= version <= state.current_version:
            raise UnknownVersion(f"pipeline {pipeline} has no version {version}")
        return PipelineDefinition.from_state(state, version)

    # -- datasets ---------------------------------------------------------------

    def register_dataset(
        self,
        name: str,
        elements: Iterable[Mapping[str, Any]],
        actor: ActorRef,
        reason: str,
        schema_note: str = "",
    ) -> str:
        elements = list(elements)
        for element in elements:
            if not element.get("files"):
                raise EmptyElement("a data element needs at least one file locator")
        txn = self.store.transaction()
        dataset_id = txn.create_item(
            ItemKind.DESCRIPTION,
            None,
            {"type": "dataset", "name": name, "schema_note": schema_note},
            actor,
            reason,
        )
        element_ids = [
            txn.create_item(
                ItemKind.INSTANCE,
                dataset_id,
                {
                    "type": "data_element",
                    "dataset": dataset_id,
                    "files": list(element["files"]),
                    "metadata": dict(element.get("metadata", {})),
                },
                actor,
                reason,
            )
            for element in elements
        ]
        txn.record_event(dataset_id, PropertySet("elements", element_ids), actor, reason)
        txn.commit()
        logger.info("registered dataset %s (%s) with %d elements", name, dataset_id, len(element_ids))
        return dataset_id

    def get_dataset(self, dataset: str) -> Dataset:
        try:
            state = self.store.get_state(dataset)
        except UnknownItem:
            raise UnknownDataset(f"no such dataset: {dataset}")
        if state.properties.get("type") != "dataset":
            raise UnknownDataset(f"item {dataset} is not a dataset")
        return Dataset.from_state(state)

    def get_element(self, element: str) -> DataElement:
        state = self.store.get_state(element)
        if state.properties.get("type") != "data_element":
            raise UnknownItem(f"item {element} is not a data element")
        return DataElement.from_state(state)

    # -- analyses -----------------------------------------------------------------

    def create_analysis(
        self,
        pipeline: str,
        version: int | None,
        dataset: str,
        element_ids: Iterable[str],
        overrides: Mapping[str, Any],
        owner: ActorRef,
        post_processing: Iterable[Mapping[str, Any]] | None = None,
        reason: str = "create analysis",
        cloned_from: str | None = None,
    ) -> str:
        pdef = self.get_pipeline(pipeline, version)
        ds = self.get_dataset(dataset)
        element_ids = list(element_ids)
        if not element_ids:
            raise ValidationFailed("an analysis needs at least one data element")
        members = set(ds.elements)
        for eid in element_ids:
            if eid not in members:
                raise ElementNotInDataset(f"element {eid} is not in dataset {dataset}")
        params = resolve_params(pdef.param_schema, dict(overrides))
        post_docs = self._validate_post(post_processing)
        analysis_id = self.store.create_item(
            ItemKind.INSTANCE,
            pipeline,
            {
                "type": "analysis",
                "owner": owner.id,
                "pipeline": pipeline,
                "pipeline_version": pdef.version,
                "dataset": dataset,
                "element_ids": element_ids,
                "params": params,
                "post_processing": post_docs,
                "cloned_from": cloned_from,
            },
            owner,
            reason,
            state="Defined",
        )
        return analysis_id

    @staticmethod
    def _validate_post(post_processing: Iterable[Mapping[str, Any]] | None) -> list[dict[str, Any]]:
        if not post_processing:
            return []
        docs = [StepSpec.from_doc(s).to_doc() for s in post_processing]
        for doc in docs:
            if not doc.get("script_ref"):
                raise ValidationFailed(f"post-processing step {doc.get('name')!r} needs a script_ref")
        toposort_steps(docs)
        return docs

    def get_analysis(self, analysis: str, viewer: ActorRef | None = None) -> Analysis:
        try:
            state = self.store.get_state(analysis)
        except UnknownItem:
            raise UnknownAnalysis(f"no such analysis: {analysis}")
        if state.properties.get("type") != "analysis":
            raise UnknownAnalysis(f"item {analysis} is not an analysis")
        view = Analysis.from_state(state)
        if viewer is not None and not view.visible_to(viewer.id):
            raise NotVisible(f"analysis {analysis} is not visible to {viewer.id}")
        return view

    def get_analysis_element(self, element_item: str) -> AnalysisElement:
        state = self.store.get_state(element_item)
        if state.properties.get("type") != "analysis_element":
            raise UnknownItem(f"item {element_item} is not an analysis element")
        return AnalysisElement.from_state(state)

    def clone_analysis(
        self, src: str, changes: Mapping[str, Any], actor: ActorRef
    ) -> str:
        source = self.get_analysis(src, viewer=actor)
        changes = dict(changes)
        unknown = set(changes) - {"element_ids", "params", "post_processing"}
        if unknown:
            raise ValidationFailed(f"clone cannot change {sorted(unknown)}")
        element_ids = list(changes.get("element_ids", source.element_ids))
        params = dict(source.params)
        params.update(changes.get("params", {}))
        pdef = self.get_pipeline(source.pipeline, source.pipeline_version)
        schema = {p.name: p for p in pdef.param_schema}
        for key, value in params.items():
            if key in schema:
                check_param_value(schema[key], value)
        post = changes.get("post_processing", [s.to_doc() for s in source.post_processing])
        return self.create_analysis(
            pipeline=source.pipeline,
            version=source.pipeline_version,
            dataset=source.dataset,
            element_ids=element_ids,
            overrides=params,
            owner=actor,
            post_processing=post,
            reason=f"clone of analysis {src}",
            cloned_from=src,
        )

    def share_analysis(self, analysis: str, owner: ActorRef, grantee: ActorRef) -> None:
        view = self.get_analysis(analysis)
        if view.owner != owner.id:
            raise NotOwner(f"{owner.id} does not own analysis {analysis}")
        if grantee.id in view.shared_with:
            return  # idempotent: membership is a set
        self.store.record_event(
            analysis,
            PermissionGranted(grantee.id),
            owner,
            f"share with {grantee.id}",
        )

    # -- annotations ---------------------------------------------------------------

    def annotate(self, item: str, text: str, actor: ActorRef) -> int:
        if not text or not text.strip():
            raise ValidationFailed("annotation text must be non-empty")
        state = self.store.get_state(item)
        owning = self._owning_analysis(state.id, state.properties)
        if owning is not None:
            view = self.get_analysis(owning)
            if not view.visible_to(actor.id):
                raise NotVisible(f"item {item} is not visible to {actor.id}")
        return self.store.record_event(item, Annotated(text), actor, "annotate")

    @staticmethod
    def _owning_analysis(item_id: str, props: Mapping[str, Any]) -> str | None:
        """Analysis governing the item's visibility, or None for public items."""
        item_type = props.get("type")
        if item_type == "analysis":
            return item_id
        if item_type == "analysis_element":
            return props.get("parent")
        if item_type == "provenance_record":
            return props.get("analysis")
        return None

    def annotations_of(self, item: str) -> tuple[tuple[str, str, str], ...]:
        return self.store.get_state(item).annotations
