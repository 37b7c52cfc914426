"""Typed views over kernel items: pipelines, datasets, analyses.

These are read-side values parsed out of :class:`ItemState`; the kernel
event log remains the system of record.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping

from ..errors import ValidationFailed
from ..kernel import ItemState

PARAM_TYPES = ("text", "integer", "real", "boolean", "file")

ANALYSIS_STATES = ("Defined", "Running", "Completed", "PartiallyFailed", "Failed")
ELEMENT_STATES = ("Pending", "Dispatched", "Succeeded", "Failed")


@dataclass(frozen=True)
class ParamSpec:
    name: str
    type: str = "text"
    default: Any = None
    required: bool = False

    def to_doc(self) -> dict[str, Any]:
        doc: dict[str, Any] = {"name": self.name, "type": self.type, "required": self.required}
        if self.default is not None:
            doc["default"] = self.default
        return doc


@dataclass(frozen=True)
class StepSpec:
    name: str
    script_ref: str
    inputs: tuple[str, ...] = ()  # bindings: "element" or "step:<name>"
    fork: int | str | None = None  # fan width or "per-input-list"
    depends_on: tuple[str, ...] = ()

    def to_doc(self) -> dict[str, Any]:
        doc: dict[str, Any] = {"name": self.name, "script_ref": self.script_ref}
        if self.inputs:
            doc["inputs"] = list(self.inputs)
        if self.fork is not None:
            doc["fork"] = self.fork
        if self.depends_on:
            doc["depends_on"] = list(self.depends_on)
        return doc

    @classmethod
    def from_doc(cls, doc: Mapping[str, Any]) -> "StepSpec":
        return cls(
            name=doc["name"],
            script_ref=doc["script_ref"],
            inputs=tuple(doc.get("inputs", ())),
            fork=doc.get("fork"),
            depends_on=tuple(doc.get("depends_on", ())),
        )


@dataclass(frozen=True)
class PipelineDefinition:
    id: str
    name: str
    version: int
    steps: tuple[StepSpec, ...]
    default_env: Mapping[str, Any] = field(default_factory=dict)
    common_dirs: tuple[str, ...] = ()
    param_schema: tuple[ParamSpec, ...] = ()
    step_items: Mapping[str, str] = field(default_factory=dict)

    def definition_doc(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "steps": [s.to_doc() for s in self.steps],
            "default_env": dict(self.default_env),
            "common_dirs": list(self.common_dirs),
            "param_schema": [p.to_doc() for p in self.param_schema],
        }

    @classmethod
    def from_state(cls, state: ItemState, version: int | None = None) -> "PipelineDefinition":
        v = state.current_version if version is None else version
        doc = state.versions[v - 1]["definition"]
        return cls(
            id=state.id,
            name=doc["name"],
            version=v,
            steps=tuple(StepSpec.from_doc(s) for s in doc["steps"]),
            default_env=dict(doc.get("default_env", {})),
            common_dirs=tuple(doc.get("common_dirs", ())),
            param_schema=tuple(
                ParamSpec(
                    name=p["name"],
                    type=p.get("type", "text"),
                    default=p.get("default"),
                    required=bool(p.get("required", False)),
                )
                for p in doc.get("param_schema", ())
            ),
            # step items accumulate on current properties across versions
            step_items=dict(state.properties.get("step_items", {})),
        )


@dataclass(frozen=True)
class DataElement:
    id: str
    dataset: str
    files: tuple[str, ...]
    metadata: Mapping[str, Any] = field(default_factory=dict)

    @classmethod
    def from_state(cls, state: ItemState) -> "DataElement":
        props = state.properties
        return cls(
            id=state.id,
            dataset=props["dataset"],
            files=tuple(props["files"]),
            metadata=dict(props.get("metadata", {})),
        )


@dataclass(frozen=True)
class Dataset:
    id: str
    name: str
    schema_note: str
    elements: tuple[str, ...]

    @classmethod
    def from_state(cls, state: ItemState) -> "Dataset":
        props = state.properties
        return cls(
            id=state.id,
            name=props["name"],
            schema_note=props.get("schema_note", ""),
            elements=tuple(props.get("elements", ())),
        )


@dataclass(frozen=True)
class Analysis:
    id: str
    owner: str
    pipeline: str
    pipeline_version: int
    dataset: str
    element_ids: tuple[str, ...]
    params: Mapping[str, Any]
    post_processing: tuple[StepSpec, ...]
    state: str
    shared_with: frozenset[str]
    annotations: tuple[tuple[str, str, str], ...]
    cloned_from: str | None = None
    created_at: str = ""

    def visible_to(self, actor_id: str) -> bool:
        return actor_id == self.owner or actor_id in self.shared_with

    @classmethod
    def from_state(cls, state: ItemState) -> "Analysis":
        props = state.properties
        return cls(
            id=state.id,
            owner=props["owner"],
            pipeline=props["pipeline"],
            pipeline_version=int(props["pipeline_version"]),
            dataset=props["dataset"],
            element_ids=tuple(props["element_ids"]),
            params=dict(props.get("params", {})),
            post_processing=tuple(
                StepSpec.from_doc(s) for s in props.get("post_processing", ())
            ),
            state=state.lifecycle or "Defined",
            shared_with=state.shared_with,
            annotations=state.annotations,
            cloned_from=props.get("cloned_from"),
            created_at=state.created_at,
        )


@dataclass(frozen=True)
class AnalysisElement:
    id: str
    parent: str
    element: str
    workflow_instance: Mapping[str, Any]
    state: str
    error: str | None = None

    @classmethod
    def from_state(cls, state: ItemState) -> "AnalysisElement":
        props = state.properties
        return cls(
            id=state.id,
            parent=props["parent"],
            element=props["element"],
            workflow_instance=props["workflow_instance"],
            state=state.lifecycle or "Pending",
            error=props.get("error"),
        )


# --- validation ---------------------------------------------------------------


def toposort_steps(steps: list[Mapping[str, Any]]) -> list[str]:
    """Kahn topological order of step names; raises on cycles/bad refs."""
    names = [s["name"] for s in steps]
    name_set = set(names)
    if len(name_set) != len(names):
        raise ValidationFailed("duplicate step names")
    indegree = {n: 0 for n in names}
    dependents: dict[str, list[str]] = {n: [] for n in names}
    for step in steps:
        for dep in step.get("depends_on", ()):
            if dep not in name_set:
                raise ValidationFailed(f"step {step['name']!r} depends on unknown step {dep!r}")
            if dep == step["name"]:
                raise ValidationFailed(f"step {step['name']!r} depends on itself")
            indegree[step["name"]] += 1
            dependents[dep].append(step["name"])
    ready = [n for n in names if indegree[n] == 0]
    order: list[str] = []
    while ready:
        name = ready.pop(0)
        order.append(name)
        for child in dependents[name]:
            indegree[child] -= 1
            if indegree[child] == 0:
                ready.append(child)
    if len(order) != len(names):
        raise ValidationFailed("step dependency graph has a cycle")
    return order


def validate_pipeline_doc(doc: Mapping[str, Any]) -> dict[str, Any]:
    """Validate and normalize a pipeline definition document."""
    name = doc.get("name")
    if not name or not isinstance(name, str):
        raise ValidationFailed("pipeline needs a non-empty name")
    steps = list(doc.get("steps", ()))
    if not steps:
        raise ValidationFailed("pipeline needs at least one step")
    normalized_steps = []
    for raw in steps:
        if not raw.get("name"):
            raise ValidationFailed("every step needs a name")
        if not raw.get("script_ref"):
            raise ValidationFailed(f"step {raw.get('name')!r} needs a script_ref")
        fork = raw.get("fork")
        if fork is not None:
            if isinstance(fork, bool) or not (
                (isinstance(fork, int) and fork >= 1) or fork == "per-input-list"
            ):
                raise ValidationFailed(
                    f"step {raw['name']!r}: fork must be a positive integer or 'per-input-list'"
                )
        for binding in raw.get("inputs", ()):
            if binding != "element" and not str(binding).startswith("step:"):
                raise ValidationFailed(
                    f"step {raw['name']!r}: input binding {binding!r} must be"
                    " 'element' or 'step:<name>'"
                )
        normalized_steps.append(StepSpec.from_doc(raw).to_doc())
    toposort_steps(normalized_steps)
    step_names = {s["name"] for s in normalized_steps}
    for step in normalized_steps:
        for binding in step.get("inputs", ()):
            if binding.startswith("step:") and binding[5:] not in step_names:
                raise ValidationFailed(f"input binding {binding!r} references unknown step")
    schema = []
    seen_params: set[str] = set()
    for raw in doc.get("param_schema", ()):
        pname = raw.get("name")
        if not pname:
            raise ValidationFailed("param spec needs a name")
        if pname in seen_params:
            raise ValidationFailed(f"duplicate param {pname!r}")
        seen_params.add(pname)
        ptype = raw.get("type", "text")
        if ptype not in PARAM_TYPES:
            raise ValidationFailed(f"param {pname!r}: unknown type {ptype!r}")
        spec = ParamSpec(
            name=pname,
            type=ptype,
            default=raw.get("default"),
            required=bool(raw.get("required", False)),
        )
        if spec.default is not None:
            check_param_value(spec, spec.default)
        schema.append(spec.to_doc())
    return {
        "name": name,
        "steps": normalized_steps,
        "default_env": dict(doc.get("default_env", {})),
        "common_dirs": list(doc.get("common_dirs", ())),
        "param_schema": schema,
    }


def check_param_value(spec: ParamSpec, value: Any) -> None:
    ok = {
        "text": lambda v: isinstance(v, str),
        "file": lambda v: isinstance(v, str),
        "integer": lambda v: isinstance(v, int) and not isinstance(v, bool),
        "real": lambda v: isinstance(v, (int, float)) and not isinstance(v, bool),
        "boolean": lambda v: isinstance(v, bool),
    }[spec.type](value)
    if not ok:
        raise ValidationFailed(
            f"param {spec.name!r}: value {value!r} does not match type {spec.type!r}"
        )


def resolve_params(
    schema: tuple[ParamSpec, ...], overrides: Mapping[str, Any]
) -> dict[str, Any]:
    """Merge overrides over schema defaults; overrides win, extras append."""
    resolved: dict[str, Any] = {}
    for spec in schema:
        if spec.name in overrides:
            check_param_value(spec, overrides[spec.name])
            resolved[spec.name] = overrides[spec.name]
        elif spec.default is not None:
            resolved[spec.name] = spec.default
        elif spec.required:
            from ..errors import MissingRequiredParam

            raise MissingRequiredParam(f"required param {spec.name!r} not supplied")
    for key, value in overrides.items():
        if key not in resolved:
            resolved[key] = value
    return resolved
