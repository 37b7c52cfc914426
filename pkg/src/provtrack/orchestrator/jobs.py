"""Job, result and provenance-record value types used by the scheduler."""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime
from typing import Any, Mapping

from ..kernel import ItemState


def parse_ts(value: str) -> datetime:
    return datetime.fromisoformat(value)


@dataclass(frozen=True)
class Job:
    """One fully resolved unit of work handed to an executor."""

    id: str
    analysis: str
    analysis_element: str | None  # None for post-processing jobs
    element: str | None
    step: str
    script_ref: str
    params: Mapping[str, Any]
    inputs: tuple[str, ...]
    env: Mapping[str, Any]
    attempt: int = 1
    fork_index: int = 0
    fork_width: int = 1
    timeout_s: float = 3600.0
    # position of the element within the analysis; stable across re-runs so
    # the simulated executor reproduces seeded outcomes (None = post step)
    element_index: int | None = None

    def __post_init__(self) -> None:
        if self.attempt < 1:
            raise ValueError("attempt is 1-based")
        for key, value in self.params.items():
            if value is None:
                raise ValueError(f"job {self.id}: unbound parameter {key!r}")


@dataclass(frozen=True)
class JobResult:
    job_id: str
    status: str  # Succeeded | Failed
    started_at: str
    ended_at: str
    resource: str
    outputs: tuple[str, ...] = ()
    error: str | None = None
    stdout_tail: str = ""
    stderr_tail: str = ""

    def __post_init__(self) -> None:
        if parse_ts(self.ended_at) < parse_ts(self.started_at):
            raise ValueError("ended_at precedes started_at")
        if self.status == "Failed" and not self.error:
            raise ValueError("failed results must carry an error")

    @property
    def duration_s(self) -> float:
        return (parse_ts(self.ended_at) - parse_ts(self.started_at)).total_seconds()


@dataclass(frozen=True)
class ProvenanceRecord:
    """Per-job-attempt execution facts, as stored on the record item."""

    id: str
    analysis: str
    analysis_element: str | None
    element: str | None
    step: str
    script_ref: str
    attempt: int
    fork_index: int
    fork_width: int
    input_files: tuple[str, ...]
    params: Mapping[str, Any]
    outputs: tuple[str, ...]
    started_at: str
    ended_at: str
    duration_s: float
    resource: str
    status: str
    error: str | None
    links: tuple[str, ...]
    pipeline: str
    pipeline_version: int
    consumed_element: bool = False

    @classmethod
    def from_props(cls, record_id: str, props: Mapping[str, Any]) -> "ProvenanceRecord":
        return cls(
            id=record_id,
            analysis=props["analysis"],
            analysis_element=props.get("analysis_element"),
            element=props.get("element"),
            step=props["step"],
            script_ref=props.get("script_ref", ""),
            attempt=int(props.get("attempt", 1)),
            fork_index=int(props.get("fork_index", 0)),
            fork_width=int(props.get("fork_width", 1)),
            input_files=tuple(props.get("inputs", {}).get("files", ())),
            params=dict(props.get("inputs", {}).get("params", {})),
            outputs=tuple(props.get("outputs", ())),
            started_at=props["started_at"],
            ended_at=props["ended_at"],
            duration_s=float(props["duration_s"]),
            resource=props.get("resource", ""),
            status=props["status"],
            error=props.get("error"),
            links=tuple(props.get("links", ())),
            pipeline=props["pipeline"],
            pipeline_version=int(props["pipeline_version"]),
            consumed_element=bool(props.get("consumed_element", False)),
        )

    @classmethod
    def from_state(cls, state: ItemState) -> "ProvenanceRecord":
        return cls.from_props(state.id, state.properties)


@dataclass(frozen=True)
class OutcomeRecord:
    analysis: str
    result_link: str
    produced_by: tuple[str, ...]
    registered_at: str

    def to_doc(self) -> dict[str, Any]:
        return {
            "result_link": self.result_link,
            "produced_by": list(self.produced_by),
            "registered_at": self.registered_at,
        }


@dataclass(frozen=True)
class Modification:
    """A mid-run intervention touching not-yet-dispatched work only."""

    kind: str  # set_param | skip_step | cancel_element | append_step
    step: str | None = None
    key: str | None = None
    value: Any = None
    element: str | None = None  # analysis-element item id; None = all elements
    step_doc: Mapping[str, Any] | None = None  # for append_step

    KINDS = ("set_param", "skip_step", "cancel_element", "append_step")
