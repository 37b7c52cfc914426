"""Analysis execution: fan-out, dispatch loop, provenance capture,
post-processing and mid-run intervention.

The scheduler is a single logical coordinator per run: the thread driving
:meth:`AnalysisRun.pump` (or :meth:`wait`) is the only writer of kernel
events for that run, while job execution happens concurrently inside the
executor up to its capacity. Completions are absorbed in submission order
among the currently finished jobs, which keeps seeded simulated runs fully
reproducible.
"""

from __future__ import annotations

import copy
import logging
import threading
import time
import uuid
from concurrent.futures import FIRST_COMPLETED, wait as futures_wait
from datetime import datetime, timezone
from typing import Any

from ..base import WORKFLOW_STEP, AnalysisBase
from ..config import Config
from ..domain import Analysis, DomainService, PipelineDefinition
from ..domain.types import toposort_steps
from ..errors import (
    AlreadyRunning,
    ElementsStillRunning,
    InvalidModification,
    NotVisible,
    StepAlreadyDispatched,
    UnknownJob,
)
from ..kernel import (
    ActorRef,
    ItemKind,
    ItemStore,
    OutcomeAttached,
    PropertySet,
    StateTransition,
)
from .executors import Completion, ExecutorPort, build_executor
from .jobs import Job, JobResult, Modification, OutcomeRecord, parse_ts

logger = logging.getLogger(__name__)

SYSTEM_ACTOR = ActorRef("system", "system")

_PENDING = "pending"
_DISPATCHED = "dispatched"
_SUCCEEDED = "succeeded"
_FAILED = "failed"
_SKIPPED = "skipped"
_CANCELLED = "cancelled"

_SATISFIES = (_SUCCEEDED, _SKIPPED)


class _StepRun:
    """Mutable per-step execution state inside one element (or post phase)."""

    def __init__(self, doc: dict[str, Any]) -> None:
        self.doc = doc
        self.status = _SKIPPED if doc.get("skipped") else _PENDING
        self.width = 0
        self.slots: dict[int, str] = {}
        self.outputs_by_slot: dict[int, tuple[str, ...]] = {}
        self.success_records: dict[int, str] = {}
        self.failure_records: list[str] = []
        self.attempts: dict[int, int] = {}

    @property
    def name(self) -> str:
        return self.doc["name"]

    @property
    def depends_on(self) -> tuple[str, ...]:
        return tuple(self.doc.get("depends_on", ()))

    def outputs(self) -> tuple[str, ...]:
        flat: list[str] = []
        for index in sorted(self.outputs_by_slot):
            flat.extend(self.outputs_by_slot[index])
        return tuple(flat)

    def records(self) -> tuple[str, ...]:
        return tuple(self.success_records[i] for i in sorted(self.success_records))


class _ElementRun:
    def __init__(
        self,
        item_id: str,
        element_id: str,
        files: tuple[str, ...],
        instance: dict[str, Any],
        index: int = 0,
    ) -> None:
        self.item_id = item_id
        self.element_id = element_id
        self.files = files
        self.instance = instance
        self.index = index
        self.steps: dict[str, _StepRun] = {
            doc["name"]: _StepRun(doc) for doc in instance["steps"]
        }
        self.state = "Pending"
        self.cancelled = False
        self.error: str | None = None

    def terminal(self) -> bool:
        return self.state in ("Succeeded", "Failed")

    def sink_steps(self) -> list[str]:
        depended_on = {d for s in self.steps.values() for d in s.depends_on}
        return [n for n in self.steps if n not in depended_on]

    def ready_steps(self) -> list[str]:
        if self.cancelled or self.terminal():
            return []
        ready = []
        for step in self.steps.values():
            if step.status != _PENDING:
                continue
            if all(self.steps[d].status in _SATISFIES for d in step.depends_on):
                ready.append(step.name)
        return ready

    def blocked(self, name: str) -> bool:
        """A pending step is blocked when some dependency can never satisfy."""
        step = self.steps[name]
        for dep in step.depends_on:
            dep_status = self.steps[dep].status
            if dep_status in (_FAILED, _CANCELLED):
                return True
            if dep_status == _PENDING and self.blocked(dep):
                return True
        return False

    def settled(self, inflight_steps: set[str]) -> bool:
        """True when no further dispatch can happen for this element."""
        if self.cancelled:
            return not inflight_steps
        if inflight_steps:
            return False
        for step in self.steps.values():
            if step.status == _DISPATCHED:
                return False
            if step.status == _PENDING and not self.blocked(step.name):
                return False
        return True

    def succeeded(self) -> bool:
        return all(s.status in _SATISFIES for s in self.steps.values())

    def final_records(self) -> tuple[str, ...]:
        if self.state == "Succeeded":
            records: list[str] = []
            for name in self.sink_steps():
                records.extend(self.steps[name].records())
            return tuple(records)
        failures: list[str] = []
        for step in self.steps.values():
            failures.extend(step.failure_records)
        return tuple(failures)

    def final_outputs(self) -> tuple[str, ...]:
        outputs: list[str] = []
        for name in self.sink_steps():
            outputs.extend(self.steps[name].outputs())
        return tuple(outputs)


class AnalysisRun:
    """Coordinator for one running analysis."""

    def __init__(
        self,
        orchestrator: "Orchestrator",
        analysis: Analysis,
        pipeline: PipelineDefinition,
        actor: ActorRef,
        element_runs: list[_ElementRun],
    ) -> None:
        self._orch = orchestrator
        self.analysis = analysis
        self.pipeline = pipeline
        self.actor = actor
        self.elements: dict[str, _ElementRun] = {e.item_id: e for e in element_runs}
        self._lock = threading.RLock()
        self._inflight: dict[str, tuple[Job, Completion]] = {}
        self._order: list[str] = []
        self._dispatched_jobs: set[str] = set()
        self.final_state: str | None = None
        self.dispatch_count = 0

    # -- public surface ---------------------------------------------------------

    @property
    def id(self) -> str:
        return self.analysis.id

    def advance(self, element_item: str) -> list[Job]:
        """Dispatch every step of the element whose dependencies are satisfied
        and that has not been dispatched yet. Terminal elements yield []."""
        with self._lock:
            el = self.elements[element_item]
            jobs: list[Job] = []
            for name in el.ready_steps():
                jobs.extend(self._dispatch_step(el, name))
            return jobs

    def advance_all(self) -> list[Job]:
        with self._lock:
            jobs: list[Job] = []
            for item_id in self.elements:
                jobs.extend(self.advance(item_id))
            return jobs

    def pump(self, auto_advance: bool = True) -> bool:
        """Absorb at most one job completion; returns False once finalized.

        Blocking on executor completions happens outside the run lock so
        interventions can land while jobs are executing.
        """
        while True:
            with self._lock:
                if self.final_state is not None:
                    return False
                if auto_advance:
                    self.advance_all()
                if not self._inflight:
                    self._settle_elements()
                    if self._all_terminal():
                        self._finalize()
                        return False
                    if not auto_advance:
                        return False
                    raise RuntimeError("scheduler stuck: no inflight jobs and no ready steps")
                picked = self._pop_completed()
                if picked is not None:
                    job, result = picked
                    record_id = self._write_record(job, result)
                    self._absorb(job, result, record_id)
                    if auto_advance and job.analysis_element is not None:
                        self.advance(job.analysis_element)
                    self._settle_elements()
                    if not self._inflight and self._all_terminal() and auto_advance:
                        self._finalize()
                        return False
                    return True
                pending = [
                    completion.future
                    for _, completion in self._inflight.values()
                    if hasattr(completion, "future") and not completion.done()
                ]
            if pending:
                futures_wait(pending, return_when=FIRST_COMPLETED)
            else:
                time.sleep(0.005)  # executor without future-backed completions

    def wait(self) -> str:
        while self.pump():
            pass
        assert self.final_state is not None
        return self.final_state

    def record_job_provenance(self, job: Job, result: JobResult) -> str:
        """Persist the provenance record for a dispatched job attempt."""
        with self._lock:
            if job.id not in self._dispatched_jobs or result.job_id != job.id:
                raise UnknownJob(f"no dispatched job {result.job_id}")
            return self._write_record(job, result)

    # -- dispatch ----------------------------------------------------------------

    def _dispatch_step(self, el: _ElementRun, name: str) -> list[Job]:
        step = el.steps[name]
        inputs = self._resolve_inputs(el, step)
        width = self._fan_width(step, inputs)
        step.status = _DISPATCHED
        step.width = width
        jobs = []
        for index in range(width):
            job = self._build_job(el, step, inputs, index, width, attempt=1)
            step.slots[index] = "inflight"
            step.attempts[index] = 1
            jobs.append(job)
            self._submit(job)
        if el.state == "Pending":
            self._transition_element(el, "Dispatched")
        return jobs

    def _resolve_inputs(self, el: _ElementRun, step: _StepRun) -> tuple[str, ...]:
        bindings = list(step.doc.get("inputs", ()))
        if not bindings:
            bindings = ["element"] if not step.depends_on else [
                f"step:{d}" for d in step.depends_on
            ]
        resolved: list[str] = []
        for binding in bindings:
            if binding == "element":
                resolved.extend(el.files)
            elif binding.startswith("step:"):
                dep = el.steps.get(binding[5:])
                if dep is not None:
                    resolved.extend(dep.outputs())
        return tuple(resolved)

    @staticmethod
    def _fan_width(step: _StepRun, inputs: tuple[str, ...]) -> int:
        fork = step.doc.get("fork")
        if fork is None:
            return 1
        if fork == "per-input-list":
            return max(1, len(inputs))
        return int(fork)

    def _build_job(
        self,
        el: _ElementRun | None,
        step: _StepRun,
        inputs: tuple[str, ...],
        index: int,
        width: int,
        attempt: int,
    ) -> Job:
        params = dict(self.analysis.params)
        params.update(step.doc.get("param_overrides", {}))
        if width > 1:
            params["fork_index"] = index
            params["fork_width"] = width
            job_inputs = (
                (inputs[index],)
                if step.doc.get("fork") == "per-input-list" and index < len(inputs)
                else inputs
            )
        else:
            job_inputs = inputs
        env = dict(self.pipeline.default_env)
        if self.pipeline.common_dirs:
            env.setdefault("common_dirs", ":".join(self.pipeline.common_dirs))
        return Job(
            id=uuid.uuid4().hex[:16],
            analysis=self.analysis.id,
            analysis_element=el.item_id if el is not None else None,
            element=el.element_id if el is not None else None,
            step=step.name,
            script_ref=step.doc["script_ref"],
            params=params,
            inputs=job_inputs,
            env=env,
            attempt=attempt,
            fork_index=index,
            fork_width=width,
            timeout_s=self._orch.config.timeout_s,
            element_index=el.index if el is not None else None,
        )

    def _submit(self, job: Job) -> None:
        completion = self._orch.executor.submit(job)
        self._inflight[job.id] = (job, completion)
        self._order.append(job.id)
        self._dispatched_jobs.add(job.id)
        self.dispatch_count += 1

    def _pop_completed(self) -> tuple[Job, JobResult] | None:
        """First finished job in submission order, or None; never blocks."""
        for job_id in self._order:
            job, completion = self._inflight[job_id]
            if completion.done():
                self._order.remove(job_id)
                del self._inflight[job_id]
                return job, completion.result()
        return None

    # -- absorption ----------------------------------------------------------------

    def _absorb(self, job: Job, result: JobResult, record_id: str) -> None:
        el = self.elements[job.analysis_element] if job.analysis_element else None
        if el is None:
            return
        step = el.steps[job.step]
        if result.status == "Succeeded":
            step.slots[job.fork_index] = "succeeded"
            step.outputs_by_slot[job.fork_index] = result.outputs
            step.success_records[job.fork_index] = record_id
            if all(s == "succeeded" for s in step.slots.values()) and len(
                step.slots
            ) == step.width:
                step.status = _SUCCEEDED
            return
        step.failure_records.append(record_id)
        attempts = step.attempts[job.fork_index]
        if attempts < self._orch.config.max_attempts and not el.cancelled:
            retry = self._build_job(
                el,
                step,
                self._resolve_inputs(el, step),
                job.fork_index,
                step.width,
                attempt=attempts + 1,
            )
            step.attempts[job.fork_index] = attempts + 1
            step.slots[job.fork_index] = "inflight"
            self._submit(retry)
            return
        step.slots[job.fork_index] = "failed"
        step.status = _FAILED
        if el.error is None:
            el.error = result.error

    def _settle_elements(self) -> None:
        inflight_by_element: dict[str, set[str]] = {}
        for job, _ in self._inflight.values():
            if job.analysis_element:
                inflight_by_element.setdefault(job.analysis_element, set()).add(job.step)
        for el in self.elements.values():
            if el.terminal():
                continue
            if not el.settled(inflight_by_element.get(el.item_id, set())):
                continue
            if el.succeeded() and not el.cancelled:
                self._transition_element(el, "Succeeded")
            else:
                if el.error:
                    self._orch.store.record_event(
                        el.item_id,
                        PropertySet("error", el.error),
                        self.actor,
                        "record element error",
                    )
                self._transition_element(el, "Failed")

    def _transition_element(self, el: _ElementRun, to_state: str) -> None:
        self._orch.store.record_event(
            el.item_id,
            StateTransition(el.state, to_state),
            self.actor,
            f"element {to_state.lower()}",
        )
        el.state = to_state

    def _all_terminal(self) -> bool:
        return all(el.terminal() for el in self.elements.values())

    # -- provenance records -----------------------------------------------------------

    def _write_record(self, job: Job, result: JobResult) -> str:
        links = self._links_for(job)
        consumed = bool(
            job.element
            and job.analysis_element
            and set(self.elements[job.analysis_element].files) & set(job.inputs)
        )
        props = {
            "type": "provenance_record",
            "analysis": job.analysis,
            "analysis_element": job.analysis_element,
            "element": job.element,
            "step": job.step,
            "script_ref": job.script_ref,
            "attempt": job.attempt,
            "fork_index": job.fork_index,
            "fork_width": job.fork_width,
            "inputs": {"files": list(job.inputs), "params": dict(job.params)},
            "outputs": list(result.outputs),
            "started_at": result.started_at,
            "ended_at": result.ended_at,
            "duration_s": result.duration_s,
            "resource": result.resource,
            "status": result.status,
            "error": result.error,
            "links": list(links),
            "pipeline": self.analysis.pipeline,
            "pipeline_version": self.analysis.pipeline_version,
            "consumed_element": consumed,
        }
        return self._orch.create_record_item(props, self.actor)

    def _links_for(self, job: Job) -> tuple[str, ...]:
        if job.analysis_element is None:
            return ()  # post-processing links are supplied by the post runner
        el = self.elements[job.analysis_element]
        step = el.steps[job.step]
        links: list[str] = []
        for dep in step.depends_on:
            dep_step = el.steps.get(dep)
            if dep_step is not None:
                links.extend(dep_step.records())
        return tuple(links)

    # -- interventions ------------------------------------------------------------------

    def intervene(self, modification: Modification, actor: ActorRef, reason: str) -> None:
        with self._lock:
            if self.final_state is not None:
                raise InvalidModification("analysis is no longer running")
            if modification.kind not in Modification.KINDS:
                raise InvalidModification(f"unknown modification {modification.kind!r}")
            targets = self._targets(modification)
            handler = {
                "set_param": self._apply_set_param,
                "skip_step": self._apply_skip,
                "cancel_element": self._apply_cancel,
                "append_step": self._apply_append,
            }[modification.kind]
            handler(modification, targets, actor, reason)
            self._settle_elements()

    def _targets(self, modification: Modification) -> list[_ElementRun]:
        if modification.element is not None:
            el = self.elements.get(modification.element)
            if el is None:
                raise InvalidModification(f"no such analysis element {modification.element}")
            return [el]
        return list(self.elements.values())

    def _pending_step(self, el: _ElementRun, name: str | None) -> _StepRun:
        if not name or name not in el.steps:
            raise InvalidModification(f"no such step {name!r}")
        step = el.steps[name]
        if step.status in (_DISPATCHED, _SUCCEEDED, _FAILED):
            raise StepAlreadyDispatched(
                f"step {name!r} of element {el.item_id} was already dispatched"
            )
        if step.status in (_SKIPPED, _CANCELLED):
            raise InvalidModification(f"step {name!r} is no longer pending")
        return step

    def _apply_set_param(
        self, m: Modification, targets: list[_ElementRun], actor: ActorRef, reason: str
    ) -> None:
        if m.key is None:
            raise InvalidModification("set_param needs a key")
        steps = [(el, self._pending_step(el, m.step)) for el in targets]
        for el, step in steps:
            step.doc.setdefault("param_overrides", {})[m.key] = m.value
            self._persist_instance(el, actor, reason)

    def _apply_skip(
        self, m: Modification, targets: list[_ElementRun], actor: ActorRef, reason: str
    ) -> None:
        steps = [(el, self._pending_step(el, m.step)) for el in targets]
        for el, step in steps:
            step.doc["skipped"] = True
            step.status = _SKIPPED
            self._persist_instance(el, actor, reason)

    def _apply_cancel(
        self, m: Modification, targets: list[_ElementRun], actor: ActorRef, reason: str
    ) -> None:
        if m.element is None:
            raise InvalidModification("cancel_element needs an element")
        (el,) = targets
        if el.terminal():
            raise InvalidModification(f"element {el.item_id} is already terminal")
        el.cancelled = True
        el.error = f"cancelled by {actor.id}"
        for step in el.steps.values():
            if step.status == _PENDING:
                step.status = _CANCELLED
        self._orch.store.record_event(
            el.item_id, PropertySet("error", el.error), actor, reason
        )
        self._transition_element(el, "Failed")

    def _apply_append(
        self, m: Modification, targets: list[_ElementRun], actor: ActorRef, reason: str
    ) -> None:
        if not m.step_doc or not m.step_doc.get("name") or not m.step_doc.get("script_ref"):
            raise InvalidModification("append_step needs a step doc with name and script_ref")
        doc = dict(m.step_doc)
        doc.setdefault("param_overrides", {})
        for el in targets:
            if doc["name"] in el.steps:
                raise InvalidModification(f"step {doc['name']!r} already exists")
            for dep in doc.get("depends_on", ()):
                if dep not in el.steps:
                    raise InvalidModification(f"append_step depends on unknown step {dep!r}")
        for el in targets:
            el_doc = dict(doc)
            el.instance["steps"].append(el_doc)
            el.steps[doc["name"]] = _StepRun(el_doc)
            self._persist_instance(el, actor, reason)

    def _persist_instance(self, el: _ElementRun, actor: ActorRef, reason: str) -> None:
        self._orch.store.record_event(
            el.item_id,
            PropertySet("workflow_instance", copy.deepcopy(el.instance)),
            actor,
            reason,
        )

    # -- finalization -------------------------------------------------------------------

    def finalize(self) -> str:
        with self._lock:
            if self.final_state is not None:
                return self.final_state
            if not self._all_terminal() or self._inflight:
                raise ElementsStillRunning(
                    f"analysis {self.analysis.id} still has non-terminal elements"
                )
            self._finalize()
            assert self.final_state is not None
            return self.final_state

    def _finalize(self) -> None:
        succeeded = [el for el in self.elements.values() if el.state == "Succeeded"]
        failed = [el for el in self.elements.values() if el.state == "Failed"]
        post_records: tuple[str, ...] = ()
        post_ok = True
        if succeeded and self.analysis.post_processing:
            post_records, post_ok = self._run_post(succeeded)
        if not succeeded:
            final = "Failed"
        elif failed or not post_ok:
            final = "PartiallyFailed"
        else:
            final = "Completed"
        workflow_record = self._write_workflow_record(final)
        if succeeded:
            produced_by = post_records or tuple(
                rid for el in succeeded for rid in el.final_records()
            )
            outcome = OutcomeRecord(
                analysis=self.analysis.id,
                result_link=f"{self._orch.config.lfn_scheme}results/{self.analysis.id}",
                produced_by=produced_by,
                registered_at=datetime.now(timezone.utc).isoformat(),
            )
            self._orch.store.record_event(
                self.analysis.id,
                OutcomeAttached(outcome.to_doc()),
                self.actor,
                "register outcome",
            )
        self._orch.store.record_event(
            self.analysis.id,
            StateTransition("Running", final),
            self.actor,
            "finalize analysis",
        )
        self.final_state = final
        self._orch._run_finished(self.analysis.id)
        logger.info(
            "analysis %s finished %s (%d jobs, workflow record %s)",
            self.analysis.id,
            final,
            self.dispatch_count,
            workflow_record,
        )

    def _run_post(self, succeeded: list[_ElementRun]) -> tuple[tuple[str, ...], bool]:
        """Run post-processing steps over the successful elements' outputs."""
        docs = [dict(s.to_doc(), param_overrides={}) for s in self.analysis.post_processing]
        toposort_steps(docs)
        steps = {doc["name"]: _StepRun(doc) for doc in docs}
        element_outputs = tuple(o for el in succeeded for o in el.final_outputs())
        element_records = tuple(r for el in succeeded for r in el.final_records())
        inflight: dict[str, tuple[Job, Completion, _StepRun]] = {}
        order: list[str] = []
        all_ok = True
        while True:
            for step in steps.values():
                if step.status != _PENDING:
                    continue
                deps = [steps[d] for d in step.depends_on]
                if any(d.status == _FAILED for d in deps):
                    continue
                if not all(d.status == _SUCCEEDED for d in deps):
                    continue
                inputs = self._post_inputs(step, steps, element_outputs)
                width = self._fan_width(step, inputs)
                step.status = _DISPATCHED
                step.width = width
                for index in range(width):
                    job = self._build_job(None, step, inputs, index, width, attempt=1)
                    step.slots[index] = "inflight"
                    step.attempts[index] = 1
                    self._dispatched_jobs.add(job.id)
                    self.dispatch_count += 1
                    completion = self._orch.executor.submit(job)
                    inflight[job.id] = (job, completion, step)
                    order.append(job.id)
            if not inflight:
                break
            job_id = self._next_post_completion(inflight, order)
            job, completion, step = inflight.pop(job_id)
            order.remove(job_id)
            result = completion.result()
            links = element_records if not step.depends_on else tuple(
                rid for d in step.depends_on for rid in steps[d].records()
            )
            record_id = self._write_post_record(job, result, links)
            if result.status == "Succeeded":
                step.slots[job.fork_index] = "succeeded"
                step.outputs_by_slot[job.fork_index] = result.outputs
                step.success_records[job.fork_index] = record_id
                if len(step.slots) == step.width and all(
                    s == "succeeded" for s in step.slots.values()
                ):
                    step.status = _SUCCEEDED
            else:
                attempts = step.attempts[job.fork_index]
                if attempts < self._orch.config.max_attempts:
                    retry = self._build_job(
                        None,
                        step,
                        self._post_inputs(step, steps, element_outputs),
                        job.fork_index,
                        step.width,
                        attempt=attempts + 1,
                    )
                    step.attempts[job.fork_index] = attempts + 1
                    self._dispatched_jobs.add(retry.id)
                    self.dispatch_count += 1
                    completion = self._orch.executor.submit(retry)
                    inflight[retry.id] = (retry, completion, step)
                    order.append(retry.id)
                else:
                    step.slots[job.fork_index] = "failed"
                    step.status = _FAILED
                    all_ok = False
        if any(s.status == _PENDING for s in steps.values()):
            all_ok = False  # blocked by a failed dependency
        depended_on = {d for s in steps.values() for d in s.depends_on}
        sink_records = tuple(
            rid
            for name, step in steps.items()
            if name not in depended_on
            for rid in step.records()
        )
        return sink_records, all_ok

    @staticmethod
    def _post_inputs(
        step: _StepRun, steps: dict[str, _StepRun], element_outputs: tuple[str, ...]
    ) -> tuple[str, ...]:
        if step.depends_on:
            resolved: list[str] = []
            for dep in step.depends_on:
                resolved.extend(steps[dep].outputs())
            return tuple(resolved)
        return element_outputs

    @staticmethod
    def _next_post_completion(
        inflight: dict[str, tuple[Job, Completion, _StepRun]], order: list[str]
    ) -> str:
        while True:
            for job_id in order:
                if inflight[job_id][1].done():
                    return job_id
            futures = [
                c.future for _, c, _ in inflight.values() if hasattr(c, "future")
            ]
            if futures:
                futures_wait(futures, return_when=FIRST_COMPLETED)

    def _write_post_record(
        self, job: Job, result: JobResult, links: tuple[str, ...]
    ) -> str:
        props = {
            "type": "provenance_record",
            "analysis": job.analysis,
            "analysis_element": None,
            "element": None,
            "step": job.step,
            "script_ref": job.script_ref,
            "attempt": job.attempt,
            "fork_index": job.fork_index,
            "fork_width": job.fork_width,
            "inputs": {"files": list(job.inputs), "params": dict(job.params)},
            "outputs": list(result.outputs),
            "started_at": result.started_at,
            "ended_at": result.ended_at,
            "duration_s": result.duration_s,
            "resource": result.resource,
            "status": result.status,
            "error": result.error,
            "links": list(links),
            "pipeline": self.analysis.pipeline,
            "pipeline_version": self.analysis.pipeline_version,
            "consumed_element": False,
        }
        return self._orch.create_record_item(props, self.actor)

    def _write_workflow_record(self, final: str) -> str:
        record_ids = self._orch.base.records_of_analysis.get(self.analysis.id, [])
        starts, ends = [], []
        for rid in record_ids:
            record = self._orch.base.records[rid]
            starts.append(parse_ts(record["started_at"]))
            ends.append(parse_ts(record["ended_at"]))
        if starts:
            started, ended = min(starts), max(ends)
        else:
            # possible only when every step was skipped before dispatch
            entry = self._orch.base.analyses[self.analysis.id]
            started = ended = parse_ts(entry.started_at or datetime.now(timezone.utc).isoformat())
        links = tuple(rid for el in self.elements.values() for rid in el.final_records())
        failed_count = sum(1 for el in self.elements.values() if el.state == "Failed")
        error = None
        if final != "Completed":
            error = f"{failed_count} of {len(self.elements)} elements failed"
        props = {
            "type": "provenance_record",
            "analysis": self.analysis.id,
            "analysis_element": None,
            "element": None,
            "step": WORKFLOW_STEP,
            "script_ref": "",
            "attempt": 1,
            "fork_index": 0,
            "fork_width": 1,
            "inputs": {"files": [], "params": dict(self.analysis.params)},
            "outputs": [],
            "started_at": started.isoformat(),
            "ended_at": ended.isoformat(),
            "duration_s": (ended - started).total_seconds(),
            "resource": "coordinator",
            "status": "Succeeded" if final == "Completed" else "Failed",
            "error": error,
            "links": list(links),
            "pipeline": self.analysis.pipeline,
            "pipeline_version": self.analysis.pipeline_version,
            "consumed_element": False,
        }
        return self._orch.create_record_item(props, self.actor)


class Orchestrator:
    """Owns the executor port and the set of active runs."""

    def __init__(
        self,
        store: ItemStore,
        base: AnalysisBase,
        domain: DomainService,
        config: Config | None = None,
        executor: ExecutorPort | None = None,
    ) -> None:
        self.store = store
        self.base = base
        self.domain = domain
        self.config = config or Config()
        self.executor = executor or build_executor(self.config)
        self._runs: dict[str, AnalysisRun] = {}
        self._lock = threading.Lock()

    # -- system record description ------------------------------------------------

    def _record_description(self) -> str:
        existing = self.base.record_kinds.get("provenance-record")
        if existing is not None:
            return existing
        return self.store.create_item(
            ItemKind.DESCRIPTION,
            None,
            {"type": "record_kind", "name": "provenance-record"},
            SYSTEM_ACTOR,
            "register provenance record description",
        )

    def create_record_item(self, props: dict[str, Any], actor: ActorRef) -> str:
        return self.store.create_item(
            ItemKind.INSTANCE,
            self._record_description(),
            props,
            actor,
            f"record provenance for step {props['step']!r}",
        )

    # -- operations ------------------------------------------------------------------

    def run_analysis(
        self,
        analysis_id: str,
        actor: ActorRef,
        *,
        dispatch: bool = True,
        background: bool = False,
    ) -> AnalysisRun:
        analysis = self.domain.get_analysis(analysis_id)
        if not analysis.visible_to(actor.id):
            raise NotVisible(f"analysis {analysis_id} is not visible to {actor.id}")
        with self._lock:
            if analysis.state != "Defined" or analysis_id in self._runs:
                raise AlreadyRunning(
                    f"analysis {analysis_id} is {analysis.state}, expected Defined"
                )
            pipeline = self.domain.get_pipeline(analysis.pipeline, analysis.pipeline_version)
            self._record_description()
            element_runs = self._instantiate_elements(analysis, pipeline, actor)
            run = AnalysisRun(self, analysis, pipeline, actor, element_runs)
            self._runs[analysis_id] = run
        if dispatch:
            run.advance_all()
        if background:
            threading.Thread(target=run.wait, daemon=True, name=f"run-{analysis_id[:8]}").start()
        return run

    def _instantiate_elements(
        self, analysis: Analysis, pipeline: PipelineDefinition, actor: ActorRef
    ) -> list[_ElementRun]:
        txn = self.store.transaction()
        runs = []
        for index, element_id in enumerate(analysis.element_ids):
            element = self.domain.get_element(element_id)
            instance = {
                "steps": [dict(s.to_doc(), param_overrides={}) for s in pipeline.steps],
                "env": dict(pipeline.default_env),
            }
            item_id = txn.create_item(
                ItemKind.INSTANCE,
                analysis.pipeline,
                {
                    "type": "analysis_element",
                    "parent": analysis.id,
                    "element": element_id,
                    "workflow_instance": instance,
                },
                actor,
                "instantiate analysis element",
                state="Pending",
            )
            # deep copy: the run mutates its instance, the stored one only
            # changes through recorded intervention events
            runs.append(
                _ElementRun(
                    item_id,
                    element_id,
                    tuple(element.files),
                    copy.deepcopy(instance),
                    index=index,
                )
            )
        txn.record_event(
            analysis.id,
            StateTransition("Defined", "Running"),
            actor,
            "run analysis",
        )
        txn.commit()
        return runs

    def active_run(self, analysis_id: str) -> AnalysisRun | None:
        return self._runs.get(analysis_id)

    def intervene(
        self,
        analysis_id: str,
        modification: Modification,
        actor: ActorRef,
        reason: str,
    ) -> None:
        analysis = self.domain.get_analysis(analysis_id)
        if not analysis.visible_to(actor.id):
            raise NotVisible(f"analysis {analysis_id} is not visible to {actor.id}")
        run = self._runs.get(analysis_id)
        if run is None or self.base.analyses[analysis_id].state != "Running":
            raise InvalidModification(f"analysis {analysis_id} is not running")
        run.intervene(modification, actor, reason)

    def finalize_analysis(self, analysis_id: str) -> str:
        run = self._runs.get(analysis_id)
        if run is not None:
            return run.finalize()
        entry = self.base.analyses.get(analysis_id)
        if entry is not None and entry.state in ("Completed", "PartiallyFailed", "Failed"):
            return entry.state
        raise ElementsStillRunning(f"analysis {analysis_id} has no completed run to finalize")

    def record_job_provenance(self, job: Job, result: JobResult) -> str:
        run = self._runs.get(job.analysis)
        if run is None:
            raise UnknownJob(f"no active run for analysis {job.analysis}")
        return run.record_job_provenance(job, result)

    def _run_finished(self, analysis_id: str) -> None:
        with self._lock:
            self._runs.pop(analysis_id, None)

    def close(self) -> None:
        self.executor.close()
