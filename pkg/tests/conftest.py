"""Shared fixtures and independent oracles used across the test suite."""

from __future__ import annotations

import pytest

from provtrack import ActorRef, Config, Workspace


@pytest.fixture
def u1() -> ActorRef:
    return ActorRef("u1", "Alice")


@pytest.fixture
def u2() -> ActorRef:
    return ActorRef("u2", "Bob")


@pytest.fixture
def u3() -> ActorRef:
    return ActorRef("u3", "Carol")


def make_config(
    tmp_path,
    seed: int = 0,
    failure_rate: float = 0.0,
    max_attempts: int = 1,
    name: str = "events.log",
) -> Config:
    cfg = Config()
    cfg.log_path = str(tmp_path / name)
    cfg.exec_kind = "sim"
    cfg.sim_seed = seed
    cfg.sim_failure_rate = failure_rate
    cfg.max_attempts = max_attempts
    return cfg


@pytest.fixture
def ws(tmp_path) -> Workspace:
    workspace = Workspace(make_config(tmp_path))
    yield workspace
    workspace.close()


# --- document builders ------------------------------------------------------


def linear_pipeline(name: str, n_steps: int, fork: int | str | None = None) -> dict:
    """A chain step1 -> step2 -> ... ; optional fork width on every step."""
    steps = []
    for i in range(1, n_steps + 1):
        step: dict = {"name": f"step{i}", "script_ref": f"scripts/{name}_{i}.py"}
        if i > 1:
            step["depends_on"] = [f"step{i-1}"]
        if fork not in (None, 1):
            step["fork"] = fork
        steps.append(step)
    return {
        "name": name,
        "steps": steps,
        "default_env": {"threads": 1},
        "param_schema": [{"name": "iters", "type": "integer", "default": 5}],
    }


def elements_doc(n: int, prefix: str = "s") -> list[dict]:
    return [
        {
            "files": [f"lfn://data/{prefix}{i:03d}/scan.mnc"],
            "metadata": {"subject": f"{prefix}{i:03d}", "age": 60 + i, "visit": i % 3},
        }
        for i in range(n)
    ]


def build_analysis(ws: Workspace, actor: ActorRef, n_elements=2, n_steps=1, fork=None,
                   pipeline_name="CIVET", overrides=None, post=None):
    pid, version = ws.domain.register_pipeline(
        linear_pipeline(pipeline_name, n_steps, fork), actor, "register"
    )
    ds = ws.domain.register_dataset(
        f"{pipeline_name}-data", elements_doc(n_elements), actor, "register"
    )
    dataset = ws.domain.get_dataset(ds)
    aid = ws.domain.create_analysis(
        pid, version, ds, dataset.elements, overrides or {}, actor, post_processing=post
    )
    return pid, ds, aid


# --- independent oracles ------------------------------------------------------


def final_state_oracle(element_states: list[str], post_ok: bool | None = None) -> str:
    """Decision table: Completed iff all elements succeeded (and post-processing,
    when present, succeeded too); Failed iff none did; PartiallyFailed otherwise."""
    succeeded = sum(1 for s in element_states if s == "Succeeded")
    if succeeded == 0:
        return "Failed"
    if succeeded == len(element_states) and post_ok in (None, True):
        return "Completed"
    return "PartiallyFailed"


def scan_elements_oracle(ws: Workspace, dataset, constraints) -> list[str]:
    """Naive full-scan reference for find_data_elements over kernel state."""
    from provtrack.query.constraints import Constraint, matches

    parsed = [Constraint.from_doc(c) if isinstance(c, dict) else c for c in constraints]
    hits = []
    for item_id, state in ws.store.states().items():
        props = state.properties
        if props.get("type") != "data_element":
            continue
        if dataset is not None and props.get("dataset") != dataset:
            continue
        if all(matches(props.get("metadata", {}), c) for c in parsed):
            hits.append(item_id)
    return sorted(hits)


class CountingExecutor:
    """ExecutorPort wrapper instrumenting the dispatch boundary."""

    def __init__(self, inner):
        self.inner = inner
        self.submitted: list = []

    @property
    def capacity(self) -> int:
        return self.inner.capacity

    def submit(self, job):
        self.submitted.append(job)
        return self.inner.submit(job)

    def close(self) -> None:
        self.inner.close()

    def count_for(self, analysis: str) -> int:
        return sum(1 for job in self.submitted if job.analysis == analysis)


def job_record_count(ws: Workspace, analysis: str) -> int:
    """Provenance records for job attempts (the whole-workflow summary record
    is synthesized by the coordinator, not dispatched)."""
    from provtrack.base import WORKFLOW_STEP

    return sum(
        1
        for rid in ws.base.records_of_analysis.get(analysis, [])
        if ws.base.records[rid]["step"] != WORKFLOW_STEP
    )
