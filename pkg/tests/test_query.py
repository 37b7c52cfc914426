"""Query service: constraints, retrieval, lineage, usage — with scan oracles."""

from __future__ import annotations

import hashlib
import json

import pytest

from provtrack import Workspace
from provtrack.base import WORKFLOW_STEP, outcome_node, pipeline_version_node
from provtrack.errors import (
    MalformedConstraint,
    NotVisible,
    UnknownNode,
    UnknownTarget,
    UnknownVersion,
)
from provtrack.query import Constraint
from tests.conftest import (
    build_analysis,
    elements_doc,
    linear_pipeline,
    make_config,
    scan_elements_oracle,
)


def test_empty_constraints_return_all(ws, u1):
    ds = ws.domain.register_dataset("d", elements_doc(5), u1, "r")
    hits = ws.queries.find_data_elements(ds, [])
    assert len(hits) == 5
    assert [h.id for h in hits] == sorted(h.id for h in hits)


def test_constraints_match_scan_oracle(ws, u1):
    ds = ws.domain.register_dataset("d", elements_doc(10), u1, "r")
    other = ws.domain.register_dataset("o", elements_doc(4, prefix="t"), u1, "r")
    cases = [
        [{"attribute": "age", "op": "gte", "value": 70}],
        [{"attribute": "age", "op": "lt", "value": 63}],
        [{"attribute": "visit", "op": "eq", "value": 1}],
        [{"attribute": "subject", "op": "contains", "value": "00"}],
        [
            {"attribute": "age", "op": "gt", "value": 61},
            {"attribute": "visit", "op": "neq", "value": 2},
        ],
        [{"attribute": "missing", "op": "eq", "value": 1}],
    ]
    for constraints in cases:
        for dataset in (ds, other, None):
            got = [h.id for h in ws.queries.find_data_elements(dataset, constraints)]
            assert got == scan_elements_oracle(ws, dataset, constraints)


def test_type_mismatch_is_malformed(ws, u1):
    ds = ws.domain.register_dataset("d", elements_doc(2), u1, "r")
    with pytest.raises(MalformedConstraint):
        ws.queries.find_data_elements(
            ds, [{"attribute": "subject", "op": "lt", "value": 5}]
        )
    with pytest.raises(MalformedConstraint):
        Constraint("age", "between", 5)
    with pytest.raises(MalformedConstraint):
        Constraint("", "eq", 5)


def test_list_analyses_visibility_and_filters(ws, u1, u2, u3):
    p1, ds, a1 = build_analysis(ws, u1, pipeline_name="P1")
    eids = list(ws.domain.get_dataset(ds).elements)
    a2 = ws.domain.create_analysis(p1, 1, ds, eids, {}, u2)
    p2, _ = ws.domain.register_pipeline(linear_pipeline("P2", 1), u1, "r")
    a3 = ws.domain.create_analysis(p2, 1, ds, eids, {}, u1)
    ws.orchestrator.run_analysis(a3, u1).wait()
    ws.domain.share_analysis(a1, u1, u3)

    assert {r.id for r in ws.queries.list_analyses(u1)} == {a1, a3}
    assert {r.id for r in ws.queries.list_analyses(u2)} == {a2}
    assert {r.id for r in ws.queries.list_analyses(u3)} == {a1}

    # conjunctive filters against the full enumeration
    completed = ws.queries.list_analyses(u1, state="Completed")
    assert [r.id for r in completed] == [
        r.id for r in ws.queries.list_analyses(u1) if r.state == "Completed"
    ]
    assert {r.id for r in ws.queries.list_analyses(u1, pipeline=p2)} == {a3}
    assert ws.queries.list_analyses(u1, owner="u2") == []


def test_get_workflow_version_permanence_and_purity(ws, u1):
    doc = linear_pipeline("P", 2)
    pid, _ = ws.domain.register_pipeline(doc, u1, "r")
    v1 = ws.queries.get_workflow_version(pid, 1)
    ws.domain.register_pipeline(dict(doc, default_env={"threads": 64}), u1, "v2")
    assert ws.queries.get_workflow_version(pid, 1) == v1

    digests = {
        hashlib.sha256(
            json.dumps(ws.queries.get_workflow_version(pid, 1), sort_keys=True).encode()
        ).hexdigest()
        for _ in range(100)
    }
    assert len(digests) == 1

    with pytest.raises(UnknownVersion):
        ws.queries.get_workflow_version(pid, 0)
    with pytest.raises(UnknownVersion):
        ws.queries.get_workflow_version(pid, 3)


def test_job_results_counts_and_visibility(ws, u1, u2):
    _, _, aid = build_analysis(ws, u1, n_elements=3, n_steps=2)
    ws.orchestrator.run_analysis(aid, u1).wait()
    records = ws.queries.job_results(aid, u1)
    assert len(records) == 3 * 2 + 1  # N*P jobs plus the workflow record
    assert sum(1 for r in records if r.step == WORKFLOW_STEP) == 1
    with pytest.raises(NotVisible):
        ws.queries.job_results(aid, u2)


def test_job_results_include_failures(tmp_path, u1):
    ws = Workspace(make_config(tmp_path, seed=1, failure_rate=1.0))
    _, _, aid = build_analysis(ws, u1, n_elements=1, n_steps=1)
    ws.orchestrator.run_analysis(aid, u1).wait()
    failed = [r for r in ws.queries.job_results(aid, u1) if r.status == "Failed"]
    assert failed and all(r.error for r in failed)
    ws.close()


def test_lineage_minimal_chain(ws, u1):
    """1 element, 2 steps: origins of the outcome are the two step records,
    the data element and the pipeline-version node."""
    pid, ds, aid = build_analysis(ws, u1, n_elements=1, n_steps=2)
    ws.orchestrator.run_analysis(aid, u1).wait()
    element_id = ws.domain.get_dataset(ds).elements[0]
    graph = ws.queries.lineage(outcome_node(aid), "origins")
    kinds = sorted(kind for kind, _ in graph.nodes)
    assert kinds == [
        "data-element",
        "job-record",
        "job-record",
        "outcome",
        "pipeline-version",
    ]
    ids = graph.node_ids()
    assert element_id in ids
    assert pipeline_version_node(pid, 1) in ids
    assert aid not in ids  # the analysis container is not an origin
    relations = {rel for _, _, rel in graph.edges}
    assert relations == {"produced-by", "derived-from", "instantiated-from", "input-of"}


def test_lineage_descendants_reach_k_analyses(ws, u1):
    pid, ds, a1 = build_analysis(ws, u1, n_elements=2)
    eids = list(ws.domain.get_dataset(ds).elements)
    a2 = ws.domain.create_analysis(pid, 1, ds, eids[:1], {}, u1)
    a3 = ws.domain.create_analysis(pid, 1, ds, eids, {}, u1)
    for aid in (a1, a2, a3):
        ws.orchestrator.run_analysis(aid, u1).wait()
    graph = ws.queries.lineage(eids[0], "descendants")
    reachable_analyses = {i for k, i in graph.nodes if k == "analysis"}
    assert reachable_analyses == {a1, a2, a3}

    # reachability oracle: naive BFS over the full edge set
    edges = ws.base.edges()
    from provtrack.base import DERIVED_SIDE

    frontier, seen = {eids[0]}, {eids[0]}
    while frontier:
        nxt = set()
        for frm, to, rel in edges:
            a, b = (frm, to) if DERIVED_SIDE[rel] == "to" else (to, frm)
            if a in frontier and b not in seen:
                nxt.add(b)
                seen.add(b)
        frontier = nxt
    assert graph.node_ids() == seen


def test_lineage_depth_zero_and_unknown(ws, u1):
    _, ds, _ = build_analysis(ws, u1, n_elements=1)
    element_id = ws.domain.get_dataset(ds).elements[0]
    graph = ws.queries.lineage(element_id, "origins", depth=0)
    assert graph.nodes == (("data-element", element_id),)
    assert graph.edges == ()
    with pytest.raises(UnknownNode):
        ws.queries.lineage("nope", "origins")


def test_lineage_acyclic(ws, u1):
    _, _, a1 = build_analysis(ws, u1, n_elements=2, n_steps=3)
    ws.orchestrator.run_analysis(a1, u1).wait()
    clone = ws.domain.clone_analysis(a1, {}, u1)
    ws.orchestrator.run_analysis(clone, u1).wait()
    edges = ws.base.edges()
    adjacency: dict[str, set[str]] = {}
    for frm, to, _ in edges:
        adjacency.setdefault(frm, set()).add(to)
    seen: dict[str, int] = {}

    def dfs(node: str) -> None:
        seen[node] = 1
        for nxt in adjacency.get(node, ()):
            state = seen.get(nxt)
            assert state != 1, "cycle in lineage edges"
            if state is None:
                dfs(nxt)
        seen[node] = 2

    for node in list(adjacency):
        if node not in seen:
            dfs(node)


def test_usage_reports(ws, u1, u2, u3):
    pid, ds, a1 = build_analysis(ws, u1, pipeline_name="P1")
    eids = list(ws.domain.get_dataset(ds).elements)
    a2 = ws.domain.create_analysis(pid, 1, ds, eids, {}, u1)
    a3 = ws.domain.create_analysis(pid, 1, ds, eids[:1], {}, u2)
    ws.domain.share_analysis(a3, u2, u1)
    ws.orchestrator.run_analysis(a1, u1).wait()

    # pipeline used by 3 analyses of 2 users
    rows = ws.queries.usage(pid, u1, version=1)
    assert [r.analysis for r in rows] == sorted([a1, a2, a3])
    assert {r.owner for r in rows} == {"u1", "u2"}
    # run timestamps present for the executed one
    assert next(r for r in rows if r.analysis == a1).finished_at

    # version 2 is unused -> empty report
    ws.domain.register_pipeline(linear_pipeline("P1", 1), u1, "v2")
    assert ws.queries.usage(pid, u1, version=2) == []

    # dataset and element targets
    assert {r.analysis for r in ws.queries.usage(ds, u1)} == {a1, a2, a3}
    assert {r.analysis for r in ws.queries.usage(eids[1], u1)} == {a1, a2}

    # visibility: u3 sees nothing, u2 sees only its own
    assert ws.queries.usage(pid, u3) == []
    assert {r.analysis for r in ws.queries.usage(pid, u2)} == {a3}

    with pytest.raises(UnknownTarget):
        ws.queries.usage("nope", u1)


def test_every_query_id_resolves(ws, u1):
    """Query/ledger consistency: ids returned by queries resolve in the kernel."""
    _, ds, aid = build_analysis(ws, u1, n_elements=2, n_steps=2)
    ws.orchestrator.run_analysis(aid, u1).wait()
    for hit in ws.queries.find_data_elements(ds, []):
        assert ws.store.get_state(hit.id)
    for summary in ws.queries.list_analyses(u1):
        assert ws.store.get_state(summary.id)
    for record in ws.queries.job_results(aid, u1):
        assert ws.store.get_state(record.id)
        for link in record.links:
            assert ws.store.get_state(link)
