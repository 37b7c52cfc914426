"""PROV export: mapping, determinism, round-trips, structural validation."""

from __future__ import annotations

import json

import pytest

from provtrack import Workspace
from provtrack.base import WORKFLOW_STEP
from provtrack.errors import NotTerminal, NotVisible, ProvParseError
from provtrack.prov import PROV_JSON, PROV_N, parse, serialize, validate_prov
from provtrack.prov.document import ProvActivity, ProvDocument, Relation
from provtrack.prov.export import file_entity_suffix
from tests.conftest import build_analysis, make_config


@pytest.fixture
def minimal(ws, u1):
    """1 element, 1 step, success; annotated once."""
    pid, ds, aid = build_analysis(ws, u1, n_elements=1, n_steps=1)
    ws.orchestrator.run_analysis(aid, u1).wait()
    ws.domain.annotate(aid, "baseline run", u1)
    return ws, pid, ds, aid


def test_minimal_fixture_matches_hand_built_document(minimal, u1):
    ws, pid, ds, aid = minimal
    element_id = ws.domain.get_dataset(ds).elements[0]
    records = ws.queries.job_results(aid, u1)
    job = next(r for r in records if r.step == "step1")
    workflow = next(r for r in records if r.step == WORKFLOW_STEP)
    outcome = ws.base.outcomes[aid]
    (out_locator,) = job.outputs
    note = ws.domain.get_analysis(aid).annotations[0]

    job_act = f"pt:job-{job.id}"
    wf_act = f"pt:workflow-{workflow.id}"
    element_ent = f"pt:data-element-{element_id}"
    file_ent = f"pt:file-{file_entity_suffix(out_locator)}"
    outcome_ent = f"pt:outcome-{aid}"
    agent = "pt:user-u1"

    expected = {
        "prefix": {"pt": "https://provtrack.example.org/ns#"},
        "agent": {agent: {"prov:type": "prov:Person"}},
        "entity": {
            element_ent: {
                "age": "60",
                "files": "lfn://data/s000/scan.mnc",
                "subject": "s000",
                "visit": "0",
            },
            file_ent: {"locator": out_locator},
            outcome_ent: {
                "result_link": f"lfn://results/{aid}",
                "registered_at": outcome["registered_at"],
            },
        },
        "activity": {
            job_act: {
                "prov:startTime": job.started_at,
                "prov:endTime": job.ended_at,
                "step": "step1",
                "status": "Succeeded",
                "resource": job.resource,
                "attempt": "1",
            },
            wf_act: {
                "prov:startTime": workflow.started_at,
                "prov:endTime": workflow.ended_at,
                "step": "<workflow>",
                "status": "Succeeded",
                "resource": "coordinator",
                "attempt": "1",
                "note:1": f"{note[0]} {note[1]}: {note[2]}",
            },
        },
        "used": {"_:u1": {"prov:activity": job_act, "prov:entity": element_ent}},
        "wasGeneratedBy": {
            f"_:gen{i + 1}": {"prov:entity": entity, "prov:activity": activity}
            for i, (entity, activity) in enumerate(
                sorted([(file_ent, job_act), (outcome_ent, wf_act)])
            )
        },
        "wasAssociatedWith": {
            f"_:assoc{i + 1}": {"prov:activity": activity, "prov:agent": agent}
            for i, activity in enumerate(sorted([job_act, wf_act]))
        },
        "wasDerivedFrom": {
            "_:der1": {"prov:generatedEntity": file_ent, "prov:usedEntity": element_ent}
        },
        "wasAttributedTo": {"_:attr1": {"prov:entity": outcome_ent, "prov:agent": agent}},
    }
    expected_text = json.dumps(expected, sort_keys=True, indent=2, ensure_ascii=False) + "\n"

    assert ws.prov.export(aid, PROV_JSON, u1) == expected_text


def test_minimal_fixture_prov_n_statements(minimal, u1):
    ws, _, _, aid = minimal
    text = ws.prov.export(aid, PROV_N, u1)
    lines = text.splitlines()
    assert lines[0] == "document"
    assert lines[-1] == "endDocument"
    counts = {}
    for line in lines[1:-1]:
        kind = line.strip().split("(")[0].split()[0]
        counts[kind] = counts.get(kind, 0) + 1
    assert counts == {
        "prefix": 1,
        "agent": 1,
        "entity": 3,
        "activity": 2,
        "used": 1,
        "wasGeneratedBy": 2,
        "wasAssociatedWith": 2,
        "wasDerivedFrom": 1,
        "wasAttributedTo": 1,
    }


def test_export_deterministic(minimal, u1):
    ws, _, _, aid = minimal
    assert ws.prov.export(aid, PROV_JSON, u1) == ws.prov.export(aid, PROV_JSON, u1)
    assert ws.prov.export(aid, PROV_N, u1) == ws.prov.export(aid, PROV_N, u1)


def test_round_trip_both_formats(minimal, u1):
    ws, _, _, aid = minimal
    document = ws.prov.build_document(aid, u1)
    for fmt in (PROV_JSON, PROV_N):
        text = serialize(document, fmt)
        assert parse(text, fmt) == document
        assert parse(text) == document  # auto-detection


def test_exports_validate_cleanly(minimal, u1):
    ws, _, _, aid = minimal
    for fmt in (PROV_JSON, PROV_N):
        assert validate_prov(ws.prov.export(aid, fmt, u1)) == []


def test_zero_successes_has_activities_but_no_outcome_generation(tmp_path, u1):
    ws = Workspace(make_config(tmp_path, seed=1, failure_rate=1.0))
    _, _, aid = build_analysis(ws, u1, n_elements=2, n_steps=1)
    ws.orchestrator.run_analysis(aid, u1).wait()
    document = ws.prov.build_document(aid, u1)
    assert document.activities  # failed jobs still exported
    outcome_entities = [e for e in document.entities if e.startswith("pt:outcome-")]
    assert outcome_entities == []
    assert all(r.kind != "wasGeneratedBy" for r in document.relations)
    assert validate_prov(serialize(document, PROV_JSON)) == []
    ws.close()


def test_activity_count_matches_job_records(ws, u1):
    _, _, aid = build_analysis(ws, u1, n_elements=3, n_steps=2)
    ws.orchestrator.run_analysis(aid, u1).wait()
    document = ws.prov.build_document(aid, u1)
    job_activities = [a for a in document.activities if a.startswith("pt:job-")]
    job_records = [
        r for r in ws.queries.job_results(aid, u1) if r.step != WORKFLOW_STEP
    ]
    assert len(job_activities) == len(job_records)


def test_export_requires_terminal_and_visible(ws, u1, u2):
    _, _, aid = build_analysis(ws, u1)
    with pytest.raises(NotTerminal):
        ws.prov.export(aid, PROV_JSON, u1)
    ws.orchestrator.run_analysis(aid, u1).wait()
    with pytest.raises(NotVisible):
        ws.prov.export(aid, PROV_JSON, u2)


def test_validate_reports_violations():
    doc = ProvDocument(
        namespaces={"pt": "https://example.org#"},
        entities={"pt:e1": {}},
        activities={"pt:a1": ProvActivity("2030-01-01T00:00:05+00:00", "2030-01-01T00:00:01+00:00")},
        agents={},
        relations=[Relation("used", "pt:a1", "pt:ghost")],
    )
    report = validate_prov(serialize(doc, PROV_JSON))
    assert len(report) == 2
    assert any("endTime precedes startTime" in v for v in report)
    assert any("undeclared entity 'pt:ghost'" in v for v in report)

    undeclared_prefix = ProvDocument(entities={"zz:e1": {}})
    assert validate_prov(serialize(undeclared_prefix, PROV_N)) == [
        "entity zz:e1: undeclared namespace prefix 'zz'"
    ]


def test_parse_errors():
    with pytest.raises(ProvParseError):
        parse("this is neither format")
    with pytest.raises(ProvParseError):
        parse("{not json", PROV_JSON)
    with pytest.raises(ProvParseError):
        parse("document\nbogus statement here\nendDocument", PROV_N)
    with pytest.raises(ProvParseError):
        parse("document\n  entity(pt:e1)\n", PROV_N)  # missing endDocument


def test_prov_n_escaping_round_trip():
    doc = ProvDocument(
        namespaces={"pt": "https://example.org#"},
        entities={'pt:e1': {"note": 'says "hi" \\ bye, ok'}},
    )
    assert parse(serialize(doc, PROV_N), PROV_N) == doc
    assert parse(serialize(doc, PROV_JSON), PROV_JSON) == doc
