"""HTTP gateway: the service surface consumed by the dashboard and scripts.

All endpoints live under ``/api/v1``. State-changing requests carry a
bearer token mapped to one actor by the stub token registry in the config.
Errors use a uniform ``{code, message}`` body; long-running analyses return
immediately and are observed by polling or via the ``/events/stream``
server-push channel (SSE, events carry the kernel seq for client dedup).
"""

from __future__ import annotations

import asyncio
import json
import socket
from dataclasses import asdict
from pathlib import Path
from typing import Any

from fastapi import Depends, FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, PlainTextResponse, StreamingResponse

from ..config import Config
from ..errors import PortInUse, ProvTrackError
from ..kernel import ActorRef, StateTransition
from ..orchestrator.jobs import Modification
from ..prov.document import FORMATS, PROV_JSON
from ..workspace import Workspace

ERROR_STATUS = {
    "UnknownItem": 404,
    "UnknownDescription": 404,
    "UnknownPipeline": 404,
    "UnknownVersion": 404,
    "UnknownDataset": 404,
    "UnknownAnalysis": 404,
    "UnknownNode": 404,
    "UnknownTarget": 404,
    "UnknownJob": 404,
    "NotVisible": 404,  # hides existence from non-grantees, like direct calls
    "NotOwner": 403,
    "InvalidKind": 400,
    "ValidationFailed": 400,
    "EmptyElement": 400,
    "ElementNotInDataset": 400,
    "MissingRequiredParam": 400,
    "MalformedConstraint": 400,
    "InvalidModification": 400,
    "SeqBeforeCreation": 400,
    "ProvParseError": 400,
    "AlreadyRunning": 409,
    "StepAlreadyDispatched": 409,
    "ElementsStillRunning": 409,
    "IllegalTransition": 409,
    "NotTerminal": 409,
    "CorruptLog": 500,
}


def create_app(workspace: Workspace, config: Config | None = None) -> FastAPI:
    config = config or workspace.config
    app = FastAPI(title="provtrack gateway", version="0.1.0")
    tokens = {u.token: ActorRef(u.id, u.display_name) for u in config.users if u.token}

    def get_actor(request: Request, token: str | None = Query(default=None)) -> ActorRef:
        header = request.headers.get("authorization", "")
        bearer = header[7:] if header.lower().startswith("bearer ") else token
        actor = tokens.get(bearer or "")
        if actor is None:
            raise _AuthError()
        return actor

    class _AuthError(Exception):
        pass

    @app.exception_handler(_AuthError)
    async def _auth_error(_req: Request, _exc: _AuthError) -> JSONResponse:
        return JSONResponse(
            status_code=401,
            content={"code": "Unauthorized", "message": "missing or unknown token"},
        )

    @app.exception_handler(ProvTrackError)
    async def _domain_error(_req: Request, exc: ProvTrackError) -> JSONResponse:
        return JSONResponse(
            status_code=ERROR_STATUS.get(exc.code, 400),
            content={"code": exc.code, "message": str(exc)},
        )

    @app.exception_handler(RequestValidationError)
    async def _body_error(_req: Request, exc: RequestValidationError) -> JSONResponse:
        return JSONResponse(
            status_code=400,
            content={"code": "ValidationFailed", "message": str(exc.errors()[:1])},
        )

    # -- pipelines ------------------------------------------------------------

    @app.post("/api/v1/pipelines")
    def register_pipeline(body: dict, actor: ActorRef = Depends(get_actor)) -> dict:
        reason = body.pop("reason", "register pipeline")
        pipeline_id, version = workspace.domain.register_pipeline(body, actor, reason)
        return {"id": pipeline_id, "version": version}

    @app.get("/api/v1/pipelines/{pipeline_id}/versions/{version}")
    def get_pipeline_version(
        pipeline_id: str, version: int, actor: ActorRef = Depends(get_actor)
    ) -> dict:
        return {
            "id": pipeline_id,
            "version": version,
            "definition": workspace.queries.get_workflow_version(pipeline_id, version),
        }

    # -- datasets ---------------------------------------------------------------

    @app.post("/api/v1/datasets")
    def register_dataset(body: dict, actor: ActorRef = Depends(get_actor)) -> dict:
        dataset_id = workspace.domain.register_dataset(
            name=body.get("name", ""),
            elements=body.get("elements", []),
            actor=actor,
            reason=body.get("reason", "register dataset"),
            schema_note=body.get("schema_note", ""),
        )
        dataset = workspace.domain.get_dataset(dataset_id)
        return {"id": dataset_id, "element_ids": list(dataset.elements)}

    @app.post("/api/v1/datasets/{dataset_id}/query")
    def query_dataset(
        dataset_id: str, body: dict, actor: ActorRef = Depends(get_actor)
    ) -> dict:
        hits = workspace.queries.find_data_elements(
            dataset_id, body.get("constraints", [])
        )
        return {
            "elements": [
                {"id": h.id, "metadata": dict(h.metadata), "files": list(h.files)}
                for h in hits
            ]
        }

    # -- analyses ------------------------------------------------------------------

    @app.post("/api/v1/analyses")
    def create_analysis(body: dict, actor: ActorRef = Depends(get_actor)) -> dict:
        analysis_id = workspace.domain.create_analysis(
            pipeline=body.get("pipeline", ""),
            version=body.get("version"),
            dataset=body.get("dataset", ""),
            element_ids=body.get("element_ids", []),
            overrides=body.get("params", {}),
            owner=actor,
            post_processing=body.get("post_processing"),
        )
        return workspace.queries.analysis_detail(analysis_id, actor)

    @app.get("/api/v1/analyses")
    def list_analyses(
        owner: str | None = None,
        state: str | None = None,
        pipeline: str | None = None,
        actor: ActorRef = Depends(get_actor),
    ) -> dict:
        rows = workspace.queries.list_analyses(actor, owner=owner, state=state, pipeline=pipeline)
        return {"analyses": [r.to_doc() for r in rows]}

    @app.get("/api/v1/analyses/{analysis_id}")
    def get_analysis(analysis_id: str, actor: ActorRef = Depends(get_actor)) -> dict:
        return workspace.queries.analysis_detail(analysis_id, actor)

    @app.post("/api/v1/analyses/{analysis_id}/run")
    def run_analysis(analysis_id: str, actor: ActorRef = Depends(get_actor)) -> dict:
        workspace.orchestrator.run_analysis(analysis_id, actor, background=True)
        return {"id": analysis_id, "state": "Running"}

    @app.post("/api/v1/analyses/{analysis_id}/clone")
    def clone_analysis(
        analysis_id: str, body: dict, actor: ActorRef = Depends(get_actor)
    ) -> dict:
        clone_id = workspace.domain.clone_analysis(analysis_id, body, actor)
        return workspace.queries.analysis_detail(clone_id, actor)

    @app.post("/api/v1/analyses/{analysis_id}/share")
    def share_analysis(
        analysis_id: str, body: dict, actor: ActorRef = Depends(get_actor)
    ) -> dict:
        grantee = body.get("grantee", "")
        workspace.domain.share_analysis(analysis_id, actor, ActorRef(grantee))
        return {"id": analysis_id, "shared_with": grantee}

    @app.post("/api/v1/analyses/{analysis_id}/annotations")
    def annotate(analysis_id: str, body: dict, actor: ActorRef = Depends(get_actor)) -> dict:
        seq = workspace.domain.annotate(analysis_id, body.get("text", ""), actor)
        return {"id": analysis_id, "seq": seq}

    @app.post("/api/v1/analyses/{analysis_id}/interventions")
    def intervene(
        analysis_id: str, body: dict, actor: ActorRef = Depends(get_actor)
    ) -> dict:
        modification = Modification(
            kind=body.get("kind", ""),
            step=body.get("step"),
            key=body.get("key"),
            value=body.get("value"),
            element=body.get("element"),
            step_doc=body.get("step_doc"),
        )
        workspace.orchestrator.intervene(
            analysis_id, modification, actor, body.get("reason", "intervention")
        )
        return {"id": analysis_id, "applied": modification.kind}

    @app.get("/api/v1/analyses/{analysis_id}/jobs")
    def job_results(analysis_id: str, actor: ActorRef = Depends(get_actor)) -> dict:
        records = workspace.queries.job_results(analysis_id, actor)
        return {"records": [asdict(r) for r in records]}

    @app.get("/api/v1/analyses/{analysis_id}/prov")
    def export_prov(
        analysis_id: str,
        format: str = Query(default=PROV_JSON),
        actor: ActorRef = Depends(get_actor),
    ) -> PlainTextResponse:
        if format not in FORMATS:
            return JSONResponse(
                status_code=400,
                content={"code": "ValidationFailed", "message": f"format must be one of {FORMATS}"},
            )
        text = workspace.prov.export(analysis_id, format, actor)
        media = "application/json" if format == PROV_JSON else "text/provenance-notation"
        return PlainTextResponse(text, media_type=media)

    # -- lineage -----------------------------------------------------------------------

    @app.get("/api/v1/lineage/{node}")
    def lineage(
        node: str,
        direction: str = Query(default="origins"),
        depth: int | None = Query(default=None),
        actor: ActorRef = Depends(get_actor),
    ) -> dict:
        return workspace.queries.lineage(node, direction, depth).to_doc()

    # -- events ------------------------------------------------------------------------

    @app.get("/api/v1/events/stream")
    async def events_stream(
        request: Request,
        from_seq: int = Query(default=0),
        limit: int | None = Query(default=None),
        actor: ActorRef = Depends(get_actor),
    ) -> StreamingResponse:
        last_id = request.headers.get("last-event-id")
        cursor = int(last_id) if last_id else from_seq

        async def generate():
            sent = 0
            position = cursor
            while True:
                if await request.is_disconnected():
                    return
                for event in workspace.store.events_since(position):
                    position = event.seq
                    if not isinstance(event.payload, StateTransition):
                        continue
                    data = json.dumps(
                        {
                            "seq": event.seq,
                            "item": event.item,
                            "to_state": event.payload.to_state,
                            "at": event.at,
                        }
                    )
                    yield f"id: {event.seq}\nevent: transition\ndata: {data}\n\n"
                    sent += 1
                    if limit is not None and sent >= limit:
                        return
                await asyncio.sleep(0.15)

        return StreamingResponse(generate(), media_type="text/event-stream")

    # -- health --------------------------------------------------------------------------

    @app.get("/api/v1/health")
    def health() -> dict:
        return {
            "status": "ok",
            "items": workspace.store.item_count,
            "last_seq": workspace.store.last_seq,
        }

    ui_dist = config.ui_dist
    if ui_dist and Path(ui_dist).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dist, html=True), name="ui")

    return app


def check_port(host: str, port: int) -> None:
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)  # match uvicorn
    try:
        probe.bind((host, port))
    except OSError as exc:
        raise PortInUse(f"cannot bind {host}:{port}: {exc}")
    finally:
        probe.close()


def serve(config: Config) -> None:
    """Replay the store, expose all endpoints, flush the log on shutdown."""
    import uvicorn

    check_port(config.host, config.port)
    workspace = Workspace(config)
    app = create_app(workspace, config)

    @app.on_event("shutdown")
    def _close() -> None:
        workspace.close()

    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")
