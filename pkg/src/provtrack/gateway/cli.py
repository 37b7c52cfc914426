"""Command line surface for scripted use.

Commands operate either on a local store (``--store``/``--config``) or
against a running gateway (``--server`` + ``--token``), with the same
subcommands in both modes::

    provtrack pipeline register fixtures/civet.pipeline
    provtrack dataset query <id> --where "age gte 70"
    provtrack analysis run <id>
    provtrack prov export <id> --format prov-n
    provtrack serve --config gateway.json
"""

from __future__ import annotations

import argparse
import json
import sys
import time
import urllib.error
import urllib.parse
import urllib.request
from typing import Any

from ..config import Config
from ..errors import ProvTrackError
from ..kernel import ActorRef
from ..orchestrator.jobs import Modification
from ..workspace import Workspace

TERMINAL = ("Completed", "PartiallyFailed", "Failed")


class CliError(Exception):
    def __init__(self, code: str, message: str) -> None:
        super().__init__(message)
        self.code = code


class LocalClient:
    def __init__(self, config: Config, actor: ActorRef) -> None:
        self.workspace = Workspace(config)
        self.actor = actor

    def register_pipeline(self, doc: dict) -> dict:
        pid, version = self.workspace.domain.register_pipeline(
            doc, self.actor, "register pipeline via cli"
        )
        return {"id": pid, "version": version}

    def show_pipeline(self, pipeline: str, version: int | None) -> dict:
        pdef = self.workspace.domain.get_pipeline(pipeline, version)
        return {
            "id": pipeline,
            "version": pdef.version,
            "definition": self.workspace.queries.get_workflow_version(pipeline, pdef.version),
        }

    def register_dataset(self, doc: dict) -> dict:
        dataset_id = self.workspace.domain.register_dataset(
            name=doc.get("name", ""),
            elements=doc.get("elements", []),
            actor=self.actor,
            reason="register dataset via cli",
            schema_note=doc.get("schema_note", ""),
        )
        dataset = self.workspace.domain.get_dataset(dataset_id)
        return {"id": dataset_id, "element_ids": list(dataset.elements)}

    def query_dataset(self, dataset: str, constraints: list[dict]) -> dict:
        hits = self.workspace.queries.find_data_elements(dataset, constraints)
        return {
            "elements": [
                {"id": h.id, "metadata": dict(h.metadata), "files": list(h.files)}
                for h in hits
            ]
        }

    def create_analysis(self, body: dict) -> dict:
        analysis_id = self.workspace.domain.create_analysis(
            pipeline=body.get("pipeline", ""),
            version=body.get("version"),
            dataset=body.get("dataset", ""),
            element_ids=body.get("element_ids", []),
            overrides=body.get("params", {}),
            owner=self.actor,
            post_processing=body.get("post_processing"),
        )
        return self.status(analysis_id)

    def run_analysis(self, analysis: str, wait: bool) -> dict:
        run = self.workspace.orchestrator.run_analysis(
            analysis, self.actor, background=not wait
        )
        if wait:
            run.wait()
        return self.status(analysis)

    def status(self, analysis: str) -> dict:
        return self.workspace.queries.analysis_detail(analysis, self.actor)

    def clone(self, analysis: str, changes: dict) -> dict:
        clone_id = self.workspace.domain.clone_analysis(analysis, changes, self.actor)
        return self.status(clone_id)

    def share(self, analysis: str, grantee: str) -> dict:
        self.workspace.domain.share_analysis(analysis, self.actor, ActorRef(grantee))
        return {"id": analysis, "shared_with": grantee}

    def annotate(self, analysis: str, text: str) -> dict:
        seq = self.workspace.domain.annotate(analysis, text, self.actor)
        return {"id": analysis, "seq": seq}

    def intervene(self, analysis: str, body: dict) -> dict:
        modification = Modification(
            kind=body.get("kind", ""),
            step=body.get("step"),
            key=body.get("key"),
            value=body.get("value"),
            element=body.get("element"),
            step_doc=body.get("step_doc"),
        )
        self.workspace.orchestrator.intervene(
            analysis, modification, self.actor, body.get("reason", "cli intervention")
        )
        return {"id": analysis, "applied": modification.kind}

    def export_prov(self, analysis: str, format: str) -> str:
        return self.workspace.prov.export(analysis, format, self.actor)

    def lineage(self, node: str, direction: str, depth: int | None) -> dict:
        return self.workspace.queries.lineage(node, direction, depth).to_doc()

    def close(self) -> None:
        self.workspace.close()


class RemoteClient:
    """Same surface as LocalClient, speaking to a gateway over HTTP."""

    def __init__(self, server: str, token: str) -> None:
        self.server = server.rstrip("/")
        self.token = token

    def _call(
        self,
        method: str,
        path: str,
        body: dict | None = None,
        params: dict | None = None,
        raw: bool = False,
    ) -> Any:
        query = f"?{urllib.parse.urlencode(params)}" if params else ""
        url = f"{self.server}/api/v1{path}{query}"
        request = urllib.request.Request(
            url,
            method=method,
            data=json.dumps(body).encode() if body is not None else None,
            headers={
                "Authorization": f"Bearer {self.token}",
                "Content-Type": "application/json",
            },
        )
        try:
            with urllib.request.urlopen(request) as response:
                payload = response.read().decode()
        except urllib.error.HTTPError as exc:
            detail = exc.read().decode()
            try:
                error = json.loads(detail)
            except json.JSONDecodeError:
                error = {"code": str(exc.code), "message": detail}
            raise CliError(error.get("code", "Error"), error.get("message", ""))
        return payload if raw else json.loads(payload or "{}")

    def register_pipeline(self, doc: dict) -> dict:
        return self._call("POST", "/pipelines", doc)

    def show_pipeline(self, pipeline: str, version: int | None) -> dict:
        if version is None:
            raise CliError("ValidationFailed", "pipeline show over --server needs --version")
        return self._call("GET", f"/pipelines/{pipeline}/versions/{version}")

    def register_dataset(self, doc: dict) -> dict:
        return self._call("POST", "/datasets", doc)

    def query_dataset(self, dataset: str, constraints: list[dict]) -> dict:
        return self._call("POST", f"/datasets/{dataset}/query", {"constraints": constraints})

    def create_analysis(self, body: dict) -> dict:
        return self._call("POST", "/analyses", body)

    def run_analysis(self, analysis: str, wait: bool) -> dict:
        self._call("POST", f"/analyses/{analysis}/run", {})
        detail = self.status(analysis)
        while wait and detail.get("state") not in TERMINAL:
            time.sleep(0.2)
            detail = self.status(analysis)
        return detail

    def status(self, analysis: str) -> dict:
        return self._call("GET", f"/analyses/{analysis}")

    def clone(self, analysis: str, changes: dict) -> dict:
        return self._call("POST", f"/analyses/{analysis}/clone", changes)

    def share(self, analysis: str, grantee: str) -> dict:
        return self._call("POST", f"/analyses/{analysis}/share", {"grantee": grantee})

    def annotate(self, analysis: str, text: str) -> dict:
        return self._call("POST", f"/analyses/{analysis}/annotations", {"text": text})

    def intervene(self, analysis: str, body: dict) -> dict:
        return self._call("POST", f"/analyses/{analysis}/interventions", body)

    def export_prov(self, analysis: str, format: str) -> str:
        return self._call(
            "GET", f"/analyses/{analysis}/prov", params={"format": format}, raw=True
        )

    def lineage(self, node: str, direction: str, depth: int | None) -> dict:
        params: dict[str, Any] = {"direction": direction}
        if depth is not None:
            params["depth"] = depth
        return self._call("GET", f"/lineage/{node}", params=params)

    def close(self) -> None:
        pass


def _parse_value(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _parse_params(pairs: list[str]) -> dict[str, Any]:
    params: dict[str, Any] = {}
    for pair in pairs or []:
        key, sep, value = pair.partition("=")
        if not sep:
            raise CliError("ValidationFailed", f"--param expects key=value, got {pair!r}")
        params[key] = _parse_value(value)
    return params


def _parse_wheres(wheres: list[str]) -> list[dict[str, Any]]:
    constraints = []
    for text in wheres or []:
        parts = text.split(maxsplit=2)
        if len(parts) != 3:
            raise CliError(
                "MalformedConstraint", f"--where expects 'attr op value', got {text!r}"
            )
        constraints.append(
            {"attribute": parts[0], "op": parts[1], "value": _parse_value(parts[2])}
        )
    return constraints


def _load_doc(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="provtrack",
        description="Provenance-tracked analysis pipelines: register, run, query, export.",
    )
    parser.add_argument("--store", help="event log path (local mode)")
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--actor", default="cli", help="acting user id")
    parser.add_argument("--actor-name", default="", help="acting user display name")
    parser.add_argument("--server", help="gateway base URL (remote mode)")
    parser.add_argument("--token", default="", help="bearer token for --server")
    parser.add_argument(
        "--output", choices=("text", "structured"), default="text",
        help="structured prints machine-readable JSON",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    pipeline = commands.add_parser("pipeline", help="register or inspect pipelines")
    pipeline_sub = pipeline.add_subparsers(dest="subcommand", required=True)
    reg = pipeline_sub.add_parser("register", help="register a pipeline definition file")
    reg.add_argument("file")
    show = pipeline_sub.add_parser("show", help="show a pipeline version")
    show.add_argument("id")
    show.add_argument("--version", type=int)

    dataset = commands.add_parser("dataset", help="register or query datasets")
    dataset_sub = dataset.add_subparsers(dest="subcommand", required=True)
    dreg = dataset_sub.add_parser("register", help="register a dataset definition file")
    dreg.add_argument("file")
    dquery = dataset_sub.add_parser("query", help="constraint query over element metadata")
    dquery.add_argument("id")
    dquery.add_argument("--where", action="append", default=[], metavar="'attr op value'")

    analysis = commands.add_parser("analysis", help="create, run and manage analyses")
    analysis_sub = analysis.add_subparsers(dest="subcommand", required=True)
    acreate = analysis_sub.add_parser("create")
    acreate.add_argument("--pipeline", required=True)
    acreate.add_argument("--version", type=int)
    acreate.add_argument("--dataset", required=True)
    acreate.add_argument("--elements", help="comma-separated element ids (default: all)")
    acreate.add_argument("--param", action="append", default=[], metavar="key=value")
    acreate.add_argument("--post", help="JSON file with post-processing steps")
    arun = analysis_sub.add_parser("run")
    arun.add_argument("id")
    arun.add_argument("--no-wait", action="store_true")
    astatus = analysis_sub.add_parser("status")
    astatus.add_argument("id")
    aclone = analysis_sub.add_parser("clone")
    aclone.add_argument("id")
    aclone.add_argument("--elements")
    aclone.add_argument("--param", action="append", default=[], metavar="key=value")
    ashare = analysis_sub.add_parser("share")
    ashare.add_argument("id")
    ashare.add_argument("--with", dest="grantee", required=True)
    aannotate = analysis_sub.add_parser("annotate")
    aannotate.add_argument("id")
    aannotate.add_argument("--text", required=True)
    aintervene = analysis_sub.add_parser("intervene")
    aintervene.add_argument("id")
    aintervene.add_argument(
        "--kind", required=True,
        choices=("set_param", "skip_step", "cancel_element", "append_step"),
    )
    aintervene.add_argument("--step")
    aintervene.add_argument("--key")
    aintervene.add_argument("--value")
    aintervene.add_argument("--element")
    aintervene.add_argument("--step-doc", help="JSON step doc for append_step")
    aintervene.add_argument("--reason", default="cli intervention")

    prov = commands.add_parser("prov", help="export provenance documents")
    prov_sub = prov.add_subparsers(dest="subcommand", required=True)
    pexport = prov_sub.add_parser("export")
    pexport.add_argument("id")
    pexport.add_argument("--format", default="prov-json", choices=("prov-json", "prov-n"))
    pexport.add_argument("-o", "--out", help="write to file instead of stdout")

    lineage = commands.add_parser("lineage", help="lineage graph queries")
    lineage_sub = lineage.add_subparsers(dest="subcommand", required=True)
    lshow = lineage_sub.add_parser("show")
    lshow.add_argument("node")
    lshow.add_argument("--direction", default="origins", choices=("origins", "descendants"))
    lshow.add_argument("--depth", type=int)

    serve = commands.add_parser("serve", help="run the HTTP gateway")
    serve.add_argument("--port", type=int)
    serve.add_argument("--host")

    return parser


def _make_config(args: argparse.Namespace) -> Config:
    config = Config.from_file(args.config) if args.config else Config()
    if args.store:
        config.log_path = args.store
    return config


def _make_client(args: argparse.Namespace) -> LocalClient | RemoteClient:
    if args.server:
        return RemoteClient(args.server, args.token)
    actor = ActorRef(args.actor, args.actor_name or args.actor)
    return LocalClient(_make_config(args), actor)


def _emit(args: argparse.Namespace, payload: dict, text: str) -> None:
    if args.output == "structured":
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(text)


def _element_summary(detail: dict) -> str:
    lines = [f"analysis {detail['id']}: {detail['state']}"]
    for element in detail.get("elements", []):
        lines.append(f"  element {element['element']}: {element['state']}")
    outcome = detail.get("outcome")
    if outcome:
        lines.append(f"  result: {outcome['result_link']}")
    return "\n".join(lines)


def _dispatch(args: argparse.Namespace) -> int:
    if args.command == "serve":
        from .app import serve as run_server

        config = _make_config(args)
        if args.port:
            config.port = args.port
        if args.host:
            config.host = args.host
        run_server(config)
        return 0

    client = _make_client(args)
    try:
        if args.command == "pipeline" and args.subcommand == "register":
            result = client.register_pipeline(_load_doc(args.file))
            _emit(args, result, f"pipeline {result['id']} version {result['version']}")
        elif args.command == "pipeline" and args.subcommand == "show":
            result = client.show_pipeline(args.id, args.version)
            _emit(args, result, json.dumps(result["definition"], indent=2, sort_keys=True))
        elif args.command == "dataset" and args.subcommand == "register":
            result = client.register_dataset(_load_doc(args.file))
            _emit(
                args, result,
                f"dataset {result['id']} with {len(result['element_ids'])} elements",
            )
        elif args.command == "dataset" and args.subcommand == "query":
            result = client.query_dataset(args.id, _parse_wheres(args.where))
            text = "\n".join(
                f"{e['id']} {json.dumps(e['metadata'], sort_keys=True)}"
                for e in result["elements"]
            )
            _emit(args, result, text or "(no matching elements)")
        elif args.command == "analysis":
            result = _analysis_command(client, args)
        elif args.command == "prov" and args.subcommand == "export":
            text = client.export_prov(args.id, args.format)
            if args.out:
                with open(args.out, "w", encoding="utf-8") as fh:
                    fh.write(text)
                _emit(args, {"written": args.out}, f"wrote {args.out}")
            else:
                print(text, end="")
        elif args.command == "lineage" and args.subcommand == "show":
            result = client.lineage(args.node, args.direction, args.depth)
            text = "\n".join(
                [f"{n['kind']}: {n['id']}" for n in result["nodes"]]
                + [f"{e['from']} -[{e['relation']}]-> {e['to']}" for e in result["edges"]]
            )
            _emit(args, result, text)
        return 0
    except (ProvTrackError, CliError) as exc:
        print(json.dumps({"code": exc.code, "message": str(exc)}), file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(json.dumps({"code": "FileNotFound", "message": str(exc)}), file=sys.stderr)
        return 1
    finally:
        client.close()


def _analysis_command(client: LocalClient | RemoteClient, args: argparse.Namespace) -> dict:
    if args.subcommand == "create":
        element_ids = args.elements.split(",") if args.elements else None
        if element_ids is None:
            hits = client.query_dataset(args.dataset, [])
            element_ids = [e["id"] for e in hits["elements"]]
        body = {
            "pipeline": args.pipeline,
            "version": args.version,
            "dataset": args.dataset,
            "element_ids": element_ids,
            "params": _parse_params(args.param),
        }
        if args.post:
            body["post_processing"] = _load_doc(args.post)
        detail = client.create_analysis(body)
        _emit(args, detail, f"analysis {detail['id']} created ({detail['state']})")
    elif args.subcommand == "run":
        detail = client.run_analysis(args.id, wait=not args.no_wait)
        _emit(args, detail, _element_summary(detail))
    elif args.subcommand == "status":
        detail = client.status(args.id)
        _emit(args, detail, _element_summary(detail))
    elif args.subcommand == "clone":
        changes: dict[str, Any] = {}
        if args.elements:
            changes["element_ids"] = args.elements.split(",")
        if args.param:
            changes["params"] = _parse_params(args.param)
        detail = client.clone(args.id, changes)
        _emit(args, detail, f"cloned to analysis {detail['id']}")
    elif args.subcommand == "share":
        detail = client.share(args.id, args.grantee)
        _emit(args, detail, f"analysis {args.id} shared with {args.grantee}")
    elif args.subcommand == "annotate":
        detail = client.annotate(args.id, args.text)
        _emit(args, detail, f"annotated at seq {detail['seq']}")
    elif args.subcommand == "intervene":
        body = {
            "kind": args.kind,
            "step": args.step,
            "key": args.key,
            "value": _parse_value(args.value) if args.value is not None else None,
            "element": args.element,
            "reason": args.reason,
        }
        if args.step_doc:
            body["step_doc"] = json.loads(args.step_doc)
        detail = client.intervene(args.id, body)
        _emit(args, detail, f"applied {args.kind} to analysis {args.id}")
    return {}


def cli_run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return _dispatch(args)


def main() -> None:
    sys.exit(cli_run())


if __name__ == "__main__":
    main()
