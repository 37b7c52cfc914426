"""W3C PROV document model with deterministic text serializations.

Two serializations are supported: the PROV-JSON layout (sorted keys,
2-space indent) and PROV-N (one statement per line, sorted by statement
type then arguments). Both round-trip losslessly through :func:`parse` for
the construct subset this package emits: entities, activities, agents and
the five core relations. Attribute values are strings.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Any, Mapping

from ..errors import ProvParseError

PROV_JSON = "prov-json"
PROV_N = "prov-n"
FORMATS = (PROV_JSON, PROV_N)

# relation kind -> (statement id prefix, role name of arg a, role name of arg b)
RELATIONS = {
    "used": ("u", "prov:activity", "prov:entity"),
    "wasGeneratedBy": ("gen", "prov:entity", "prov:activity"),
    "wasAssociatedWith": ("assoc", "prov:activity", "prov:agent"),
    "wasDerivedFrom": ("der", "prov:generatedEntity", "prov:usedEntity"),
    "wasAttributedTo": ("attr", "prov:entity", "prov:agent"),
}
_RELATION_ORDER = ("used", "wasGeneratedBy", "wasAssociatedWith", "wasDerivedFrom", "wasAttributedTo")


@dataclass(frozen=True)
class Relation:
    kind: str
    a: str
    b: str

    def __post_init__(self) -> None:
        if self.kind not in RELATIONS:
            raise ValueError(f"unknown relation kind {self.kind!r}")


@dataclass
class ProvActivity:
    start_time: str | None = None
    end_time: str | None = None
    attributes: dict[str, str] = field(default_factory=dict)


@dataclass
class ProvDocument:
    namespaces: dict[str, str] = field(default_factory=dict)
    entities: dict[str, dict[str, str]] = field(default_factory=dict)
    activities: dict[str, ProvActivity] = field(default_factory=dict)
    agents: dict[str, dict[str, str]] = field(default_factory=dict)
    relations: list[Relation] = field(default_factory=list)

    def sorted_relations(self) -> list[Relation]:
        return sorted(
            self.relations, key=lambda r: (_RELATION_ORDER.index(r.kind), r.a, r.b)
        )

    def normalized(self) -> "ProvDocument":
        return ProvDocument(
            namespaces=dict(self.namespaces),
            entities={k: dict(v) for k, v in self.entities.items()},
            activities={
                k: ProvActivity(a.start_time, a.end_time, dict(a.attributes))
                for k, a in self.activities.items()
            },
            agents={k: dict(v) for k, v in self.agents.items()},
            relations=self.sorted_relations(),
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ProvDocument):
            return NotImplemented
        a, b = self.normalized(), other.normalized()
        return (
            a.namespaces == b.namespaces
            and a.entities == b.entities
            and a.activities == b.activities
            and a.agents == b.agents
            and a.relations == b.relations
        )


# --- PROV-JSON -----------------------------------------------------------------


def to_prov_json(doc: ProvDocument) -> str:
    body: dict[str, Any] = {
        "prefix": dict(doc.namespaces),
        "entity": {k: dict(v) for k, v in doc.entities.items()},
        "activity": {},
        "agent": {k: dict(v) for k, v in doc.agents.items()},
    }
    for act_id, activity in doc.activities.items():
        entry: dict[str, str] = {}
        if activity.start_time is not None:
            entry["prov:startTime"] = activity.start_time
        if activity.end_time is not None:
            entry["prov:endTime"] = activity.end_time
        entry.update(activity.attributes)
        body["activity"][act_id] = entry
    counters: dict[str, int] = {}
    for relation in doc.sorted_relations():
        prefix, role_a, role_b = RELATIONS[relation.kind]
        counters[relation.kind] = counters.get(relation.kind, 0) + 1
        statement_id = f"_:{prefix}{counters[relation.kind]}"
        body.setdefault(relation.kind, {})[statement_id] = {
            role_a: relation.a,
            role_b: relation.b,
        }
    return json.dumps(body, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _from_prov_json(text: str) -> ProvDocument:
    try:
        body = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProvParseError(f"invalid PROV-JSON: {exc}")
    if not isinstance(body, dict):
        raise ProvParseError("PROV-JSON document must be an object")
    doc = ProvDocument(namespaces=dict(body.get("prefix", {})))
    doc.entities = {k: dict(v) for k, v in body.get("entity", {}).items()}
    doc.agents = {k: dict(v) for k, v in body.get("agent", {}).items()}
    for act_id, entry in body.get("activity", {}).items():
        entry = dict(entry)
        doc.activities[act_id] = ProvActivity(
            start_time=entry.pop("prov:startTime", None),
            end_time=entry.pop("prov:endTime", None),
            attributes=entry,
        )
    for kind, (_, role_a, role_b) in RELATIONS.items():
        for statement in body.get(kind, {}).values():
            try:
                doc.relations.append(Relation(kind, statement[role_a], statement[role_b]))
            except KeyError as exc:
                raise ProvParseError(f"{kind} statement missing {exc}")
    doc.relations = doc.sorted_relations()
    return doc


# --- PROV-N --------------------------------------------------------------------


def _quote(value: str) -> str:
    return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _attrs_text(attrs: Mapping[str, str]) -> str:
    if not attrs:
        return ""
    inner = ", ".join(f"{key}={_quote(attrs[key])}" for key in sorted(attrs))
    return f", [{inner}]"


def to_prov_n(doc: ProvDocument) -> str:
    lines = ["document"]
    for prefix in sorted(doc.namespaces):
        lines.append(f"  prefix {prefix} <{doc.namespaces[prefix]}>")
    for agent_id in sorted(doc.agents):
        lines.append(f"  agent({agent_id}{_attrs_text(doc.agents[agent_id])})")
    for entity_id in sorted(doc.entities):
        lines.append(f"  entity({entity_id}{_attrs_text(doc.entities[entity_id])})")
    for act_id in sorted(doc.activities):
        activity = doc.activities[act_id]
        start = activity.start_time or "-"
        end = activity.end_time or "-"
        lines.append(
            f"  activity({act_id}, {start}, {end}{_attrs_text(activity.attributes)})"
        )
    for relation in doc.sorted_relations():
        lines.append(f"  {relation.kind}({relation.a}, {relation.b})")
    lines.append("endDocument")
    return "\n".join(lines) + "\n"


_STATEMENT_RE = re.compile(r"^(\w+)\((.*)\)$")
_PREFIX_RE = re.compile(r"^prefix\s+(\S+)\s+<(.+)>$")


def _split_args(body: str) -> list[str]:
    """Split statement arguments on top-level commas (quotes/brackets aware)."""
    args: list[str] = []
    current: list[str] = []
    depth = 0
    in_string = False
    i = 0
    while i < len(body):
        ch = body[i]
        if in_string:
            current.append(ch)
            if ch == "\\" and i + 1 < len(body):
                current.append(body[i + 1])
                i += 1
            elif ch == '"':
                in_string = False
        elif ch == '"':
            in_string = True
            current.append(ch)
        elif ch == "[":
            depth += 1
            current.append(ch)
        elif ch == "]":
            depth -= 1
            current.append(ch)
        elif ch == "," and depth == 0:
            args.append("".join(current).strip())
            current = []
        else:
            current.append(ch)
        i += 1
    tail = "".join(current).strip()
    if tail:
        args.append(tail)
    return args


def _parse_attrs(arg: str) -> dict[str, str]:
    if not (arg.startswith("[") and arg.endswith("]")):
        raise ProvParseError(f"malformed attribute block: {arg!r}")
    attrs: dict[str, str] = {}
    for pair in _split_args(arg[1:-1]):
        if not pair:
            continue
        key, _, raw = pair.partition("=")
        raw = raw.strip()
        if not (raw.startswith('"') and raw.endswith('"')):
            raise ProvParseError(f"attribute value must be quoted: {pair!r}")
        value = raw[1:-1].replace('\\"', '"').replace("\\\\", "\\")
        attrs[key.strip()] = value
    return attrs


def _from_prov_n(text: str) -> ProvDocument:
    doc = ProvDocument()
    lines = [line.strip() for line in text.splitlines() if line.strip()]
    if not lines or lines[0] != "document" or lines[-1] != "endDocument":
        raise ProvParseError("PROV-N document must be wrapped in document/endDocument")
    for line in lines[1:-1]:
        prefix_match = _PREFIX_RE.match(line)
        if prefix_match:
            doc.namespaces[prefix_match.group(1)] = prefix_match.group(2)
            continue
        match = _STATEMENT_RE.match(line)
        if not match:
            raise ProvParseError(f"unparseable statement: {line!r}")
        kind, body = match.group(1), match.group(2)
        args = _split_args(body)
        if kind == "agent":
            doc.agents[args[0]] = _parse_attrs(args[1]) if len(args) > 1 else {}
        elif kind == "entity":
            doc.entities[args[0]] = _parse_attrs(args[1]) if len(args) > 1 else {}
        elif kind == "activity":
            if len(args) < 3:
                raise ProvParseError(f"activity needs id, start, end: {line!r}")
            doc.activities[args[0]] = ProvActivity(
                start_time=None if args[1] == "-" else args[1],
                end_time=None if args[2] == "-" else args[2],
                attributes=_parse_attrs(args[3]) if len(args) > 3 else {},
            )
        elif kind in RELATIONS:
            if len(args) != 2:
                raise ProvParseError(f"{kind} takes two arguments: {line!r}")
            doc.relations.append(Relation(kind, args[0], args[1]))
        else:
            raise ProvParseError(f"unknown statement {kind!r}")
    doc.relations = doc.sorted_relations()
    return doc


# --- entry points -----------------------------------------------------------------


def serialize(doc: ProvDocument, format: str) -> str:
    if format == PROV_JSON:
        return to_prov_json(doc)
    if format == PROV_N:
        return to_prov_n(doc)
    raise ValueError(f"unknown format {format!r}; expected one of {FORMATS}")


def detect_format(text: str) -> str:
    stripped = text.lstrip()
    if stripped.startswith("{"):
        return PROV_JSON
    if stripped.startswith("document"):
        return PROV_N
    raise ProvParseError("cannot detect serialization format")


def parse(text: str, format: str | None = None) -> ProvDocument:
    format = format or detect_format(text)
    if format == PROV_JSON:
        return _from_prov_json(text)
    if format == PROV_N:
        return _from_prov_n(text)
    raise ProvParseError(f"unknown format {format!r}")
