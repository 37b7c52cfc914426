"""Structural validation of serialized PROV documents."""

from __future__ import annotations

from datetime import datetime

from .document import RELATIONS, ProvDocument, parse


def validate_prov(doc: ProvDocument | str, format: str | None = None) -> list[str]:
    """Check document invariants; an empty report means the document is valid.

    Raises :class:`ProvParseError` when a serialized document does not parse
    in its (declared or detected) format.
    """
    if isinstance(doc, str):
        doc = parse(doc, format)
    violations: list[str] = []
    declared_prefixes = set(doc.namespaces)

    def check_prefix(identifier: str, context: str) -> None:
        prefix, sep, _ = identifier.partition(":")
        if sep and prefix not in declared_prefixes and prefix != "_":
            violations.append(f"{context}: undeclared namespace prefix {prefix!r}")

    for entity_id in doc.entities:
        check_prefix(entity_id, f"entity {entity_id}")
    for agent_id in doc.agents:
        check_prefix(agent_id, f"agent {agent_id}")
    for act_id, activity in doc.activities.items():
        check_prefix(act_id, f"activity {act_id}")
        if activity.start_time and activity.end_time:
            try:
                start = datetime.fromisoformat(activity.start_time)
                end = datetime.fromisoformat(activity.end_time)
            except ValueError:
                violations.append(f"activity {act_id}: unparseable time")
                continue
            if end < start:
                violations.append(f"activity {act_id}: endTime precedes startTime")

    domains = {
        "prov:entity": doc.entities,
        "prov:generatedEntity": doc.entities,
        "prov:usedEntity": doc.entities,
        "prov:activity": doc.activities,
        "prov:agent": doc.agents,
    }
    for relation in doc.relations:
        _, role_a, role_b = RELATIONS[relation.kind]
        for role, ref in ((role_a, relation.a), (role_b, relation.b)):
            if ref not in domains[role]:
                kind = role.split(":")[1]
                violations.append(
                    f"{relation.kind}({relation.a}, {relation.b}):"
                    f" undeclared {kind} {ref!r}"
                )
    return violations
