"""Flat-conjunction constraint language over element metadata."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping

from ..errors import MalformedConstraint

OPS = ("eq", "neq", "lt", "lte", "gt", "gte", "contains")
_ORDERING = ("lt", "lte", "gt", "gte")


@dataclass(frozen=True)
class Constraint:
    attribute: str
    op: str
    value: Any

    def __post_init__(self) -> None:
        if not self.attribute:
            raise MalformedConstraint("constraint attribute must be non-empty")
        if self.op not in OPS:
            raise MalformedConstraint(f"unknown operator {self.op!r}")

    @classmethod
    def from_doc(cls, doc: Mapping[str, Any]) -> "Constraint":
        try:
            return cls(doc["attribute"], doc["op"], doc["value"])
        except KeyError as exc:
            raise MalformedConstraint(f"constraint missing field {exc}")

    def to_doc(self) -> dict[str, Any]:
        return {"attribute": self.attribute, "op": self.op, "value": self.value}


def _comparable(left: Any, right: Any) -> bool:
    if isinstance(left, bool) or isinstance(right, bool):
        return isinstance(left, bool) and isinstance(right, bool)
    if isinstance(left, (int, float)) and isinstance(right, (int, float)):
        return True
    return type(left) is type(right)


def matches(metadata: Mapping[str, Any], constraint: Constraint) -> bool:
    """True when the metadata satisfies the constraint; an absent attribute
    never matches; a type-incompatible comparison is malformed, not False."""
    if constraint.attribute not in metadata:
        return False
    value = metadata[constraint.attribute]
    target = constraint.value
    if constraint.op == "contains":
        if isinstance(value, str):
            if not isinstance(target, str):
                raise MalformedConstraint(
                    f"contains over text attribute {constraint.attribute!r} needs a text value"
                )
            return target in value
        if isinstance(value, (list, tuple)):
            return target in value
        raise MalformedConstraint(
            f"attribute {constraint.attribute!r} does not support contains"
        )
    if not _comparable(value, target):
        raise MalformedConstraint(
            f"cannot compare {constraint.attribute!r} value {value!r} with {target!r}"
        )
    if constraint.op == "eq":
        return value == target
    if constraint.op == "neq":
        return value != target
    if constraint.op in _ORDERING and isinstance(value, bool):
        raise MalformedConstraint("ordering comparison over boolean attribute")
    if constraint.op == "lt":
        return value < target
    if constraint.op == "lte":
        return value <= target
    if constraint.op == "gt":
        return value > target
    return value >= target


def matches_all(metadata: Mapping[str, Any], constraints: list[Constraint]) -> bool:
    return all(matches(metadata, c) for c in constraints)
