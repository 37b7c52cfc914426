"""PROV interoperability: export, serialization, structural validation."""

from .document import (
    FORMATS,
    PROV_JSON,
    PROV_N,
    ProvActivity,
    ProvDocument,
    Relation,
    parse,
    serialize,
)
from .export import ProvExporter
from .validate import validate_prov

__all__ = [
    "FORMATS",
    "PROV_JSON",
    "PROV_N",
    "ProvActivity",
    "ProvDocument",
    "ProvExporter",
    "Relation",
    "parse",
    "serialize",
    "validate_prov",
]
