"""provtrack: event-sourced provenance and workflow tracking.

Versioned pipelines and datasets are registered as items in an append-only
store; analyses execute over a pluggable executor with per-job provenance
capture; lineage, usage and constraint queries run over a secondary index;
terminal analyses export to the W3C PROV model.
"""

from .config import Config, UserEntry
from .kernel import ActorRef, ItemKind, ItemStore
from .workspace import Workspace

__all__ = ["ActorRef", "Config", "ItemKind", "ItemStore", "UserEntry", "Workspace"]

__version__ = "0.1.0"
