"""Query layer: constraint search, lineage traversal, usage reporting."""

from .constraints import Constraint, matches, matches_all
from .lineage import LineageGraph
from .service import AnalysisSummary, ElementHit, QueryService, UsageRow

__all__ = [
    "AnalysisSummary",
    "Constraint",
    "ElementHit",
    "LineageGraph",
    "QueryService",
    "UsageRow",
    "matches",
    "matches_all",
]
