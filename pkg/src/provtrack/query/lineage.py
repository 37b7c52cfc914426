"""Lineage graphs: acyclic provenance-link neighbourhoods of a node."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any


@dataclass(frozen=True)
class LineageGraph:
    nodes: tuple[tuple[str, str], ...]  # (kind, id), sorted
    edges: tuple[tuple[str, str, str], ...]  # (from, to, relation), sorted
    root: str

    def node_ids(self) -> set[str]:
        return {node_id for _, node_id in self.nodes}

    def to_doc(self) -> dict[str, Any]:
        return {
            "root": self.root,
            "nodes": [{"kind": kind, "id": node_id} for kind, node_id in self.nodes],
            "edges": [
                {"from": frm, "to": to, "relation": rel} for frm, to, rel in self.edges
            ],
        }

    @staticmethod
    def build(
        root: str,
        nodes: dict[str, str],
        edges: set[tuple[str, str, str]],
    ) -> "LineageGraph":
        node_tuples = tuple(sorted((kind, node_id) for node_id, kind in nodes.items()))
        edge_tuples = tuple(sorted(edges))
        return LineageGraph(nodes=node_tuples, edges=edge_tuples, root=root)
