// Layered layout for lineage DAGs. Provenance links are acyclic, so a
// longest-path layering is well-defined; nodes inside a layer are ordered
// by id for stable rendering.

import type { LineageEdge, LineageNode } from "./types.js";

export interface Placed {
  node: LineageNode;
  layer: number;
  row: number;
  x: number;
  y: number;
}

export interface Layout {
  placed: Map<string, Placed>;
  layers: string[][];
  width: number;
  height: number;
}

export const LAYER_GAP = 190;
export const ROW_GAP = 64;
export const MARGIN = 40;

export function layerGraph(nodes: LineageNode[], edges: LineageEdge[]): Layout {
  const ids = nodes.map((n) => n.id);
  const byId = new Map(nodes.map((n) => [n.id, n]));
  const incoming = new Map<string, string[]>(ids.map((id) => [id, []]));
  const outgoing = new Map<string, string[]>(ids.map((id) => [id, []]));
  for (const edge of edges) {
    if (!byId.has(edge.from) || !byId.has(edge.to)) continue;
    outgoing.get(edge.from)!.push(edge.to);
    incoming.get(edge.to)!.push(edge.from);
  }

  // Kahn order, then longest path from the sources.
  const indegree = new Map(ids.map((id) => [id, incoming.get(id)!.length]));
  const ready = ids.filter((id) => indegree.get(id) === 0).sort();
  const order: string[] = [];
  while (ready.length > 0) {
    const id = ready.shift()!;
    order.push(id);
    for (const next of outgoing.get(id)!) {
      const left = indegree.get(next)! - 1;
      indegree.set(next, left);
      if (left === 0) ready.push(next);
    }
    ready.sort();
  }
  if (order.length !== ids.length) {
    throw new Error("lineage graph has a cycle");
  }

  const layerOf = new Map<string, number>(ids.map((id) => [id, 0]));
  for (const id of order) {
    for (const next of outgoing.get(id)!) {
      layerOf.set(next, Math.max(layerOf.get(next)!, layerOf.get(id)! + 1));
    }
  }

  const layerCount = Math.max(0, ...[...layerOf.values()]) + 1;
  const layers: string[][] = Array.from({ length: layerCount }, () => []);
  for (const id of [...ids].sort()) {
    layers[layerOf.get(id)!]!.push(id);
  }

  const placed = new Map<string, Placed>();
  layers.forEach((layer, layerIndex) => {
    layer.forEach((id, row) => {
      placed.set(id, {
        node: byId.get(id)!,
        layer: layerIndex,
        row,
        x: MARGIN + layerIndex * LAYER_GAP,
        y: MARGIN + row * ROW_GAP,
      });
    });
  });
  const maxRows = Math.max(1, ...layers.map((l) => l.length));
  return {
    placed,
    layers,
    width: MARGIN * 2 + Math.max(0, layerCount - 1) * LAYER_GAP + 150,
    height: MARGIN * 2 + (maxRows - 1) * ROW_GAP + 40,
  };
}
