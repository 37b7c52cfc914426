// Lineage viewer: layered DAG rendered as SVG with kind-distinct styling;
// clicking a node refocuses the query, clicking a job record opens its
// detail panel.

import type { GatewayClient } from "../api.js";
import { GatewayError } from "../api.js";
import { clear, h, svgEl } from "../dom.js";
import { layerGraph } from "../dag.js";
import type { JobRecord, LineageGraphDoc } from "../types.js";

const NODE_COLORS: Record<string, string> = {
  "data-element": "#7fb069",
  "job-record": "#5b9bd5",
  analysis: "#c78fd6",
  outcome: "#e8a54b",
  "pipeline-version": "#9aa5b1",
};

export class LineageView {
  readonly root: HTMLElement;
  private readonly nodeInput: HTMLInputElement;
  private readonly directionSelect: HTMLSelectElement;
  private readonly depthSlider: HTMLInputElement;
  private readonly depthLabel: HTMLElement;
  private readonly canvas: HTMLElement;
  private readonly detail: HTMLElement;
  private readonly status: HTMLElement;
  private recordIndex = new Map<string, JobRecord>();

  constructor(private readonly client: GatewayClient) {
    this.nodeInput = h("input", { id: "lineage-node", placeholder: "node id", size: "44" });
    this.directionSelect = h("select", { id: "lineage-direction" },
      h("option", { value: "origins" }, "origins"),
      h("option", { value: "descendants" }, "descendants"),
    ) as HTMLSelectElement;
    this.depthSlider = h("input", {
      id: "lineage-depth",
      type: "range",
      min: "0",
      max: "8",
      value: "8",
    }) as HTMLInputElement;
    this.depthLabel = h("span", { id: "depth-label" }, "unlimited");
    this.depthSlider.addEventListener("input", () => {
      this.depthLabel.textContent = this.depthSlider.value === "8" ? "unlimited" : this.depthSlider.value;
    });
    this.canvas = h("div", { id: "lineage-canvas" });
    this.detail = h("div", { id: "lineage-detail" });
    this.status = h("div", { class: "status" });
    this.root = h(
      "section",
      { class: "pane", id: "lineage-pane" },
      h("h2", {}, "Lineage"),
      h("div", { class: "row" },
        this.nodeInput,
        this.directionSelect,
        h("label", {}, " depth: "),
        this.depthSlider,
        this.depthLabel,
        h("button", { id: "lineage-go", onclick: () => void this.show() }, "Show"),
      ),
      this.status,
      this.canvas,
      this.detail,
    );
  }

  /** Index job records so clicking a record node can show its details. */
  provideRecords(records: JobRecord[]): void {
    for (const record of records) this.recordIndex.set(record.id, record);
  }

  async focus(node: string): Promise<void> {
    this.nodeInput.value = node;
    await this.show();
  }

  async show(): Promise<void> {
    const node = this.nodeInput.value.trim();
    if (!node) return;
    const depth = this.depthSlider.value === "8" ? undefined : Number.parseInt(this.depthSlider.value, 10);
    this.status.textContent = "";
    try {
      const graph = await this.client.lineage(
        node,
        this.directionSelect.value as "origins" | "descendants",
        depth,
      );
      this.render(graph);
      this.status.textContent = `${graph.nodes.length} node(s), ${graph.edges.length} edge(s)`;
    } catch (error) {
      clear(this.canvas);
      this.status.textContent =
        error instanceof GatewayError && error.code === "UnknownNode"
          ? `not found: ${node}`
          : error instanceof GatewayError
            ? `${error.code}: ${error.message}`
            : String(error);
    }
  }

  private render(graph: LineageGraphDoc): void {
    clear(this.canvas);
    clear(this.detail);
    const layout = layerGraph(graph.nodes, graph.edges);
    const svg = svgEl("svg", {
      width: String(layout.width),
      height: String(layout.height),
      viewBox: `0 0 ${layout.width} ${layout.height}`,
      role: "img",
    });
    for (const edge of graph.edges) {
      const from = layout.placed.get(edge.from);
      const to = layout.placed.get(edge.to);
      if (!from || !to) continue;
      svg.append(svgEl("line", {
        x1: String(from.x + 70), y1: String(from.y + 14),
        x2: String(to.x), y2: String(to.y + 14),
        class: "edge",
      }));
      svg.append(Object.assign(svgEl("text", {
        x: String((from.x + 70 + to.x) / 2),
        y: String((from.y + to.y) / 2 + 8),
        class: "edge-label",
      }), { textContent: edge.relation }));
    }
    for (const placed of layout.placed.values()) {
      const group = svgEl("g", { class: `node kind-${placed.node.kind}` });
      const rect = svgEl("rect", {
        x: String(placed.x), y: String(placed.y),
        width: "140", height: "28", rx: "6",
        fill: NODE_COLORS[placed.node.kind] ?? "#ccc",
        "data-node": placed.node.id,
        class: placed.node.id === graph.root ? "root-node" : "",
      });
      rect.addEventListener("click", () => void this.onNodeClick(placed.node.kind, placed.node.id));
      const label = svgEl("text", {
        x: String(placed.x + 6), y: String(placed.y + 18),
        class: "node-label",
      });
      label.textContent = `${placed.node.kind}:${placed.node.id.slice(0, 10)}`;
      group.append(rect, label);
      svg.append(group);
    }
    this.canvas.append(svg);
  }

  private async onNodeClick(kind: string, id: string): Promise<void> {
    if (kind === "job-record") {
      this.showRecordDetail(id);
      return;
    }
    await this.focus(id); // refocus the lineage query on the clicked node
  }

  private showRecordDetail(recordId: string): void {
    clear(this.detail);
    const record = this.recordIndex.get(recordId);
    if (!record) {
      this.detail.append(h("p", { class: "small" }, `record ${recordId} (open its run to load details)`));
      return;
    }
    this.detail.append(
      h("h4", {}, `job record ${recordId.slice(0, 8)}`),
      h("table", { id: "record-detail" },
        h("tr", {}, h("th", {}, "step"), h("td", {}, record.step)),
        h("tr", {}, h("th", {}, "status"), h("td", {}, record.status)),
        h("tr", {}, h("th", {}, "started"), h("td", { class: "mono" }, record.started_at)),
        h("tr", {}, h("th", {}, "ended"), h("td", { class: "mono" }, record.ended_at)),
        h("tr", {}, h("th", {}, "wall"), h("td", {}, `${record.duration_s.toFixed(2)}s`)),
        h("tr", {}, h("th", {}, "resource"), h("td", { class: "mono" }, record.resource)),
        h("tr", {}, h("th", {}, "error"), h("td", {}, record.error ?? "none")),
        h("tr", {}, h("th", {}, "outputs"), h("td", { class: "mono small" }, record.outputs.join(" "))),
      ),
    );
  }
}
