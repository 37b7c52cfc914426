// Dataset browser: constraint query over element metadata, element selection.

import type { GatewayClient } from "../api.js";
import { GatewayError } from "../api.js";
import { clear, h } from "../dom.js";
import type { Draft } from "../state.js";
import type { Constraint, ElementHit } from "../types.js";

const OPS: Constraint["op"][] = ["eq", "neq", "lt", "lte", "gt", "gte", "contains"];

function parseValue(raw: string): unknown {
  try {
    return JSON.parse(raw);
  } catch {
    return raw;
  }
}

export class DatasetsView {
  readonly root: HTMLElement;
  private readonly rows: HTMLElement;
  private readonly results: HTMLElement;
  private readonly status: HTMLElement;
  private readonly datasetInput: HTMLInputElement;

  constructor(
    private readonly client: GatewayClient,
    private readonly draft: Draft,
    private readonly onSelectionChange: () => void,
  ) {
    this.datasetInput = h("input", {
      id: "dataset-id",
      placeholder: "dataset id",
      size: "38",
    });
    this.rows = h("div", { class: "constraint-rows" });
    this.results = h("div", { class: "results" });
    this.status = h("div", { class: "status" });
    this.root = h(
      "section",
      { class: "pane", id: "datasets-pane" },
      h("h2", {}, "Find data"),
      h(
        "div",
        { class: "row" },
        h("label", {}, "Dataset: "),
        this.datasetInput,
        h("button", { id: "add-constraint", onclick: () => this.addConstraintRow() }, "+ constraint"),
        h("button", { id: "run-query", onclick: () => void this.runQuery() }, "Query"),
      ),
      this.rows,
      this.status,
      this.results,
    );
    this.addConstraintRow();
  }

  private addConstraintRow(): void {
    const attr = h("input", { class: "c-attr", placeholder: "attribute", size: "12" });
    const op = h("select", { class: "c-op" }, ...OPS.map((o) => h("option", { value: o }, o)));
    const value = h("input", { class: "c-value", placeholder: "value", size: "10" });
    const row = h("div", { class: "row constraint" }, attr, op, value,
      h("button", { onclick: () => row.remove() }, "x"));
    this.rows.append(row);
  }

  private collectConstraints(): Constraint[] {
    const constraints: Constraint[] = [];
    for (const row of this.rows.querySelectorAll(".constraint")) {
      const attribute = (row.querySelector(".c-attr") as HTMLInputElement).value.trim();
      if (!attribute) continue;
      const op = (row.querySelector(".c-op") as HTMLSelectElement).value as Constraint["op"];
      const raw = (row.querySelector(".c-value") as HTMLInputElement).value;
      constraints.push({ attribute, op, value: parseValue(raw) });
    }
    return constraints;
  }

  async runQuery(): Promise<void> {
    const dataset = this.datasetInput.value.trim();
    if (!dataset) {
      this.status.textContent = "enter a dataset id first";
      return;
    }
    this.status.textContent = "querying...";
    try {
      const { elements } = await this.client.queryDataset(dataset, this.collectConstraints());
      this.draft.dataset = dataset;
      this.renderResults(elements);
      this.status.textContent = `${elements.length} matching element(s)`;
    } catch (error) {
      this.status.textContent =
        error instanceof GatewayError ? `${error.code}: ${error.message}` : String(error);
    }
  }

  private renderResults(elements: ElementHit[]): void {
    clear(this.results);
    const attrs = [...new Set(elements.flatMap((e) => Object.keys(e.metadata)))].sort();
    const header = h(
      "tr",
      {},
      h("th", {}, ""),
      h("th", {}, "element"),
      ...attrs.map((a) => h("th", {}, a)),
      h("th", {}, "files"),
    );
    const body = elements.map((element) => {
      const checkbox = h("input", {
        type: "checkbox",
        class: "pick-element",
        value: element.id,
        onchange: () => {
          if ((checkbox as HTMLInputElement).checked) {
            if (!this.draft.elements.includes(element.id)) this.draft.elements.push(element.id);
          } else {
            this.draft.elements = this.draft.elements.filter((id) => id !== element.id);
          }
          this.onSelectionChange();
        },
      }) as HTMLInputElement;
      checkbox.checked = this.draft.elements.includes(element.id);
      return h(
        "tr",
        { "data-element": element.id },
        h("td", {}, checkbox),
        h("td", { class: "mono" }, element.id.slice(0, 8)),
        ...attrs.map((a) => h("td", {}, element.metadata[a] === undefined ? "" : String(element.metadata[a]))),
        h("td", { class: "mono small" }, element.files.join(" ")),
      );
    });
    this.results.append(h("table", {}, header, ...body));
  }
}
