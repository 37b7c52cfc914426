// Run monitor: live per-element status fed by the SSE stream (deduped by
// seq) and reconciled with polls; provenance table, interventions,
// clone/share/annotate.

import type { GatewayClient } from "../api.js";
import { GatewayError } from "../api.js";
import { clear, h } from "../dom.js";
import { EventCursor, parseSseBlocks } from "../state.js";
import {
  TERMINAL_STATES,
  WORKFLOW_STEP,
  type AnalysisDetail,
  type JobRecord,
} from "../types.js";

export class MonitorView {
  readonly root: HTMLElement;
  private readonly list: HTMLElement;
  private readonly detailBox: HTMLElement;
  private readonly status: HTMLElement;
  readonly cursor = new EventCursor();
  private current: string | null = null;
  private timer: ReturnType<typeof setInterval> | null = null;
  private stream: EventSource | null = null;
  private lastDetail: AnalysisDetail | null = null;
  private knownSteps: string[] = [];

  constructor(
    private readonly client: GatewayClient,
    private readonly onShowLineage: (node: string) => void,
    private readonly onRecords: (records: JobRecord[]) => void = () => {},
  ) {
    this.list = h("div", { id: "analysis-list" });
    this.detailBox = h("div", { id: "analysis-detail" });
    this.status = h("div", { class: "status" });
    this.root = h(
      "section",
      { class: "pane", id: "monitor-pane" },
      h("h2", {}, "Runs"),
      h("div", { class: "row" },
        h("button", { id: "refresh-analyses", onclick: () => void this.refreshList() }, "Refresh"),
        this.status,
      ),
      this.list,
      this.detailBox,
    );
  }

  async refreshList(): Promise<void> {
    const { analyses } = await this.client.listAnalyses();
    clear(this.list);
    const header = h("tr", {},
      h("th", {}, "analysis"), h("th", {}, "state"), h("th", {}, "pipeline"),
      h("th", {}, "elements"), h("th", {}, "owner"), h("th", {}, "from"));
    const rows = analyses.map((a) =>
      h("tr", {
        class: "analysis-row",
        "data-analysis": a.id,
        onclick: () => void this.watch(a.id),
      },
        h("td", { class: "mono" }, a.id.slice(0, 8)),
        h("td", { class: `state-${a.state}` }, a.state),
        h("td", { class: "mono" }, `${a.pipeline.slice(0, 8)} v${a.pipeline_version}`),
        h("td", {}, String(a.element_count)),
        h("td", {}, a.owner),
        h("td", { class: "mono" }, a.cloned_from ? a.cloned_from.slice(0, 8) : ""),
      ),
    );
    this.list.append(h("table", {}, header, ...rows));
  }

  /** Focus one analysis: poll + subscribe until it reaches a terminal state. */
  async watch(analysisId: string): Promise<void> {
    this.stopWatching();
    this.current = analysisId;
    await this.poll();
    this.timer = setInterval(() => void this.poll(), 800);
    this.subscribe();
  }

  stopWatching(): void {
    if (this.timer !== null) clearInterval(this.timer);
    this.timer = null;
    if (this.stream) this.stream.close();
    this.stream = null;
  }

  private subscribe(): void {
    if (typeof EventSource === "undefined") return; // tests poll instead
    this.stream = new EventSource(this.client.streamUrl(this.cursor.lastSeq));
    this.stream.addEventListener("transition", (event) => {
      const message = event as MessageEvent<string>;
      const seq = Number.parseInt((message.lastEventId ?? "0") || "0", 10);
      if (!this.cursor.ingest(seq)) return; // duplicate delivery
      void this.poll();
    });
  }

  /** Test hook: feed a raw SSE chunk through the same dedup path. */
  ingestSseChunk(chunk: string): number {
    let fresh = 0;
    for (const event of parseSseBlocks(chunk)) {
      if (this.cursor.ingest(event.seq)) fresh += 1;
    }
    if (fresh > 0) void this.poll();
    return fresh;
  }

  private async poll(): Promise<void> {
    if (!this.current) return;
    const detail = await this.client.analysis(this.current);
    this.lastDetail = detail;
    const records = TERMINAL_STATES.includes(detail.state)
      ? (await this.client.jobs(this.current)).records
      : [];
    if (records.length > 0) this.onRecords(records);
    this.renderDetail(detail, records);
    if (TERMINAL_STATES.includes(detail.state)) this.stopWatching();
  }

  get displayedState(): string | null {
    return this.lastDetail?.state ?? null;
  }

  private renderDetail(detail: AnalysisDetail, records: JobRecord[]): void {
    clear(this.detailBox);
    this.knownSteps = [
      ...new Set(records.filter((r) => r.step !== WORKFLOW_STEP).map((r) => r.step)),
    ];
    const elementRows = detail.elements.map((element) =>
      h("tr", { "data-element-item": element.id },
        h("td", { class: "mono" }, element.element.slice(0, 8)),
        h("td", { class: `state-${element.state} element-state` }, element.state),
      ),
    );
    const outcome = detail.outcome
      ? h("p", { id: "outcome-link" }, "result: ",
          h("a", { href: detail.outcome.result_link, class: "mono" }, detail.outcome.result_link))
      : null;
    const annotations = detail.annotations.map((a) =>
      h("li", {}, `${a.author} @ ${a.at}: ${a.text}`));

    const children: (HTMLElement | null)[] = [
      h("h3", {}, `analysis ${detail.id.slice(0, 8)} `,
        h("span", { id: "analysis-state", class: `state-${detail.state}` }, detail.state)),
      h("table", {},
        h("tr", {}, h("th", {}, "element"), h("th", {}, "state")),
        ...elementRows),
      outcome,
      records.length > 0 ? this.renderRecords(records) : null,
      h("ul", { id: "annotations" }, ...annotations),
      this.renderActions(detail),
    ];
    this.detailBox.append(...children.filter((c): c is HTMLElement => c !== null));
  }

  private renderRecords(records: JobRecord[]): HTMLElement {
    const rows = records.map((record) =>
      h("tr", { class: "job-row", "data-record": record.id },
        h("td", { class: "mono" }, record.id.slice(0, 8)),
        h("td", {}, record.step),
        h("td", { class: `state-${record.status}` }, record.status),
        h("td", {}, record.attempt > 1 ? `attempt ${record.attempt}` : ""),
        h("td", { class: "mono small" }, `${record.duration_s.toFixed(1)}s`),
        h("td", { class: "mono small" }, record.resource),
        h("td", { class: "small" }, record.error ?? ""),
      ),
    );
    return h("div", {},
      h("h4", {}, "provenance records"),
      h("table", { id: "records-table" },
        h("tr", {}, h("th", {}, "record"), h("th", {}, "step"), h("th", {}, "status"),
          h("th", {}, ""), h("th", {}, "wall"), h("th", {}, "resource"), h("th", {}, "error")),
        ...rows),
    );
  }

  private renderActions(detail: AnalysisDetail): HTMLElement {
    const running = detail.state === "Running";
    const terminal = TERMINAL_STATES.includes(detail.state);

    const kind = h("select", { id: "iv-kind" },
      ...["set_param", "skip_step", "cancel_element", "append_step"].map((k) =>
        h("option", { value: k }, k))) as HTMLSelectElement;
    const stepSelect = h("select", { id: "iv-step" },
      h("option", { value: "" }, "step..."),
    ) as HTMLSelectElement;
    // already-dispatched steps are greyed out: only pending work is modifiable
    const dispatched = new Set(this.knownSteps);
    const instanceSteps = this.stepsOfPipeline(detail);
    for (const step of instanceSteps) {
      const option = h("option", { value: step }, step) as HTMLOptionElement;
      if (dispatched.has(step) && !terminal) option.disabled = true;
      if (dispatched.has(step)) option.textContent = `${step} (dispatched)`;
      stepSelect.append(option);
    }
    const key = h("input", { id: "iv-key", placeholder: "key", size: "8" });
    const value = h("input", { id: "iv-value", placeholder: "value", size: "8" });
    const ivStatus = h("span", { class: "status", id: "iv-status" });
    const apply = h("button", {
      id: "iv-apply",
      onclick: () => void this.applyIntervention(detail.id, kind, stepSelect, key, value, ivStatus),
    }, "Intervene") as HTMLButtonElement;
    apply.disabled = !running;

    const grantee = h("input", { id: "share-with", placeholder: "user id", size: "8" });
    const note = h("input", { id: "note-text", placeholder: "annotation", size: "24" });
    const actionStatus = h("span", { class: "status", id: "action-status" });

    return h("div", { class: "actions" },
      h("div", { class: "row" }, kind, stepSelect, key, value, apply, ivStatus),
      h("div", { class: "row" },
        h("button", {
          id: "clone-analysis",
          disabled: !terminal,
          onclick: () => void this.cloneCurrent(detail.id, actionStatus),
        }, "Clone & re-run"),
        h("button", {
          id: "share-analysis",
          onclick: () => void this.shareCurrent(detail.id, (grantee as HTMLInputElement).value, actionStatus),
        }, "Share"),
        grantee,
        h("button", {
          id: "annotate-analysis",
          onclick: () => void this.annotateCurrent(detail.id, (note as HTMLInputElement).value, actionStatus),
        }, "Annotate"),
        note,
        h("button", {
          id: "show-lineage",
          disabled: !detail.outcome,
          onclick: () => this.onShowLineage(`outcome-${detail.id}`),
        }, "Lineage"),
        actionStatus,
      ),
    );
  }

  private stepsOfPipeline(detail: AnalysisDetail): string[] {
    // the pinned step list is not in the detail body; fall back to what the
    // records show plus post-processing declarations
    const steps = new Set<string>(this.knownSteps);
    for (const post of detail.post_processing) steps.add(post.name);
    return [...steps].sort();
  }

  private async applyIntervention(
    analysis: string,
    kind: HTMLSelectElement,
    step: HTMLSelectElement,
    key: HTMLElement,
    value: HTMLElement,
    status: HTMLElement,
  ): Promise<void> {
    try {
      await this.client.intervene(analysis, {
        kind: kind.value as "set_param",
        step: step.value || undefined,
        key: (key as HTMLInputElement).value || undefined,
        value: (value as HTMLInputElement).value || undefined,
        reason: "dashboard intervention",
      });
      status.textContent = "applied";
    } catch (error) {
      status.textContent =
        error instanceof GatewayError ? `${error.code}: ${error.message}` : String(error);
    }
  }

  private async cloneCurrent(analysis: string, status: HTMLElement): Promise<void> {
    try {
      const clone = await this.client.clone(analysis, {});
      await this.client.run(clone.id);
      status.textContent = `cloned to ${clone.id.slice(0, 8)}`;
      await this.refreshList();
      await this.watch(clone.id);
    } catch (error) {
      status.textContent =
        error instanceof GatewayError ? `${error.code}: ${error.message}` : String(error);
    }
  }

  private async shareCurrent(analysis: string, grantee: string, status: HTMLElement): Promise<void> {
    try {
      await this.client.share(analysis, grantee);
      status.textContent = `shared with ${grantee}`;
    } catch (error) {
      status.textContent =
        error instanceof GatewayError ? `${error.code}: ${error.message}` : String(error);
    }
  }

  private async annotateCurrent(analysis: string, text: string, status: HTMLElement): Promise<void> {
    try {
      const result = await this.client.annotate(analysis, text);
      status.textContent = `annotated (seq ${result.seq})`;
      await this.poll();
    } catch (error) {
      status.textContent =
        error instanceof GatewayError ? `${error.code}: ${error.message}` : String(error);
    }
  }
}
