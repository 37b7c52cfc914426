// Analysis composer: pipeline pick (with version), parameter overrides,
// submit guarded by the gateway's create-analysis preconditions.

import type { GatewayClient } from "../api.js";
import { GatewayError } from "../api.js";
import { clear, h } from "../dom.js";
import {
  coerceParamValue,
  draftProblems,
  recentPipelines,
  rememberPipeline,
  type Draft,
} from "../state.js";
import type { AnalysisDetail, ParamSpec } from "../types.js";

export class ComposeView {
  readonly root: HTMLElement;
  private readonly pipelineInput: HTMLInputElement;
  private readonly versionInput: HTMLInputElement;
  private readonly recentSelect: HTMLSelectElement;
  private readonly paramsBox: HTMLElement;
  private readonly problemsBox: HTMLElement;
  private readonly submitButton: HTMLButtonElement;
  private readonly registerArea: HTMLTextAreaElement;
  private readonly status: HTMLElement;
  private schema: ParamSpec[] = [];

  constructor(
    private readonly client: GatewayClient,
    private readonly draft: Draft,
    private readonly storage: Storage,
    private readonly onLaunched: (detail: AnalysisDetail) => void,
  ) {
    this.pipelineInput = h("input", { id: "pipeline-id", placeholder: "pipeline id", size: "38" });
    this.versionInput = h("input", { id: "pipeline-version", placeholder: "latest", size: "6" });
    this.recentSelect = h("select", { id: "recent-pipelines" }) as HTMLSelectElement;
    this.recentSelect.addEventListener("change", () => {
      const [id, version] = this.recentSelect.value.split("@");
      if (id) {
        this.pipelineInput.value = id;
        this.versionInput.value = version ?? "";
        void this.loadPipeline();
      }
    });
    this.paramsBox = h("div", { id: "params-box" });
    this.problemsBox = h("div", { class: "status", id: "draft-problems" });
    this.submitButton = h(
      "button",
      { id: "submit-analysis", onclick: () => void this.submit() },
      "Create & run",
    ) as HTMLButtonElement;
    this.registerArea = h("textarea", {
      id: "pipeline-doc",
      rows: "6",
      cols: "70",
      placeholder: '{"name": "...", "steps": [...], "param_schema": [...]}',
    }) as HTMLTextAreaElement;
    this.status = h("div", { class: "status" });
    this.root = h(
      "section",
      { class: "pane", id: "compose-pane" },
      h("h2", {}, "Compose analysis"),
      h(
        "div",
        { class: "row" },
        h("label", {}, "Pipeline: "),
        this.pipelineInput,
        h("label", {}, " version: "),
        this.versionInput,
        h("button", { id: "load-pipeline", onclick: () => void this.loadPipeline() }, "Load"),
        this.recentSelect,
      ),
      this.paramsBox,
      this.problemsBox,
      h("div", { class: "row" }, this.submitButton),
      this.status,
      h("details", {},
        h("summary", {}, "Register a new pipeline"),
        this.registerArea,
        h("button", { id: "register-pipeline", onclick: () => void this.registerPipeline() }, "Register"),
      ),
    );
    this.refreshRecent();
    this.refresh();
  }

  private refreshRecent(): void {
    clear(this.recentSelect);
    this.recentSelect.append(h("option", { value: "" }, "recent..."));
    for (const ref of recentPipelines(this.storage)) {
      this.recentSelect.append(
        h("option", { value: `${ref.id}@${ref.version}` }, `${ref.name} v${ref.version}`),
      );
    }
  }

  async registerPipeline(): Promise<void> {
    try {
      const doc = JSON.parse(this.registerArea.value) as { name?: string };
      const result = await this.client.registerPipeline(doc);
      rememberPipeline(this.storage, {
        id: result.id,
        name: doc.name ?? result.id.slice(0, 8),
        version: result.version,
      });
      this.refreshRecent();
      this.pipelineInput.value = result.id;
      this.versionInput.value = String(result.version);
      await this.loadPipeline();
      this.status.textContent = `registered ${doc.name ?? ""} v${result.version}`;
    } catch (error) {
      this.status.textContent =
        error instanceof GatewayError ? `${error.code}: ${error.message}` : String(error);
    }
  }

  async loadPipeline(): Promise<void> {
    const pipeline = this.pipelineInput.value.trim();
    if (!pipeline) return;
    const version = Number.parseInt(this.versionInput.value, 10);
    try {
      // without an explicit version, probe upward for the latest
      let resolved = Number.isNaN(version) ? 1 : version;
      if (Number.isNaN(version)) {
        for (let probe = 2; probe < 100; probe += 1) {
          try {
            await this.client.pipelineVersion(pipeline, probe);
            resolved = probe;
          } catch {
            break;
          }
        }
      }
      const doc = await this.client.pipelineVersion(pipeline, resolved);
      this.draft.pipeline = pipeline;
      this.draft.version = resolved;
      this.schema = doc.definition.param_schema ?? [];
      this.renderParams();
      this.status.textContent = `${doc.definition.name} v${resolved}: ${doc.definition.steps.length} step(s)`;
      this.refresh();
    } catch (error) {
      this.status.textContent =
        error instanceof GatewayError ? `${error.code}: ${error.message}` : String(error);
    }
  }

  private renderParams(): void {
    clear(this.paramsBox);
    if (this.schema.length === 0) {
      this.paramsBox.append(h("p", { class: "small" }, "no declared parameters"));
      return;
    }
    for (const spec of this.schema) {
      const input = h("input", {
        class: "param-input",
        "data-param": spec.name,
        placeholder: spec.default === undefined ? (spec.required ? "required" : "") : String(spec.default),
        oninput: () => {
          const raw = (input as HTMLInputElement).value;
          if (raw === "") delete this.draft.params[spec.name];
          else this.draft.params[spec.name] = coerceParamValue(spec, raw);
          this.refresh();
        },
      });
      this.paramsBox.append(
        h("div", { class: "row" },
          h("label", {}, `${spec.name} (${spec.type})${spec.required ? " *" : ""}: `),
          input,
        ),
      );
    }
  }

  /** Re-evaluates submittability; exposed so element selection can call it. */
  refresh(): void {
    const problems = draftProblems(this.draft, this.schema);
    this.problemsBox.textContent = problems.length ? `blocked: ${problems.join("; ")}` : "ready";
    this.submitButton.disabled = problems.length > 0;
  }

  async submit(): Promise<void> {
    try {
      const detail = await this.client.createAnalysis({
        pipeline: this.draft.pipeline!,
        version: this.draft.version ?? undefined,
        dataset: this.draft.dataset!,
        element_ids: [...this.draft.elements],
        params: { ...this.draft.params },
      });
      await this.client.run(detail.id);
      this.status.textContent = `launched ${detail.id}`;
      this.onLaunched(detail);
    } catch (error) {
      this.status.textContent =
        error instanceof GatewayError ? `${error.code}: ${error.message}` : String(error);
    }
  }
}
