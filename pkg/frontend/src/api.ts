// Thin typed client for the gateway. The dashboard performs no writes
// except through these documented endpoints and holds no authoritative
// state of its own.

import type {
  AnalysisDetail,
  AnalysisSummary,
  Constraint,
  ElementHit,
  JobRecord,
  LineageGraphDoc,
  PipelineVersion,
} from "./types.js";

export class GatewayError extends Error {
  constructor(
    public readonly code: string,
    message: string,
    public readonly status: number,
  ) {
    super(message);
  }
}

export interface InterventionBody {
  kind: "set_param" | "skip_step" | "cancel_element" | "append_step";
  step?: string;
  key?: string;
  value?: unknown;
  element?: string;
  step_doc?: Record<string, unknown>;
  reason?: string;
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class GatewayClient {
  constructor(
    public readonly baseUrl: string,
    public readonly token: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async call<T>(
    method: string,
    path: string,
    body?: unknown,
    params?: Record<string, string | number | undefined>,
  ): Promise<T> {
    let url = `${this.baseUrl}/api/v1${path}`;
    if (params) {
      const query = Object.entries(params)
        .filter(([, v]) => v !== undefined)
        .map(([k, v]) => `${encodeURIComponent(k)}=${encodeURIComponent(String(v))}`)
        .join("&");
      if (query) url += `?${query}`;
    }
    const response = await this.fetchFn(url, {
      method,
      headers: {
        Authorization: `Bearer ${this.token}`,
        "Content-Type": "application/json",
      },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await response.text();
    if (!response.ok) {
      let code = String(response.status);
      let message = text;
      try {
        const parsed = JSON.parse(text) as { code?: string; message?: string };
        code = parsed.code ?? code;
        message = parsed.message ?? message;
      } catch {
        // non-JSON error body: keep raw text
      }
      throw new GatewayError(code, message, response.status);
    }
    const contentType = response.headers.get("content-type") ?? "";
    if (path.includes("/prov") && !contentType.includes("json")) {
      return text as T;
    }
    return (text ? JSON.parse(text) : {}) as T;
  }

  health(): Promise<{ status: string; items: number; last_seq: number }> {
    return this.call("GET", "/health");
  }

  registerPipeline(doc: unknown): Promise<{ id: string; version: number }> {
    return this.call("POST", "/pipelines", doc);
  }

  pipelineVersion(id: string, version: number): Promise<PipelineVersion> {
    return this.call("GET", `/pipelines/${id}/versions/${version}`);
  }

  registerDataset(doc: unknown): Promise<{ id: string; element_ids: string[] }> {
    return this.call("POST", "/datasets", doc);
  }

  queryDataset(id: string, constraints: Constraint[]): Promise<{ elements: ElementHit[] }> {
    return this.call("POST", `/datasets/${id}/query`, { constraints });
  }

  createAnalysis(body: {
    pipeline: string;
    version?: number;
    dataset: string;
    element_ids: string[];
    params: Record<string, unknown>;
    post_processing?: unknown[];
  }): Promise<AnalysisDetail> {
    return this.call("POST", "/analyses", body);
  }

  listAnalyses(filter?: {
    owner?: string;
    state?: string;
    pipeline?: string;
  }): Promise<{ analyses: AnalysisSummary[] }> {
    return this.call("GET", "/analyses", undefined, filter);
  }

  analysis(id: string): Promise<AnalysisDetail> {
    return this.call("GET", `/analyses/${id}`);
  }

  run(id: string): Promise<{ id: string; state: string }> {
    return this.call("POST", `/analyses/${id}/run`, {});
  }

  clone(id: string, changes: Record<string, unknown>): Promise<AnalysisDetail> {
    return this.call("POST", `/analyses/${id}/clone`, changes);
  }

  share(id: string, grantee: string): Promise<{ id: string; shared_with: string }> {
    return this.call("POST", `/analyses/${id}/share`, { grantee });
  }

  annotate(id: string, text: string): Promise<{ id: string; seq: number }> {
    return this.call("POST", `/analyses/${id}/annotations`, { text });
  }

  intervene(id: string, body: InterventionBody): Promise<{ id: string; applied: string }> {
    return this.call("POST", `/analyses/${id}/interventions`, body);
  }

  jobs(id: string): Promise<{ records: JobRecord[] }> {
    return this.call("GET", `/analyses/${id}/jobs`);
  }

  lineage(node: string, direction: "origins" | "descendants", depth?: number): Promise<LineageGraphDoc> {
    return this.call("GET", `/lineage/${node}`, undefined, { direction, depth });
  }

  provExport(id: string, format: "prov-json" | "prov-n"): Promise<string> {
    return this.call("GET", `/analyses/${id}/prov`, undefined, { format });
  }

  streamUrl(fromSeq: number): string {
    return `${this.baseUrl}/api/v1/events/stream?from_seq=${fromSeq}&token=${encodeURIComponent(this.token)}`;
  }
}
