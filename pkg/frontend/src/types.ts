// Mirrors of the gateway's /api/v1 response bodies.

export interface Constraint {
  attribute: string;
  op: "eq" | "neq" | "lt" | "lte" | "gt" | "gte" | "contains";
  value: unknown;
}

export interface ElementHit {
  id: string;
  metadata: Record<string, unknown>;
  files: string[];
}

export interface ParamSpec {
  name: string;
  type: "text" | "integer" | "real" | "boolean" | "file";
  default?: unknown;
  required: boolean;
}

export interface StepDoc {
  name: string;
  script_ref: string;
  inputs?: string[];
  fork?: number | string;
  depends_on?: string[];
}

export interface PipelineDefinitionDoc {
  name: string;
  steps: StepDoc[];
  default_env: Record<string, unknown>;
  common_dirs: string[];
  param_schema: ParamSpec[];
}

export interface PipelineVersion {
  id: string;
  version: number;
  definition: PipelineDefinitionDoc;
}

export interface ElementStatus {
  id: string;
  element: string;
  state: "Pending" | "Dispatched" | "Succeeded" | "Failed";
}

export interface Outcome {
  result_link: string;
  produced_by: string[];
  registered_at: string;
}

export interface AnalysisDetail {
  id: string;
  owner: string;
  state: string;
  pipeline: string;
  pipeline_version: number;
  dataset: string;
  element_ids: string[];
  params: Record<string, unknown>;
  post_processing: StepDoc[];
  shared_with: string[];
  annotations: { author: string; at: string; text: string }[];
  cloned_from: string | null;
  elements: ElementStatus[];
  outcome: Outcome | null;
  started_at: string | null;
  finished_at: string | null;
}

export interface AnalysisSummary {
  id: string;
  owner: string;
  state: string;
  pipeline: string;
  pipeline_version: number;
  dataset: string;
  element_count: number;
  created_at: string;
  started_at: string | null;
  finished_at: string | null;
  cloned_from: string | null;
}

export interface JobRecord {
  id: string;
  analysis: string;
  analysis_element: string | null;
  element: string | null;
  step: string;
  script_ref: string;
  attempt: number;
  fork_index: number;
  fork_width: number;
  input_files: string[];
  params: Record<string, unknown>;
  outputs: string[];
  started_at: string;
  ended_at: string;
  duration_s: number;
  resource: string;
  status: "Succeeded" | "Failed";
  error: string | null;
  links: string[];
  pipeline: string;
  pipeline_version: number;
  consumed_element: boolean;
}

export interface LineageNode {
  kind: string;
  id: string;
}

export interface LineageEdge {
  from: string;
  to: string;
  relation: string;
}

export interface LineageGraphDoc {
  root: string;
  nodes: LineageNode[];
  edges: LineageEdge[];
}

export interface TransitionEvent {
  seq: number;
  item: string;
  to_state: string;
  at: string;
}

export const WORKFLOW_STEP = "<workflow>";
export const TERMINAL_STATES = ["Completed", "PartiallyFailed", "Failed"];
