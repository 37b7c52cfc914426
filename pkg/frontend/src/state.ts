// View-model logic: draft validation, live-event dedup, SSE parsing.
// Pure functions and small classes so the invariants are unit-testable.

import type { ParamSpec, TransitionEvent } from "./types.js";

/** Dedups server-push events by kernel seq; delivery is at-least-once. */
export class EventCursor {
  lastSeq = 0;

  /** Returns true when the event is new; false for replays/duplicates. */
  ingest(seq: number): boolean {
    if (seq <= this.lastSeq) return false;
    this.lastSeq = seq;
    return true;
  }
}

export interface Draft {
  pipeline: string | null;
  version: number | null;
  dataset: string | null;
  elements: string[];
  params: Record<string, unknown>;
}

export function emptyDraft(): Draft {
  return { pipeline: null, version: null, dataset: null, elements: [], params: {} };
}

/** Required params with neither a default nor a draft value. */
export function missingParams(schema: ParamSpec[], params: Record<string, unknown>): string[] {
  return schema
    .filter((spec) => spec.required && spec.default === undefined)
    .filter((spec) => {
      const value = params[spec.name];
      return value === undefined || value === null || value === "";
    })
    .map((spec) => spec.name);
}

/**
 * Client-side mirror of the gateway's create-analysis preconditions:
 * the draft is submittable only when a pipeline and dataset are chosen,
 * at least one element is selected and every required param is resolved.
 */
export function draftProblems(draft: Draft, schema: ParamSpec[]): string[] {
  const problems: string[] = [];
  if (!draft.pipeline) problems.push("pick a pipeline");
  if (!draft.dataset) problems.push("pick a dataset");
  if (draft.elements.length === 0) problems.push("select at least one data element");
  for (const name of missingParams(schema, draft.params)) {
    problems.push(`required param ${name} is not set`);
  }
  return problems;
}

export function coerceParamValue(spec: ParamSpec, raw: string): unknown {
  if (spec.type === "integer") {
    const parsed = Number.parseInt(raw, 10);
    return Number.isNaN(parsed) ? raw : parsed;
  }
  if (spec.type === "real") {
    const parsed = Number.parseFloat(raw);
    return Number.isNaN(parsed) ? raw : parsed;
  }
  if (spec.type === "boolean") return raw === "true" || raw === "1" || raw === "on";
  return raw;
}

/** Parses complete SSE frames out of a text chunk ("id:"/"data:" lines). */
export function parseSseBlocks(chunk: string): TransitionEvent[] {
  const events: TransitionEvent[] = [];
  for (const block of chunk.split("\n\n")) {
    let seq: number | null = null;
    let data: string | null = null;
    for (const line of block.split("\n")) {
      if (line.startsWith("id: ")) seq = Number.parseInt(line.slice(4), 10);
      if (line.startsWith("data: ")) data = line.slice(6);
    }
    if (seq !== null && data !== null) {
      try {
        const parsed = JSON.parse(data) as Omit<TransitionEvent, "seq">;
        events.push({ ...parsed, seq });
      } catch {
        // partial frame: ignore, the poller will catch up
      }
    }
  }
  return events;
}

/** Recent pipeline registrations, kept only as a picker convenience. */
export interface PipelineRef {
  id: string;
  name: string;
  version: number;
}

const RECENT_KEY = "provtrack.recentPipelines";

export function rememberPipeline(storage: Storage, ref: PipelineRef): void {
  const existing = recentPipelines(storage).filter(
    (p) => !(p.id === ref.id && p.version === ref.version),
  );
  existing.unshift(ref);
  storage.setItem(RECENT_KEY, JSON.stringify(existing.slice(0, 10)));
}

export function recentPipelines(storage: Storage): PipelineRef[] {
  try {
    return JSON.parse(storage.getItem(RECENT_KEY) ?? "[]") as PipelineRef[];
  } catch {
    return [];
  }
}
