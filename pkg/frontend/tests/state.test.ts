import { describe, expect, it } from "vitest";

import {
  EventCursor,
  coerceParamValue,
  draftProblems,
  emptyDraft,
  missingParams,
  parseSseBlocks,
  recentPipelines,
  rememberPipeline,
} from "../src/state.js";
import type { ParamSpec } from "../src/types.js";

const spec = (over: Partial<ParamSpec>): ParamSpec => ({
  name: "p",
  type: "text",
  required: false,
  ...over,
});

describe("EventCursor", () => {
  it("accepts strictly increasing seqs and rejects duplicates", () => {
    const cursor = new EventCursor();
    expect(cursor.ingest(1)).toBe(true);
    expect(cursor.ingest(2)).toBe(true);
    expect(cursor.ingest(2)).toBe(false); // at-least-once redelivery
    expect(cursor.ingest(1)).toBe(false); // replay from an earlier cursor
    expect(cursor.ingest(5)).toBe(true); // gaps are fine, order is what matters
    expect(cursor.lastSeq).toBe(5);
  });
});

describe("draft validation", () => {
  it("lists required params without defaults or values", () => {
    const schema = [
      spec({ name: "iters", type: "integer", required: true }),
      spec({ name: "tag", required: true, default: "x" }),
      spec({ name: "opt" }),
    ];
    expect(missingParams(schema, {})).toEqual(["iters"]);
    expect(missingParams(schema, { iters: 3 })).toEqual([]);
    expect(missingParams(schema, { iters: "" })).toEqual(["iters"]);
  });

  it("blocks submission until the gateway preconditions hold client-side", () => {
    const schema = [spec({ name: "subject", required: true })];
    const draft = emptyDraft();
    expect(draftProblems(draft, schema).length).toBe(4);
    draft.pipeline = "p1";
    draft.version = 1;
    draft.dataset = "d1";
    draft.elements = ["e1"];
    expect(draftProblems(draft, schema)).toEqual(["required param subject is not set"]);
    draft.params["subject"] = "s001";
    expect(draftProblems(draft, schema)).toEqual([]);
  });

  it("coerces parameter input text by declared type", () => {
    expect(coerceParamValue(spec({ type: "integer" }), "42")).toBe(42);
    expect(coerceParamValue(spec({ type: "real" }), "0.5")).toBe(0.5);
    expect(coerceParamValue(spec({ type: "boolean" }), "true")).toBe(true);
    expect(coerceParamValue(spec({ type: "boolean" }), "no")).toBe(false);
    expect(coerceParamValue(spec({ type: "text" }), "7")).toBe("7");
    expect(coerceParamValue(spec({ type: "integer" }), "abc")).toBe("abc"); // left for server validation
  });
});

describe("parseSseBlocks", () => {
  it("extracts id and data from complete frames", () => {
    const chunk =
      'id: 7\nevent: transition\ndata: {"item":"a1","to_state":"Running","at":"t"}\n\n' +
      'id: 9\nevent: transition\ndata: {"item":"a1","to_state":"Completed","at":"t2"}\n\n';
    const events = parseSseBlocks(chunk);
    expect(events.map((e) => [e.seq, e.to_state])).toEqual([
      [7, "Running"],
      [9, "Completed"],
    ]);
  });

  it("ignores partial or malformed frames", () => {
    expect(parseSseBlocks("id: 3\ndata: {broken")).toEqual([]);
    expect(parseSseBlocks("event: transition\ndata: {}")).toEqual([]);
  });
});

describe("recent pipelines", () => {
  it("stores most-recent-first without duplicates", () => {
    sessionStorage.clear();
    rememberPipeline(sessionStorage, { id: "p1", name: "CIVET", version: 1 });
    rememberPipeline(sessionStorage, { id: "p1", name: "CIVET", version: 2 });
    rememberPipeline(sessionStorage, { id: "p1", name: "CIVET", version: 1 });
    const refs = recentPipelines(sessionStorage);
    expect(refs.map((r) => r.version)).toEqual([1, 2]);
  });
});
