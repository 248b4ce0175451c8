import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import {
  isComparisonReport,
  isGameState,
  isHandEstimate,
  isRoundResult,
  isSelection,
  parseEnvelope,
} from "../src/protocol.js";

interface RawEvent {
  type: string;
  seq: number;
  payload: unknown;
}

const STREAM: RawEvent[] = JSON.parse(
  readFileSync("tests/fixtures/stream.json", "utf8")
);

describe("parseEnvelope", () => {
  it("accepts every event from a recorded session", () => {
    for (const event of STREAM) {
      const parsed = parseEnvelope(JSON.stringify(event));
      expect(parsed.ok).toBe(true);
      if (parsed.ok) {
        expect(parsed.envelope.type).toBe(event.type);
        expect(parsed.envelope.seq).toBe(event.seq);
      }
    }
  });

  it.each([
    ["not json at all", "{nope"],
    ["a bare string", JSON.stringify("hello")],
    ["an array", JSON.stringify([1, 2, 3])],
    ["missing type", JSON.stringify({ seq: 1, payload: {} })],
    ["empty type", JSON.stringify({ type: "", seq: 1, payload: {} })],
    ["missing seq", JSON.stringify({ type: "game_state", payload: {} })],
    ["string seq", JSON.stringify({ type: "x", seq: "1", payload: {} })],
    ["missing payload", JSON.stringify({ type: "x", seq: 1 })],
    ["list payload", JSON.stringify({ type: "x", seq: 1, payload: [] })],
  ])("rejects %s with a reason", (_label, raw) => {
    const parsed = parseEnvelope(raw);
    expect(parsed.ok).toBe(false);
    if (!parsed.ok) {
      expect(parsed.reason.length).toBeGreaterThan(0);
    }
  });
});

describe("payload guards", () => {
  const byType = new Map<string, unknown[]>();
  for (const event of STREAM) {
    const bucket = byType.get(event.type) ?? [];
    bucket.push(event.payload);
    byType.set(event.type, bucket);
  }

  it("recognize each recorded payload kind", () => {
    for (const payload of byType.get("game_state") ?? []) {
      expect(isGameState(payload)).toBe(true);
    }
    for (const payload of byType.get("hand_estimate") ?? []) {
      expect(isHandEstimate(payload)).toBe(true);
    }
    for (const payload of byType.get("selection") ?? []) {
      expect(isSelection(payload)).toBe(true);
    }
    for (const payload of byType.get("round_result") ?? []) {
      expect(isRoundResult(payload)).toBe(true);
    }
    expect(byType.get("game_state")?.length).toBeGreaterThan(0);
    expect(byType.get("selection")?.length).toBe(3);
  });

  it("do not cross-match between kinds", () => {
    const state = byType.get("game_state")?.[0];
    const estimate = byType.get("hand_estimate")?.[0];
    expect(isGameState(estimate)).toBe(false);
    expect(isHandEstimate(state)).toBe(false);
    expect(isSelection(state)).toBe(false);
  });

  it("reject near-miss game states", () => {
    const good = byType.get("game_state")?.[0] as Record<string, unknown>;
    expect(isGameState({ ...good, phase: "Loading" })).toBe(false);
    expect(isGameState({ ...good, clock_ms: "0" })).toBe(false);
    expect(isGameState({ ...good, round: { board: [[0]] } })).toBe(false);
  });

  it("reject malformed selections", () => {
    const good = byType.get("selection")?.[0] as Record<string, unknown>;
    expect(isSelection({ ...good, outcome: "meh" })).toBe(false);
    expect(isSelection({ ...good, successes: null })).toBe(false);
  });
});

describe("isComparisonReport", () => {
  const report = JSON.parse(
    readFileSync("tests/fixtures/report_time.json", "utf8")
  );

  it("accepts a service report", () => {
    expect(isComparisonReport(report)).toBe(true);
  });

  it("tolerates missing per-box fields but not a missing skeleton", () => {
    const partial = { ...report, boxplot_data: [{ label: "Manual" }] };
    expect(isComparisonReport(partial)).toBe(true);
    expect(isComparisonReport({ ...report, boxplot_data: "x" })).toBe(false);
    expect(isComparisonReport({ ...report, measure: 5 })).toBe(false);
  });
});
