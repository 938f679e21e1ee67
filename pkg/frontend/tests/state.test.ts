import { describe, expect, it } from "vitest";

import type { FocalBatchMsg, FrameStateMsg } from "../src/protocol.js";
import {
  applyBatch,
  applyFrame,
  checkStaleness,
  initialState,
  markConnection,
  STALE_AFTER_MS,
  TRAIL_WINDOW_S,
} from "../src/state.js";

function frame(seq: number, t: number, overrides: Partial<FrameStateMsg> = {}): FrameStateMsg {
  return {
    type: "frame_state",
    seq,
    t,
    bpm: 60,
    flatline: false,
    phase: 0,
    scale: 1,
    anchor: [0, 0, 0.3],
    radii: [0.05, 0.045, 0.06],
    hands: [],
    ...overrides,
  };
}

function batch(seq: number, ts: number[]): FocalBatchMsg {
  return {
    type: "focal_batch",
    seq,
    commands: ts.map((t) => ({ t, hand: "right", pos: [0.03, 0, 0.3], intensity: 1 })),
  };
}

describe("frame handling", () => {
  it("keeps the newest frame only", () => {
    let s = initialState();
    s = applyFrame(s, frame(5, 5 / 60), 100);
    s = applyFrame(s, frame(4, 4 / 60), 120);
    expect(s.frame?.seq).toBe(5);
    expect(s.lastMessageMs).toBe(120);
  });

  it("prunes trail points older than the window", () => {
    let s = initialState();
    s = applyBatch(s, batch(1, [0.1, 0.2]), 0);
    s = applyFrame(s, frame(2, 0.3), 10);
    expect(s.trail).toHaveLength(2);
    s = applyFrame(s, frame(200, 0.2 + TRAIL_WINDOW_S + 0.01), 20);
    expect(s.trail).toHaveLength(0);
  });

  it("empty batches do not grow the trail", () => {
    let s = initialState();
    s = applyBatch(s, batch(1, []), 5);
    expect(s.trail).toHaveLength(0);
    expect(s.lastMessageMs).toBe(5);
  });
});

describe("staleness", () => {
  it("flags after one second without messages", () => {
    let s = markConnection(initialState(), "connected");
    s = applyFrame(s, frame(1, 1 / 60), 1000);
    s = checkStaleness(s, 1000 + STALE_AFTER_MS - 1);
    expect(s.stale).toBe(false);
    s = checkStaleness(s, 1000 + STALE_AFTER_MS + 1);
    expect(s.stale).toBe(true);
  });

  it("clears when a message arrives", () => {
    let s = markConnection(initialState(), "connected");
    s = applyFrame(s, frame(1, 1 / 60), 0);
    s = checkStaleness(s, 2000);
    expect(s.stale).toBe(true);
    s = applyFrame(s, frame(2, 2 / 60), 2100);
    expect(s.stale).toBe(false);
  });

  it("not stale while disconnected (the banner covers that)", () => {
    let s = markConnection(initialState(), "disconnected");
    s = checkStaleness(s, 10_000);
    expect(s.stale).toBe(false);
  });
});
