// End-to-end console loop against the protocol-conformant fake server:
// the focal trail must track the server's haptic_active gate within two
// frames, heart-rate steps must converge within the 11 s budget, and every
// line the console emits must pass the independent validator.

import { describe, expect, it } from "vitest";

import { makeHandUpdate } from "../src/hand.js";
import { HrControl } from "../src/hr.js";
import { decodeLine, encodeHandUpdate, encodeHrUpdate, Vec3 } from "../src/protocol.js";
import { applyBatch, applyFrame, initialState, UiState } from "../src/state.js";
import { FakeServer } from "./fakeserver.js";
import { validateLine } from "./validator.js";

const FRAME_DT = 1 / 60;

interface TickRecord {
  t: number;
  active: boolean;
  trailAdvanced: boolean;
  bpm: number | null;
}

/**
 * Run the console loop for `duration` seconds: hand poses published at
 * 30 Hz (every second tick), heart rate every 5 s, server ticking at 60 Hz.
 */
function runLoop(
  duration: number,
  palmAt: (t: number) => Vec3,
  hrAt?: (t: number, control: HrControl) => void,
): { records: TickRecord[]; emitted: string[] } {
  const server = new FakeServer();
  const control = new HrControl();
  control.setSlider(60);
  let state: UiState = initialState();
  const emitted: string[] = [];
  const records: TickRecord[] = [];

  const send = (line: string, serverNow: number) => {
    emitted.push(line);
    server.handleLine(line, serverNow);
  };

  const ticks = Math.round(duration / FRAME_DT);
  let nextHr = 0;
  let newestTrailT = Number.NEGATIVE_INFINITY;
  for (let k = 1; k <= ticks; k++) {
    const now = k / 60;
    hrAt?.(now, control);
    // due client emissions, delivered before the tick that includes them
    while (nextHr * 5 <= now) {
      send(encodeHrUpdate(nextHr * 5, control.nextValue()), nextHr * 5);
      nextHr += 1;
    }
    if (k % 2 === 0) {
      const t = now;
      send(encodeHandUpdate(makeHandUpdate(t, { palm: palmAt(t), normal: [0, 0, 1] })), t);
    }
    const { frame, batch } = server.tick(now, FRAME_DT);
    const frameMsg = decodeLine(JSON.stringify(frame));
    const batchMsg = decodeLine(JSON.stringify(batch));
    if (frameMsg?.type === "frame_state") state = applyFrame(state, frameMsg, now * 1000);
    if (batchMsg?.type === "focal_batch") state = applyBatch(state, batchMsg, now * 1000);
    const newest =
      state.trail.length > 0 ? state.trail[state.trail.length - 1]!.t : Number.NEGATIVE_INFINITY;
    const advanced = newest > newestTrailT;
    newestTrailT = newest;
    records.push({
      t: now,
      active: frame.hands.some((h) => h.haptic_active),
      trailAdvanced: advanced,
      bpm: frame.bpm,
    });
  }
  return { records, emitted };
}

describe("criterion: focal trail follows the haptic gate", () => {
  // palm sweeps in, holds at the center, sweeps back out
  const palmAt = (t: number): Vec3 => {
    if (t < 2) return [0.15, 0, 0.3];
    if (t < 6) return [0.15 - (0.15 * (t - 2)) / 4, 0, 0.3];
    if (t < 8) return [0, 0, 0.3];
    if (t < 12) return [(0.15 * (t - 8)) / 4, 0, 0.3];
    return [0.15, 0, 0.3];
  };

  it("trail starts and stops within 2 frames of haptic_active", () => {
    const { records, emitted } = runLoop(13, palmAt);
    const firstActive = records.findIndex((r) => r.active);
    const firstGrowth = records.findIndex((r) => r.trailAdvanced);
    expect(firstActive).toBeGreaterThan(0);
    expect(Math.abs(firstGrowth - firstActive)).toBeLessThanOrEqual(2);

    const lastActive = records.map((r) => r.active).lastIndexOf(true);
    const lastGrowth = records.map((r) => r.trailAdvanced).lastIndexOf(true);
    expect(lastActive).toBeLessThan(records.length - 1); // hand actually left
    expect(Math.abs(lastGrowth - lastActive)).toBeLessThanOrEqual(2);

    // no trail growth while the gate is off (away from the transitions)
    for (let i = 0; i < records.length; i++) {
      const nearTransition = Math.abs(i - firstActive) <= 2 || Math.abs(i - lastActive) <= 2;
      if (!records[i]!.active && !nearTransition) {
        expect(records[i]!.trailAdvanced).toBe(false);
      }
    }
    for (const line of emitted) validateLine(line);
  });
});

describe("criterion: heart-rate step converges within 11 s", () => {
  it("slider 60 -> 120 settles at 120 +- 1", () => {
    const stepAt = 7.2;
    let stepped = false;
    const { records, emitted } = runLoop(
      25,
      () => [0, 0, 0.3],
      (t, control) => {
        if (!stepped && t >= stepAt) {
          control.setSlider(120);
          stepped = true;
        }
      },
    );
    const converged = records.find((r) => r.bpm !== null && Math.abs(r.bpm - 120) <= 1);
    expect(converged).toBeDefined();
    expect(converged!.t).toBeLessThanOrEqual(stepAt + 11);
    for (const r of records) {
      if (r.t >= stepAt + 11) {
        expect(r.bpm).not.toBeNull();
        expect(Math.abs(r.bpm! - 120)).toBeLessThanOrEqual(1);
      }
    }
    for (const line of emitted) validateLine(line);
  });

  it("flatline preset freezes the scene", () => {
    const { records } = runLoop(
      8,
      () => [0, 0, 0.3],
      (t, control) => {
        if (control.preset !== "flatline" && t >= 0.5) control.setPreset("flatline");
      },
    );
    const late = records.filter((r) => r.t >= 6.5);
    expect(late.length).toBeGreaterThan(0);
    expect(late.every((r) => r.bpm === 0 || r.bpm === null)).toBe(true);
  });
});

describe("validator rejects corrupted output", () => {
  it("catches a tampered hand line", () => {
    const line = encodeHandUpdate(makeHandUpdate(0, { palm: [0, 0, 0.3], normal: [0, 0, 1] }));
    const tampered = line.replace('"frame":"device"', '"frame":"teapot"');
    expect(() => validateLine(tampered)).toThrow();
  });

  it("catches extra fields", () => {
    const line = encodeHrUpdate(0, 60).trimEnd();
    const withExtra = line.slice(0, -1) + ',"sneaky":1}\n';
    expect(() => validateLine(withExtra)).toThrow();
  });
});
