import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import {
  FINGERTIP_RADIUS,
  HAND_RATE_HZ,
  makeHandUpdate,
  planeBasis,
  startHandPublisher,
  synthesizeJoints,
} from "../src/hand.js";
import { encodeHandUpdate, Vec3 } from "../src/protocol.js";
import { validateLine } from "./validator.js";

const dot = (a: Vec3, b: Vec3) => a[0] * b[0] + a[1] * b[1] + a[2] * b[2];

describe("plane basis", () => {
  it("z-up normal gives the x/y convention", () => {
    const [u, v] = planeBasis([0, 0, 1]);
    expect(u).toEqual([1, 0, 0]);
    expect(v).toEqual([0, 1, 0]);
  });

  it("is orthonormal for tilted normals", () => {
    const n = 1 / Math.sqrt(3);
    const normal: Vec3 = [n, n, n];
    const [u, v] = planeBasis(normal);
    expect(Math.abs(dot(u, normal))).toBeLessThan(1e-9);
    expect(Math.abs(dot(v, normal))).toBeLessThan(1e-9);
    expect(Math.abs(dot(u, v))).toBeLessThan(1e-9);
    expect(Math.hypot(...u)).toBeCloseTo(1, 9);
    expect(Math.hypot(...v)).toBeCloseTo(1, 9);
  });
});

describe("joint synthesis", () => {
  it("five fingertips on the ring in the palm plane", () => {
    const palm: Vec3 = [0.05, -0.02, 0.31];
    const joints = synthesizeJoints(palm, [0, 0, 1]);
    expect(joints).toHaveLength(5);
    for (const j of joints) {
      const d = Math.hypot(j[0] - palm[0], j[1] - palm[1], j[2] - palm[2]);
      expect(d).toBeCloseTo(FINGERTIP_RADIUS, 9);
      expect(j[2]).toBeCloseTo(palm[2], 12);
    }
  });
});

describe("publisher", () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  it("publishes near the browser cadence and all lines validate", () => {
    const lines: string[] = [];
    const stop = startHandPublisher(
      () => ({ palm: [0.1, 0, 0.3] as Vec3, normal: [0, 0, 1] as Vec3 }),
      (update) => lines.push(encodeHandUpdate(update)),
    );
    vi.advanceTimersByTime(1000);
    stop();
    expect(lines.length).toBeGreaterThanOrEqual(HAND_RATE_HZ - 1);
    expect(lines.length).toBeLessThanOrEqual(HAND_RATE_HZ + 1);
    for (const line of lines) {
      validateLine(line);
    }
  });

  it("update carries the dragged pose", () => {
    const update = makeHandUpdate(0.5, { palm: [0.07, -0.01, 0.28], normal: [0, 0, 1] }, "left");
    expect(update.hand_id).toBe("left");
    expect(update.palm).toEqual([0.07, -0.01, 0.28]);
    expect(update.frame).toBe("device");
  });
});
