import { describe, expect, it } from "vitest";

import { makeHandUpdate } from "../src/hand.js";
import {
  decodeLine,
  encodeHandUpdate,
  encodeHello,
  encodeHrUpdate,
  ProtocolError,
} from "../src/protocol.js";
import { validateLine } from "./validator.js";

describe("emitted messages are byte-valid", () => {
  it("hello", () => {
    const parsed = validateLine(encodeHello()) as { device_kind: string; proto: number };
    expect(parsed.device_kind).toBe("ui");
    expect(parsed.proto).toBe(1);
  });

  it("hr updates across the slider range", () => {
    for (let bpm = 0; bpm <= 250; bpm += 7) {
      validateLine(encodeHrUpdate(bpm * 0.5, bpm));
    }
  });

  it("hand updates across a drag path", () => {
    for (let k = 0; k < 50; k++) {
      const x = 0.2 - 0.008 * k;
      const line = encodeHandUpdate(makeHandUpdate(k / 30, { palm: [x, 0.01 * k - 0.2, 0.3], normal: [0, 0, 1] }));
      validateLine(line);
    }
  });

  it("hand updates with tilted normals stay unit length", () => {
    const n = 1 / Math.sqrt(2);
    const line = encodeHandUpdate(
      makeHandUpdate(0.1, { palm: [0, 0, 0.3], normal: [n, 0, n] }),
    );
    const parsed = validateLine(line) as { joints: number[][] };
    expect(parsed.joints).toHaveLength(5);
  });
});

describe("encoder guards", () => {
  it("rejects non-finite numbers", () => {
    expect(() => encodeHrUpdate(Number.NaN, 60)).toThrow(ProtocolError);
    expect(() => encodeHrUpdate(0, Number.POSITIVE_INFINITY)).toThrow(ProtocolError);
  });

  it("rejects out-of-range bpm", () => {
    expect(() => encodeHrUpdate(0, -1)).toThrow(ProtocolError);
    expect(() => encodeHrUpdate(0, 260)).toThrow(ProtocolError);
  });

  it("rejects non-unit normals", () => {
    expect(() =>
      encodeHandUpdate({
        t: 0,
        hand_id: "right",
        palm: [0, 0, 0.3],
        normal: [0, 0, 2],
        joints: [[0, 0, 0.3]],
        frame: "device",
      }),
    ).toThrow(ProtocolError);
  });
});

describe("decoding server lines", () => {
  const frameLine =
    '{"anchor":[0,0,0.3],"bpm":72.0,"flatline":false,"hands":[{"hand_id":"right",' +
    '"haptic_active":true,"joints":[[0.04,0,0.3]],"palm":[0,0,0.3]}],"phase":1.25,' +
    '"radii":[0.05,0.045,0.06],"scale":1.01,"seq":42,"t":0.7,"type":"frame_state"}';

  it("frame_state", () => {
    const msg = decodeLine(frameLine);
    expect(msg?.type).toBe("frame_state");
    if (msg?.type === "frame_state") {
      expect(msg.seq).toBe(42);
      expect(msg.hands[0]?.haptic_active).toBe(true);
    }
  });

  it("focal_batch", () => {
    const msg = decodeLine(
      '{"commands":[{"hand":"right","intensity":1.0,"pos":[0.03,0,0.3],"t":0.7}],"seq":42,"type":"focal_batch"}',
    );
    expect(msg?.type).toBe("focal_batch");
    if (msg?.type === "focal_batch") {
      expect(msg.commands).toHaveLength(1);
    }
  });

  it("error", () => {
    const msg = decodeLine('{"code":"duplicate-role","detail":"","type":"error"}');
    expect(msg).toEqual({ type: "error", code: "duplicate-role", detail: "" });
  });

  it("unknown types are ignored, not fatal", () => {
    expect(decodeLine('{"type":"future_thing","x":1}')).toBeNull();
  });

  it("malformed lines throw", () => {
    expect(() => decodeLine("{oops")).toThrow(ProtocolError);
    expect(() => decodeLine('{"type":"frame_state","seq":"nope"}')).toThrow(ProtocolError);
  });
});
