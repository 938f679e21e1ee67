// Line protocol client side (see ../docs/protocol.md): one JSON object per
// line. Encoders guard against non-finite numbers so every emitted line is
// valid by construction; decoding tolerates unknown message types by
// returning null (a newer server must not crash an older console).

export const PROTO_VERSION = 1;

export type Vec3 = [number, number, number];

export interface HelloMsg {
  type: "hello";
  device_kind: "wearable" | "hand_tracker" | "headset" | "haptic_device" | "ui";
  proto: number;
}

export interface HrUpdateMsg {
  type: "hr_update";
  t: number;
  bpm: number;
}

export interface HandUpdateMsg {
  type: "hand_update";
  t: number;
  hand_id: "left" | "right";
  palm: Vec3;
  normal: Vec3;
  joints: Vec3[];
  frame: "device" | "headset";
}

export interface HandStatus {
  hand_id: string;
  haptic_active: boolean;
  palm: Vec3;
  joints: Vec3[];
}

export interface FrameStateMsg {
  type: "frame_state";
  seq: number;
  t: number;
  bpm: number | null;
  flatline: boolean;
  phase: number;
  scale: number;
  anchor: Vec3;
  radii: Vec3;
  hands: HandStatus[];
}

export interface FocalCommand {
  t: number;
  hand: string;
  pos: Vec3;
  intensity: number;
}

export interface FocalBatchMsg {
  type: "focal_batch";
  seq: number;
  commands: FocalCommand[];
}

export interface ErrorMsg {
  type: "error";
  code: string;
  detail: string;
}

export type ServerMessage = FrameStateMsg | FocalBatchMsg | ErrorMsg;

export class ProtocolError extends Error {}

function finite(value: number, what: string): number {
  if (typeof value !== "number" || !Number.isFinite(value)) {
    throw new ProtocolError(`${what} must be a finite number, got ${value}`);
  }
  return value;
}

function vec3(value: Vec3, what: string): Vec3 {
  return [finite(value[0], what), finite(value[1], what), finite(value[2], what)];
}

export function encodeHello(): string {
  const msg: HelloMsg = { type: "hello", device_kind: "ui", proto: PROTO_VERSION };
  return JSON.stringify(msg) + "\n";
}

export function encodeHrUpdate(t: number, bpm: number): string {
  const msg: HrUpdateMsg = { type: "hr_update", t: finite(t, "t"), bpm: finite(bpm, "bpm") };
  if (msg.bpm < 0 || msg.bpm > 250) {
    throw new ProtocolError(`bpm ${msg.bpm} outside [0, 250]`);
  }
  return JSON.stringify(msg) + "\n";
}

export function encodeHandUpdate(update: Omit<HandUpdateMsg, "type">): string {
  const msg: HandUpdateMsg = {
    type: "hand_update",
    t: finite(update.t, "t"),
    hand_id: update.hand_id,
    palm: vec3(update.palm, "palm"),
    normal: vec3(update.normal, "normal"),
    joints: update.joints.map((j) => vec3(j, "joint")),
    frame: update.frame,
  };
  const norm = Math.hypot(...msg.normal);
  if (Math.abs(norm - 1) > 1e-6) {
    throw new ProtocolError(`normal must be unit length, |n|=${norm}`);
  }
  return JSON.stringify(msg) + "\n";
}

function isVec3(value: unknown): value is Vec3 {
  return (
    Array.isArray(value) &&
    value.length === 3 &&
    value.every((v) => typeof v === "number" && Number.isFinite(v))
  );
}

// Returns the decoded server message, or null for a message type this
// console does not know (forward compatibility). Malformed lines throw.
export function decodeLine(line: string): ServerMessage | null {
  let data: unknown;
  try {
    data = JSON.parse(line);
  } catch (err) {
    throw new ProtocolError(`invalid JSON line: ${String(err)}`);
  }
  if (typeof data !== "object" || data === null || Array.isArray(data)) {
    throw new ProtocolError("message must be a JSON object");
  }
  const record = data as Record<string, unknown>;
  const tag = record["type"];
  if (typeof tag !== "string") {
    throw new ProtocolError("missing type tag");
  }
  if (tag === "frame_state") {
    const hands = record["hands"];
    if (!Array.isArray(hands)) throw new ProtocolError("hands must be an array");
    const parsedHands: HandStatus[] = hands.map((h) => {
      const hand = h as Record<string, unknown>;
      if (
        typeof hand["hand_id"] !== "string" ||
        typeof hand["haptic_active"] !== "boolean" ||
        !isVec3(hand["palm"]) ||
        !Array.isArray(hand["joints"]) ||
        !hand["joints"].every(isVec3)
      ) {
        throw new ProtocolError("bad hand status");
      }
      return {
        hand_id: hand["hand_id"],
        haptic_active: hand["haptic_active"],
        palm: hand["palm"],
        joints: hand["joints"],
      };
    });
    if (
      typeof record["seq"] !== "number" ||
      typeof record["t"] !== "number" ||
      (record["bpm"] !== null && typeof record["bpm"] !== "number") ||
      typeof record["flatline"] !== "boolean" ||
      typeof record["phase"] !== "number" ||
      typeof record["scale"] !== "number" ||
      !isVec3(record["anchor"]) ||
      !isVec3(record["radii"])
    ) {
      throw new ProtocolError("bad frame_state fields");
    }
    return {
      type: "frame_state",
      seq: record["seq"],
      t: record["t"],
      bpm: record["bpm"] as number | null,
      flatline: record["flatline"],
      phase: record["phase"],
      scale: record["scale"],
      anchor: record["anchor"],
      radii: record["radii"],
      hands: parsedHands,
    };
  }
  if (tag === "focal_batch") {
    const commands = record["commands"];
    if (typeof record["seq"] !== "number" || !Array.isArray(commands)) {
      throw new ProtocolError("bad focal_batch fields");
    }
    const parsed: FocalCommand[] = commands.map((c) => {
      const cmd = c as Record<string, unknown>;
      if (
        typeof cmd["t"] !== "number" ||
        typeof cmd["hand"] !== "string" ||
        !isVec3(cmd["pos"]) ||
        typeof cmd["intensity"] !== "number"
      ) {
        throw new ProtocolError("bad focal command");
      }
      return { t: cmd["t"], hand: cmd["hand"], pos: cmd["pos"], intensity: cmd["intensity"] };
    });
    return { type: "focal_batch", seq: record["seq"], commands: parsed };
  }
  if (tag === "error") {
    if (typeof record["code"] !== "string") throw new ProtocolError("bad error message");
    return {
      type: "error",
      code: record["code"],
      detail: typeof record["detail"] === "string" ? record["detail"] : "",
    };
  }
  return null;
}
