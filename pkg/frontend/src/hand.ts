// Virtual hand input: the dragged palm pose is published on the same
// schema the hand-tracker emulator uses, five fingertip joints synthesized
// as a fixed ring in the palm plane with the shared deterministic basis.

import type { HandUpdateMsg, Vec3 } from "./protocol.js";

export const HAND_RATE_HZ = 30;
export const FINGERTIP_RADIUS = 0.04;
export const FINGERTIP_COUNT = 5;

export interface HandPose {
  palm: Vec3;
  normal: Vec3;
}

// u = normalize(normal x z-hat), falling back to x-hat when the normal is
// (anti)parallel to z; v = normal x u. Matches the server-side convention.
export function planeBasis(normal: Vec3): [Vec3, Vec3] {
  const [nx, ny, nz] = normal;
  let u: Vec3 = [ny * 1 - nz * 0, nz * 0 - nx * 1, nx * 0 - ny * 0]; // normal x (0,0,1)
  const norm = Math.hypot(...u);
  if (norm < 1e-6) {
    u = [1, 0, 0];
  } else {
    u = [u[0] / norm, u[1] / norm, u[2] / norm];
  }
  const v: Vec3 = [
    ny * u[2] - nz * u[1],
    nz * u[0] - nx * u[2],
    nx * u[1] - ny * u[0],
  ];
  return [u, v];
}

export function synthesizeJoints(
  palm: Vec3,
  normal: Vec3,
  radius: number = FINGERTIP_RADIUS,
  count: number = FINGERTIP_COUNT,
): Vec3[] {
  const [u, v] = planeBasis(normal);
  const joints: Vec3[] = [];
  for (let j = 0; j < count; j++) {
    const a = (2 * Math.PI * j) / count;
    joints.push([
      palm[0] + radius * (Math.cos(a) * u[0] + Math.sin(a) * v[0]),
      palm[1] + radius * (Math.cos(a) * u[1] + Math.sin(a) * v[1]),
      palm[2] + radius * (Math.cos(a) * u[2] + Math.sin(a) * v[2]),
    ]);
  }
  return joints;
}

export function makeHandUpdate(
  t: number,
  pose: HandPose,
  handId: "left" | "right" = "right",
): Omit<HandUpdateMsg, "type"> {
  return {
    t,
    hand_id: handId,
    palm: pose.palm,
    normal: pose.normal,
    joints: synthesizeJoints(pose.palm, pose.normal),
    frame: "device",
  };
}

/**
 * Publish the dragged pose at the browser cadence. Returns a stop
 * function. `send` receives the ready-to-encode update.
 */
export function startHandPublisher(
  getPose: () => HandPose,
  send: (update: Omit<HandUpdateMsg, "type">) => void,
  rateHz: number = HAND_RATE_HZ,
  handId: "left" | "right" = "right",
): () => void {
  const periodMs = 1000 / rateHz;
  let elapsed = 0;
  const timer = setInterval(() => {
    elapsed += periodMs / 1000;
    send(makeHandUpdate(elapsed, getPose(), handId));
  }, periodMs);
  return () => clearInterval(timer);
}
