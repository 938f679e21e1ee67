// Top-down 2D view of the interaction volume: the pulsing heart outline,
// hand markers, and the focal trail. Everything drawn about the scene
// comes from server frames; the dragged palm is drawn as a ghost so the
// user can see their own input before the server confirms it.

import type { HandPose } from "./hand.js";
import type { UiState } from "./state.js";

export interface ViewConfig {
  metersToPx: number; // canvas pixels per meter
  volumeHalf: number; // half extent of the volume in x/y, meters
}

export const DEFAULT_VIEW: ViewConfig = { metersToPx: 1100, volumeHalf: 0.2 };

function toCanvas(
  x: number,
  y: number,
  canvas: HTMLCanvasElement,
  view: ViewConfig,
): [number, number] {
  return [canvas.width / 2 + x * view.metersToPx, canvas.height / 2 - y * view.metersToPx];
}

export function render(
  canvas: HTMLCanvasElement,
  state: UiState,
  localPose: HandPose,
  view: ViewConfig = DEFAULT_VIEW,
): void {
  const ctx = canvas.getContext("2d");
  if (ctx === null) return;
  ctx.fillStyle = "#10141a";
  ctx.fillRect(0, 0, canvas.width, canvas.height);

  // interaction volume footprint
  const half = view.volumeHalf * view.metersToPx;
  ctx.strokeStyle = "#2c3540";
  ctx.lineWidth = 1.5;
  ctx.strokeRect(canvas.width / 2 - half, canvas.height / 2 - half, 2 * half, 2 * half);

  const frame = state.frame;
  if (frame !== null) {
    // heart outline, scaled by the server's surface scale
    const [cx, cy] = toCanvas(frame.anchor[0], frame.anchor[1], canvas, view);
    const rx = frame.radii[0] * frame.scale * view.metersToPx;
    const ry = frame.radii[1] * frame.scale * view.metersToPx;
    ctx.beginPath();
    ctx.ellipse(cx, cy, rx, ry, 0, 0, 2 * Math.PI);
    ctx.strokeStyle = frame.flatline ? "#7a8494" : "#e3556f";
    ctx.lineWidth = frame.flatline ? 1.5 : 2.5;
    ctx.stroke();

    // focal trail, newest brightest
    const newest = state.trail.length > 0 ? state.trail[state.trail.length - 1]!.t : 0;
    for (const p of state.trail) {
      const age = Math.min(1, Math.max(0, (newest - p.t) / 2));
      const [px, py] = toCanvas(p.x, p.y, canvas, view);
      ctx.fillStyle = `rgba(120, 220, 255, ${(1 - age) * 0.8 * p.intensity + 0.05})`;
      ctx.beginPath();
      ctx.arc(px, py, 2.2, 0, 2 * Math.PI);
      ctx.fill();
    }

    // server-confirmed hand markers
    for (const hand of frame.hands) {
      const [hx, hy] = toCanvas(hand.palm[0], hand.palm[1], canvas, view);
      ctx.strokeStyle = hand.haptic_active ? "#7bffa0" : "#c9d2dd";
      ctx.lineWidth = 2;
      ctx.beginPath();
      ctx.moveTo(hx - 7, hy);
      ctx.lineTo(hx + 7, hy);
      ctx.moveTo(hx, hy - 7);
      ctx.lineTo(hx, hy + 7);
      ctx.stroke();
      for (const joint of hand.joints) {
        const [jx, jy] = toCanvas(joint[0], joint[1], canvas, view);
        ctx.fillStyle = hand.haptic_active ? "#7bffa0" : "#8a97a6";
        ctx.beginPath();
        ctx.arc(jx, jy, 3, 0, 2 * Math.PI);
        ctx.fill();
      }
    }
  }

  // local (unconfirmed) palm ghost
  const [gx, gy] = toCanvas(localPose.palm[0], localPose.palm[1], canvas, view);
  ctx.strokeStyle = "rgba(255, 214, 102, 0.6)";
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  ctx.arc(gx, gy, 9, 0, 2 * Math.PI);
  ctx.stroke();

  // status banners
  ctx.font = "14px system-ui, sans-serif";
  if (state.connection !== "connected") {
    ctx.fillStyle = "#ff7b72";
    ctx.fillText(state.connection === "connecting" ? "connecting..." : "disconnected", 12, 22);
  } else if (state.stale) {
    ctx.fillStyle = "#ffd666";
    ctx.fillText("stale: no frames for > 1 s", 12, 22);
  }
}

export function hudText(state: UiState, localPose: HandPose): string {
  const frame = state.frame;
  if (frame === null) return "waiting for frames";
  const bpm = frame.bpm === null ? "-" : frame.bpm.toFixed(1);
  const active = frame.hands.some((h) => h.haptic_active);
  return (
    `bpm ${bpm}${frame.flatline ? " (flatline)" : ""}  scale ${frame.scale.toFixed(3)}  ` +
    `haptics ${active ? "ON" : "off"}  palm z ${localPose.palm[2].toFixed(2)} m  ` +
    `trail ${state.trail.length} pts  frame #${frame.seq}`
  );
}
