// Console session state. The server is the single source of truth for
// scene and haptic state: this module only accumulates what the server
// said (latest frame, recent focal points) plus connection bookkeeping.

import type { FocalBatchMsg, FrameStateMsg } from "./protocol.js";

export const TRAIL_WINDOW_S = 2.0;
export const STALE_AFTER_MS = 1000;

export type ConnectionStatus = "connecting" | "connected" | "disconnected";

export interface TrailPoint {
  t: number;
  x: number;
  y: number;
  z: number;
  intensity: number;
  hand: string;
}

export interface UiState {
  connection: ConnectionStatus;
  stale: boolean;
  lastMessageMs: number | null;
  frame: FrameStateMsg | null;
  trail: TrailPoint[];
}

export function initialState(): UiState {
  return {
    connection: "connecting",
    stale: false,
    lastMessageMs: null,
    frame: null,
    trail: [],
  };
}

export function markConnection(state: UiState, status: ConnectionStatus): UiState {
  return { ...state, connection: status };
}

function pruneTrail(trail: TrailPoint[], serverNow: number): TrailPoint[] {
  const cutoff = serverNow - TRAIL_WINDOW_S;
  return trail.filter((p) => p.t >= cutoff);
}

export function applyFrame(state: UiState, frame: FrameStateMsg, nowMs: number): UiState {
  if (state.frame !== null && frame.seq <= state.frame.seq) {
    // Late or duplicate frame (newest wins on the server side too).
    return { ...state, lastMessageMs: nowMs, stale: false };
  }
  return {
    ...state,
    frame,
    trail: pruneTrail(state.trail, frame.t),
    lastMessageMs: nowMs,
    stale: false,
  };
}

export function applyBatch(state: UiState, batch: FocalBatchMsg, nowMs: number): UiState {
  if (batch.commands.length === 0) {
    return { ...state, lastMessageMs: nowMs, stale: false };
  }
  const points = batch.commands.map((c) => ({
    t: c.t,
    x: c.pos[0],
    y: c.pos[1],
    z: c.pos[2],
    intensity: c.intensity,
    hand: c.hand,
  }));
  const serverNow = points[points.length - 1]!.t;
  return {
    ...state,
    trail: pruneTrail([...state.trail, ...points], serverNow),
    lastMessageMs: nowMs,
    stale: false,
  };
}

export function checkStaleness(state: UiState, nowMs: number): UiState {
  const stale =
    state.connection === "connected" &&
    state.lastMessageMs !== null &&
    nowMs - state.lastMessageMs > STALE_AFTER_MS;
  if (stale === state.stale) {
    return state;
  }
  return { ...state, stale };
}
