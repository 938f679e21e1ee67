// Scripted stand-in for the sync server, implementing the documented
// protocol semantics (docs/protocol.md): 60 Hz frames, 6 s smoothing
// window over arrival-stamped readings, intersection-gated focal batches.
// Exists so the console's loop tests stay hermetic.

import type { FocalBatchMsg, FrameStateMsg, HandUpdateMsg, Vec3 } from "../src/protocol.js";

const WINDOW_S = 6.0;
const STALE_S = 15.0;
const PULSE_PEAK = 0.15;
const PULSE_SIGMA = 0.08;

interface Sample {
  t: number;
  bpm: number;
}

export class FakeServer {
  anchor: Vec3 = [0, 0, 0.3];
  radii: Vec3 = [0.05, 0.045, 0.06];
  amplitude = 0.08;
  private samples: Sample[] = [];
  private hand: HandUpdateMsg | null = null;
  private seq = 0;
  private phase = 0;

  /** Deliver one client line, stamped with the server clock. */
  handleLine(line: string, serverNow: number): void {
    const msg = JSON.parse(line) as { type?: string; bpm?: number };
    if (msg.type === "hr_update" && typeof msg.bpm === "number") {
      this.samples.push({ t: serverNow, bpm: msg.bpm });
      const newest = this.samples[this.samples.length - 1]!.t;
      this.samples = this.samples.filter((s) => s.t >= newest - WINDOW_S);
    } else if (msg.type === "hand_update") {
      this.hand = msg as unknown as HandUpdateMsg;
    }
  }

  private smoothed(now: number): number | null {
    const inWindow = this.samples.filter((s) => s.t >= now - WINDOW_S);
    if (inWindow.length > 0) {
      return inWindow.reduce((a, s) => a + s.bpm, 0) / inWindow.length;
    }
    if (this.samples.length > 0 && this.samples[this.samples.length - 1]!.t >= now - STALE_S) {
      return this.samples.reduce((a, s) => a + s.bpm, 0) / this.samples.length;
    }
    return null;
  }

  private pulse(bpm: number): number {
    const period = 60 / bpm;
    const tau = (this.phase / (2 * Math.PI)) * period;
    const peak = PULSE_PEAK * period;
    const sigma = PULSE_SIGMA * period;
    return Math.exp(-((tau - peak) ** 2) / (2 * sigma * sigma));
  }

  private inside(p: Vec3, scale: number): boolean {
    const q = Math.hypot(
      (p[0] - this.anchor[0]) / (scale * this.radii[0]),
      (p[1] - this.anchor[1]) / (scale * this.radii[1]),
      (p[2] - this.anchor[2]) / (scale * this.radii[2]),
    );
    return q <= 1;
  }

  tick(now: number, dt: number): { frame: FrameStateMsg; batch: FocalBatchMsg } {
    const smoothed = this.smoothed(now);
    const flatline = smoothed === null || smoothed === 0;
    if (!flatline) {
      this.phase = (this.phase + 2 * Math.PI * (smoothed! / 60) * dt) % (2 * Math.PI);
    }
    const s = flatline ? 0 : this.pulse(smoothed!);
    const scale = flatline ? 1 : 1 + this.amplitude * s;
    this.seq += 1;

    let active = false;
    const hands: FrameStateMsg["hands"] = [];
    const commands: FocalBatchMsg["commands"] = [];
    if (this.hand !== null) {
      const candidates: Vec3[] = [this.hand.palm, ...this.hand.joints];
      active = candidates.some((p) => this.inside(p, scale));
      hands.push({
        hand_id: this.hand.hand_id,
        haptic_active: active,
        palm: this.hand.palm,
        joints: this.hand.joints,
      });
      if (active) {
        const radius = flatline ? 0.03 : 0.01 + 0.02 * s;
        for (let i = 0; i < 9; i++) {
          const ti = now + (i * dt) / 9;
          const theta = 2 * Math.PI * 100 * ti;
          commands.push({
            t: ti,
            hand: this.hand.hand_id,
            pos: [
              this.hand.palm[0] + radius * Math.cos(theta),
              this.hand.palm[1] + radius * Math.sin(theta),
              this.hand.palm[2],
            ],
            intensity: 1,
          });
        }
      }
    }

    return {
      frame: {
        type: "frame_state",
        seq: this.seq,
        t: now,
        bpm: smoothed,
        flatline,
        phase: this.phase,
        scale,
        anchor: this.anchor,
        radii: this.radii,
        hands,
      },
      batch: { type: "focal_batch", seq: this.seq, commands },
    };
  }
}
