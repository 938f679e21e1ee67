// Heart-rate input: a manual slider plus presets that ramp the value one
// step per emission, mirroring how a wearer's rate would drift. Flatline
// sends an explicit 0.

export const HR_INTERVAL_MS = 5000;
export const SLIDER_MIN = 30;
export const SLIDER_MAX = 200;

export type HrPreset = "manual" | "rest" | "exercise" | "meditation" | "flatline";

const REST_BPM = 60;
const EXERCISE_TARGET = 140;
const EXERCISE_STEP = 10; // bpm per 5 s emission
const MEDITATION_TARGET = 55;
const MEDITATION_STEP = 5;

export class HrControl {
  preset: HrPreset = "manual";
  private current = REST_BPM;

  get value(): number {
    return this.preset === "flatline" ? 0 : this.current;
  }

  setSlider(bpm: number): void {
    this.preset = "manual";
    this.current = Math.min(SLIDER_MAX, Math.max(SLIDER_MIN, bpm));
  }

  setPreset(preset: HrPreset): void {
    this.preset = preset;
    if (preset === "rest") {
      this.current = REST_BPM;
    }
  }

  /** Value to emit now; presets advance one ramp step per call. */
  nextValue(): number {
    if (this.preset === "exercise") {
      this.current = Math.min(EXERCISE_TARGET, this.current + EXERCISE_STEP);
    } else if (this.preset === "meditation") {
      this.current = Math.max(MEDITATION_TARGET, this.current - MEDITATION_STEP);
    }
    return this.value;
  }
}

/**
 * Emit one reading immediately, then every interval. Returns a stop
 * function. `send` receives (elapsed seconds, bpm).
 */
export function startHrPublisher(
  control: HrControl,
  send: (t: number, bpm: number) => void,
  intervalMs: number = HR_INTERVAL_MS,
): () => void {
  let elapsed = 0;
  send(0, control.nextValue());
  const timer = setInterval(() => {
    elapsed += intervalMs / 1000;
    send(elapsed, control.nextValue());
  }, intervalMs);
  return () => clearInterval(timer);
}
