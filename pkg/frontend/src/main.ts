import { startHandPublisher, HandPose } from "./hand.js";
import { HrControl, HrPreset, startHrPublisher, SLIDER_MAX, SLIDER_MIN } from "./hr.js";
import { encodeHandUpdate, encodeHrUpdate } from "./protocol.js";
import { DEFAULT_VIEW, hudText, render } from "./render.js";
import { ConsoleSocket } from "./socket.js";
import { applyBatch, applyFrame, checkStaleness, initialState, markConnection } from "./state.js";

const params = new URLSearchParams(window.location.search);
const wsUrl = params.get("ws") ?? `ws://${window.location.hostname || "127.0.0.1"}:7341`;

const canvas = document.getElementById("view") as HTMLCanvasElement;
const hud = document.getElementById("hud") as HTMLElement;
const bpmSlider = document.getElementById("bpm-slider") as HTMLInputElement;
const bpmLabel = document.getElementById("bpm-label") as HTMLElement;
const heightSlider = document.getElementById("height-slider") as HTMLInputElement;
const heightLabel = document.getElementById("height-label") as HTMLElement;

bpmSlider.min = String(SLIDER_MIN);
bpmSlider.max = String(SLIDER_MAX);

let state = initialState();
const pose: HandPose = { palm: [0.12, 0.0, 0.3], normal: [0, 0, 1] };
const hrControl = new HrControl();

const socket = new ConsoleSocket(
  wsUrl,
  (msg) => {
    const now = performance.now();
    if (msg.type === "frame_state") state = applyFrame(state, msg, now);
    else if (msg.type === "focal_batch") state = applyBatch(state, msg, now);
    else if (msg.type === "error") console.warn("server error:", msg.code, msg.detail);
  },
  (status) => {
    state = markConnection(state, status);
  },
);
socket.connect();

startHrPublisher(hrControl, (t, bpm) => socket.send(encodeHrUpdate(t, bpm)));
startHandPublisher(
  () => pose,
  (update) => socket.send(encodeHandUpdate(update)),
);

// palm drag on the canvas (top-down x/y)
let dragging = false;
function updatePalmFromPointer(event: PointerEvent): void {
  const rect = canvas.getBoundingClientRect();
  const x = (event.clientX - rect.left - canvas.width / 2) / DEFAULT_VIEW.metersToPx;
  const y = -(event.clientY - rect.top - canvas.height / 2) / DEFAULT_VIEW.metersToPx;
  const clamp = (v: number) => Math.max(-0.2, Math.min(0.2, v));
  pose.palm = [clamp(x), clamp(y), pose.palm[2]];
}
canvas.addEventListener("pointerdown", (e) => {
  dragging = true;
  canvas.setPointerCapture(e.pointerId);
  updatePalmFromPointer(e);
});
canvas.addEventListener("pointermove", (e) => {
  if (dragging) updatePalmFromPointer(e);
});
canvas.addEventListener("pointerup", () => {
  dragging = false;
});

heightSlider.addEventListener("input", () => {
  const z = Number(heightSlider.value) / 100;
  pose.palm = [pose.palm[0], pose.palm[1], z];
  heightLabel.textContent = `${z.toFixed(2)} m`;
});

bpmSlider.addEventListener("input", () => {
  hrControl.setSlider(Number(bpmSlider.value));
  bpmLabel.textContent = `${bpmSlider.value} bpm`;
  markActivePreset("manual");
});

function markActivePreset(name: string): void {
  document.querySelectorAll<HTMLButtonElement>("button[data-preset]").forEach((b) => {
    b.classList.toggle("active", b.dataset["preset"] === name);
  });
}
document.querySelectorAll<HTMLButtonElement>("button[data-preset]").forEach((button) => {
  button.addEventListener("click", () => {
    const preset = button.dataset["preset"] as HrPreset;
    hrControl.setPreset(preset);
    markActivePreset(preset);
  });
});

function frameLoop(): void {
  state = checkStaleness(state, performance.now());
  render(canvas, state, pose);
  hud.textContent = hudText(state, pose);
  requestAnimationFrame(frameLoop);
}
requestAnimationFrame(frameLoop);
