"""Scripted stand-ins for the wearable, the hand tracker, and the haptic device.

Each emulator is a transport-free core with a poll(now) -> due messages
interface. The scenario runner steps them on the virtual clock in-process;
the net module wraps the same cores in socket clients for live runs, so the
device models are identical either way.
"""
from __future__ import annotations

from dataclasses import dataclass

from .biosignal import BPM_MAX
from .hand import HandScript, TrackerConfig, in_tracking_fov, synthesize_joints
from .haptics import (
    FocalLogWriter,
    FocalPointCommand,
    InteractionVolume,
    validate_volume,
)
from .protocol import FocalBatch, HandUpdate, Hello, HrUpdate

EMIT_INTERVAL_S = 5.0


class EmulatorError(ValueError):
    pass


@dataclass(frozen=True)
class HrTrace:
    """BPM keyframes; value held (step) or blended (linear) between them."""

    keyframes: tuple[tuple[float, float], ...]
    interpolation: str = "step"
    emit_interval: float = EMIT_INTERVAL_S

    def __post_init__(self):
        if not self.keyframes:
            raise EmulatorError("trace needs at least one keyframe")
        times = [k[0] for k in self.keyframes]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise EmulatorError("trace times must be strictly increasing")
        if any(not 0 <= bpm <= BPM_MAX for _, bpm in self.keyframes):
            raise EmulatorError(f"trace bpm values must be within [0, {BPM_MAX}]")
        if self.interpolation not in ("step", "linear"):
            raise EmulatorError(f"interpolation must be step or linear, got {self.interpolation!r}")
        if self.emit_interval <= 0:
            raise EmulatorError("emit_interval must be positive")

    def value_at(self, t: float) -> float:
        keys = self.keyframes
        if t <= keys[0][0]:
            return keys[0][1]
        if t >= keys[-1][0]:
            return keys[-1][1]
        hi = next(i for i in range(1, len(keys)) if keys[i][0] > t)
        t0, v0 = keys[hi - 1]
        t1, v1 = keys[hi]
        if self.interpolation == "step":
            return v0
        w = (t - t0) / (t1 - t0)
        return (1 - w) * v0 + w * v1

    @classmethod
    def constant(cls, bpm: float) -> "HrTrace":
        return cls(keyframes=((0.0, bpm),))


class WearableEmulator:
    """Sends one BPM reading every emit interval, starting immediately at t=0."""

    device_kind = "wearable"

    def __init__(self, trace: HrTrace):
        self.trace = trace
        self._next_emit = 0.0

    def hello(self) -> Hello:
        return Hello(device_kind=self.device_kind)

    def poll(self, now: float) -> list[tuple[float, HrUpdate]]:
        """All (emit_time, message) pairs due at or before `now`."""
        out = []
        while self._next_emit <= now + 1e-12:
            t = self._next_emit
            out.append((t, HrUpdate(t=t, bpm=self.trace.value_at(t))))
            self._next_emit += self.trace.emit_interval
        return out


class HandTrackerEmulator:
    """Plays a palm script at the tracker rate, gating frames by the FOV model.

    Frames whose palm falls outside the tracker's frustum or range are never
    emitted, matching a real tracker simply not seeing the hand.
    """

    device_kind = "hand_tracker"

    def __init__(
        self,
        script: HandScript,
        tracker: TrackerConfig | None = None,
        hand_id: str = "right",
        fingertip_radius: float = 0.04,
    ):
        self.script = script
        self.tracker = tracker or TrackerConfig()
        self.hand_id = hand_id
        self.fingertip_radius = fingertip_radius
        self._k = 0

    def hello(self) -> Hello:
        return Hello(device_kind=self.device_kind)

    def frame_at(self, t: float) -> HandUpdate | None:
        """One tracker frame, or None when the palm is out of view."""
        palm, normal = self.script.sample(t)
        if not in_tracking_fov(palm, self.tracker):
            return None
        joints = synthesize_joints(palm, normal, radius=self.fingertip_radius)
        return HandUpdate(
            t=t, hand_id=self.hand_id, palm=palm, normal=normal, joints=joints, frame="device"
        )

    def poll(self, now: float) -> list[tuple[float, HandUpdate]]:
        """Frames due at or before `now` on the exact 1/rate grid."""
        out = []
        period = 1.0 / self.tracker.rate_hz
        while self._k * period <= now + 1e-12:
            t = self._k * period
            self._k += 1
            frame = self.frame_at(t)
            if frame is not None:
                out.append((t, frame))
        return out


class HapticDeviceEmulator:
    """Consumes focal batches, re-validating every command before logging it.

    Validation already happened server-side; this is defense in depth, so
    the violation counter staying at zero is itself a checked invariant.
    """

    device_kind = "haptic_device"

    def __init__(
        self,
        writer: FocalLogWriter | None = None,
        volume: InteractionVolume | None = None,
        keep_commands: bool = True,
    ):
        self.writer = writer
        self.volume = volume or InteractionVolume()
        self.keep_commands = keep_commands
        self.commands: list[FocalPointCommand] = []
        self.accepted = 0
        self.violations = 0

    def hello(self) -> Hello:
        return Hello(device_kind=self.device_kind)

    def consume(self, batch: FocalBatch) -> None:
        for cmd in batch.commands:
            if not validate_volume(cmd.pos, self.volume) or not 0.0 <= cmd.intensity <= 1.0:
                self.violations += 1
                continue
            self.accepted += 1
            if self.keep_commands:
                self.commands.append(cmd)
            if self.writer is not None:
                self.writer.write([cmd])

    def close(self) -> None:
        if self.writer is not None:
            self.writer.close()
