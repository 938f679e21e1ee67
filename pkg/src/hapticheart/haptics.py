"""Focal-point command synthesis: traveling-circle patterns and heartbeat envelopes.

The base sensation is a single focal point per interacting hand traversing a
circle at 100 Hz in the palm plane. The heartbeat signal modulates either
the circle's intensity or its radius; a flatline freezes both. Commands are
emitted at a fixed sub-sampling rate within each frame and anything falling
outside the device's usable volume is dropped, never clamped.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Union

import numpy as np

from .geometry import plane_basis
from .hand import HandFrame, intersect_targets, synthesize_joints
from .scene import HeartHologram, SceneState, heartbeat_signal, surface_scale, update_scene

MODULATION_BAND_HZ = (5.0, 500.0)

TWO_PI = 2.0 * math.pi


class HapticsError(ValueError):
    pass


class ZeroRadius(HapticsError):
    pass


class ModulationOutOfPerceptibleRange(HapticsError):
    pass


@dataclass(frozen=True)
class InteractionVolume:
    """Usable focusing region above the array center (closed bounds, meters)."""

    x: tuple[float, float] = (-0.20, 0.20)
    y: tuple[float, float] = (-0.20, 0.20)
    z: tuple[float, float] = (0.0, 0.60)


@dataclass(frozen=True)
class StmCircleParams:
    r_max: float = 0.03
    r_min: float = 0.01
    draw_rate: float = 100.0
    base_intensity: float = 1.0
    min_intensity: float = 0.2
    command_rate: float = 500.0

    def __post_init__(self):
        if not 0 < self.r_min <= self.r_max:
            raise HapticsError(f"need 0 < r_min <= r_max, got {self.r_min}, {self.r_max}")
        if self.draw_rate <= 0 or self.command_rate <= 0:
            raise HapticsError("draw_rate and command_rate must be positive")
        if not 0 <= self.min_intensity <= self.base_intensity <= 1:
            raise HapticsError("need 0 <= min_intensity <= base_intensity <= 1")


@dataclass(frozen=True)
class PulsingIntensity:
    """Heartbeat mapped to circle intensity; radius held at r_max."""


@dataclass(frozen=True)
class PulsingRadius:
    """Heartbeat mapped to circle radius; intensity held at base."""


@dataclass(frozen=True)
class AmFixed:
    """Fixed focal point with sinusoidal intensity at a perceptible frequency."""

    frequency: float

    def __post_init__(self):
        lo, hi = MODULATION_BAND_HZ
        if not lo <= self.frequency <= hi:
            raise ModulationOutOfPerceptibleRange(
                f"modulation {self.frequency} Hz outside perceptible band [{lo}, {hi}]"
            )


HapticMode = Union[PulsingIntensity, PulsingRadius, AmFixed]

MODE_NAMES = ("pulsing_intensity", "pulsing_radius", "am")


def mode_from_name(name: str, am_frequency: float = 200.0) -> HapticMode:
    if name == "pulsing_intensity":
        return PulsingIntensity()
    if name == "pulsing_radius":
        return PulsingRadius()
    if name == "am":
        return AmFixed(am_frequency)
    raise HapticsError(f"unknown haptic mode {name!r}; expected one of {MODE_NAMES}")


def mode_name(mode: HapticMode) -> str:
    if isinstance(mode, PulsingIntensity):
        return "pulsing_intensity"
    if isinstance(mode, PulsingRadius):
        return "pulsing_radius"
    return "am"


@dataclass(frozen=True)
class FocalPointCommand:
    t: float
    hand_id: str
    pos: tuple[float, float, float]
    intensity: float

    def __post_init__(self):
        if not 0.0 <= self.intensity <= 1.0:
            raise HapticsError(f"intensity {self.intensity} outside [0, 1]")
        if not all(math.isfinite(c) for c in self.pos):
            raise HapticsError(f"non-finite focal position {self.pos}")


def validate_volume(p, volume: InteractionVolume = InteractionVolume()) -> bool:
    x, y, z = float(p[0]), float(p[1]), float(p[2])
    return (
        volume.x[0] <= x <= volume.x[1]
        and volume.y[0] <= y <= volume.y[1]
        and volume.z[0] <= z <= volume.z[1]
    )


def stm_circle_point(center, normal, radius: float, t: float, draw_rate: float = 100.0) -> np.ndarray:
    """Point on the traveling circle at time t.

    theta = 2*pi*draw_rate*t in the deterministic (u, v) basis of the plane
    perpendicular to `normal`, so the trace is periodic in absolute time.
    """
    if radius <= 0:
        raise ZeroRadius(f"radius must be > 0, got {radius}")
    u, v = plane_basis(normal)
    theta = TWO_PI * draw_rate * t
    return np.asarray(center, dtype=float) + radius * (math.cos(theta) * u + math.sin(theta) * v)


def pulsing_intensity(s_norm: float, params: StmCircleParams = StmCircleParams()) -> float:
    """Linear map from the normalized heartbeat signal to command intensity."""
    if not 0.0 <= s_norm <= 1.0:
        raise HapticsError(f"s_norm {s_norm} outside [0, 1]")
    return params.min_intensity + (params.base_intensity - params.min_intensity) * s_norm


def pulsing_radius(s_norm: float, params: StmCircleParams = StmCircleParams()) -> float:
    """Linear map from the normalized heartbeat signal to circle radius."""
    if not 0.0 <= s_norm <= 1.0:
        raise HapticsError(f"s_norm {s_norm} outside [0, 1]")
    return params.r_min + (params.r_max - params.r_min) * s_norm


def frame_envelope(
    scene: SceneState, mode: HapticMode, params: StmCircleParams = StmCircleParams()
) -> tuple[float, float]:
    """(radius, intensity) for this frame's commands.

    Reads the scene's waveform value once per frame; a flatline yields the
    static sensation (full radius, base intensity).
    """
    s = heartbeat_signal(scene.heart)
    if s is None or isinstance(mode, AmFixed):
        return params.r_max, params.base_intensity
    if isinstance(mode, PulsingIntensity):
        return params.r_max, pulsing_intensity(s, params)
    return pulsing_radius(s, params), params.base_intensity


def _sample_count(dt: float, command_rate: float) -> int:
    return max(1, math.ceil(dt * command_rate - 1e-9))


def _active_hands(scene: SceneState, hands) -> list[tuple[HandFrame, tuple[float, float, float]]]:
    """(frame, selected target) per intersecting hand, in stable hand order."""
    out = []
    for frame in sorted(hands, key=lambda h: h.hand_id):
        targets = intersect_targets(frame, scene.heart)
        if targets:
            out.append((frame, targets[0]))
    return out


def render_tick(
    scene: SceneState,
    hands,
    mode: HapticMode,
    t: float,
    dt: float,
    params: StmCircleParams = StmCircleParams(),
    volume: InteractionVolume = InteractionVolume(),
) -> tuple[list[FocalPointCommand], int]:
    """Commands for one frame of a pulsing-circle mode.

    Returns (commands, dropped) where dropped counts trajectory samples that
    left the interaction volume. Hands not touching the hologram produce
    nothing.
    """
    if dt <= 0:
        raise HapticsError(f"dt must be > 0, got {dt}")
    if isinstance(mode, AmFixed):
        return am_render_tick(scene, hands, mode.frequency, t, dt, params, volume)
    radius, intensity = frame_envelope(scene, mode, params)
    n = _sample_count(dt, params.command_rate)
    commands: list[FocalPointCommand] = []
    dropped = 0
    for frame, target in _active_hands(scene, hands):
        for i in range(n):
            ti = t + i * dt / n
            pos = stm_circle_point(target, frame.palm_normal, radius, ti, params.draw_rate)
            if not validate_volume(pos, volume):
                dropped += 1
                continue
            commands.append(
                FocalPointCommand(
                    t=ti,
                    hand_id=frame.hand_id,
                    pos=(float(pos[0]), float(pos[1]), float(pos[2])),
                    intensity=intensity,
                )
            )
    return commands, dropped


def am_render_tick(
    scene: SceneState,
    hands,
    frequency: float,
    t: float,
    dt: float,
    params: StmCircleParams = StmCircleParams(),
    volume: InteractionVolume = InteractionVolume(),
) -> tuple[list[FocalPointCommand], int]:
    """Commands for one frame of amplitude modulation at a fixed focal point."""
    lo, hi = MODULATION_BAND_HZ
    if not lo <= frequency <= hi:
        raise ModulationOutOfPerceptibleRange(
            f"modulation {frequency} Hz outside perceptible band [{lo}, {hi}]"
        )
    if dt <= 0:
        raise HapticsError(f"dt must be > 0, got {dt}")
    n = _sample_count(dt, params.command_rate)
    commands: list[FocalPointCommand] = []
    dropped = 0
    for frame, target in _active_hands(scene, hands):
        if not validate_volume(target, volume):
            dropped += n
            continue
        for i in range(n):
            ti = t + i * dt / n
            intensity = 0.5 * (1.0 + math.sin(TWO_PI * frequency * ti))
            commands.append(
                FocalPointCommand(t=ti, hand_id=frame.hand_id, pos=target, intensity=intensity)
            )
    return commands, dropped


@dataclass(frozen=True)
class OfflineRender:
    commands: tuple[FocalPointCommand, ...]
    frame_times: tuple[float, ...]
    scales: tuple[float, ...]
    target: tuple[float, float, float]
    normal: tuple[float, float, float]
    dropped: int


def render_offline(
    bpm: float,
    mode: HapticMode,
    duration: float,
    frame_rate: float = 60.0,
    params: StmCircleParams = StmCircleParams(),
    heart: HeartHologram | None = None,
    hand_id: str = "right",
) -> OfflineRender:
    """Run the synthesizer without any networking: a static palm at the anchor.

    Steps a virtual frame loop for `duration` seconds at a constant BPM
    (0 = flatline) and collects every emitted command, plus the per-frame
    surface scale for envelope checks.
    """
    if duration <= 0:
        raise HapticsError(f"duration must be > 0, got {duration}")
    heart = heart or HeartHologram()
    normal = (0.0, 0.0, 1.0)
    palm = heart.anchor
    frame = HandFrame(
        t=0.0,
        hand_id=hand_id,
        palm_center=palm,
        palm_normal=normal,
        joints=synthesize_joints(palm, normal),
    )
    scene = SceneState(heart=heart)
    dt = 1.0 / frame_rate
    n_frames = int(round(duration * frame_rate))
    commands: list[FocalPointCommand] = []
    frame_times: list[float] = []
    scales: list[float] = []
    dropped = 0
    for k in range(1, n_frames + 1):
        now = k / frame_rate
        scene = SceneState(
            heart=update_scene(scene, bpm, dt).heart, seq=scene.seq + 1, t=now
        )
        cmds, miss = render_tick(scene, [frame], mode, now, dt, params)
        commands.extend(cmds)
        dropped += miss
        frame_times.append(now)
        scales.append(surface_scale(scene.heart))
    return OfflineRender(
        commands=tuple(commands),
        frame_times=tuple(frame_times),
        scales=tuple(scales),
        target=palm,
        normal=normal,
        dropped=dropped,
    )


def format_command_row(cmd: FocalPointCommand) -> str:
    return (
        f"{cmd.t:.6f},{cmd.hand_id},{cmd.pos[0]:.6f},{cmd.pos[1]:.6f},"
        f"{cmd.pos[2]:.6f},{cmd.intensity:.6f}"
    )


class FocalLogWriter:
    """One CSV log per run, with the mode and parameters echoed up top."""

    def __init__(self, stream: IO[str], mode: HapticMode, params: StmCircleParams):
        self._stream = stream
        header = f"# mode={mode_name(mode)}"
        if isinstance(mode, AmFixed):
            header += f" am_frequency={mode.frequency}"
        header += (
            f" r_max={params.r_max} r_min={params.r_min} draw_rate={params.draw_rate}"
            f" base_intensity={params.base_intensity} min_intensity={params.min_intensity}"
            f" command_rate={params.command_rate}"
        )
        self._stream.write(header + "\n")
        self._stream.write("# t,hand,x,y,z,intensity\n")

    def write(self, commands) -> None:
        for cmd in commands:
            self._stream.write(format_command_row(cmd) + "\n")

    @classmethod
    def open(cls, path, mode: HapticMode, params: StmCircleParams):
        stream = Path(path).open("w", newline="\n")
        writer = cls(stream, mode, params)
        writer._owns_stream = True
        return writer

    def close(self) -> None:
        if getattr(self, "_owns_stream", False):
            self._stream.close()
