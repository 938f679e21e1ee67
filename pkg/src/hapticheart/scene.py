"""Hologram state: a world-anchored pulsating ellipsoid driven by smoothed BPM.

The heart stays fixed above the array center; only its surface scale
breathes with the beat. Visual pulsation and the haptic envelope read the
same waveform (via the beat phase), so they can never drift apart.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .biosignal import advance_phase, ppg_waveform

DEFAULT_ANCHOR = (0.0, 0.0, 0.30)
DEFAULT_RADII = (0.05, 0.045, 0.06)
DEFAULT_PULSE_AMPLITUDE = 0.08

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class HeartHologram:
    anchor: tuple[float, float, float] = DEFAULT_ANCHOR
    base_radii: tuple[float, float, float] = DEFAULT_RADII
    pulse_amplitude: float = DEFAULT_PULSE_AMPLITUDE
    phase: float = 0.0
    bpm: float | None = None
    flatline: bool = True

    def __post_init__(self):
        if not all(math.isfinite(c) for c in self.anchor):
            raise ValueError(f"non-finite anchor {self.anchor}")
        if not all(r > 0 for r in self.base_radii):
            raise ValueError(f"radii must be positive, got {self.base_radii}")
        if not 0.0 < self.pulse_amplitude < 0.5:
            raise ValueError(f"pulse_amplitude must be in (0, 0.5), got {self.pulse_amplitude}")


@dataclass(frozen=True)
class SceneState:
    heart: HeartHologram = HeartHologram()
    seq: int = 0
    t: float = 0.0


def heartbeat_signal(heart: HeartHologram) -> float | None:
    """Waveform value in [0, 1] at the current beat phase; None when flat.

    This is the single signal source shared by the visual scale and the
    haptic envelope.
    """
    if heart.flatline or heart.bpm is None or heart.bpm <= 0:
        return None
    period = 60.0 / heart.bpm
    tau = (heart.phase / TWO_PI) * period
    return ppg_waveform(heart.bpm, tau)


def surface_scale(heart: HeartHologram) -> float:
    """Instantaneous surface scale: 1 + amplitude * pulse. Flatline pins it at 1."""
    s = heartbeat_signal(heart)
    if s is None:
        return 1.0
    return 1.0 + heart.pulse_amplitude * s


def signed_distance(p, heart: HeartHologram) -> float:
    """Approximate signed distance to the pulsating ellipsoid surface.

    Negative inside, positive outside. The magnitude is approximate for
    unequal radii (exact for a sphere) but the sign is exact, which is all
    the haptic gate relies on.
    """
    scale = surface_scale(heart)
    radii = scale * np.asarray(heart.base_radii, dtype=float)
    q = (np.asarray(p, dtype=float) - np.asarray(heart.anchor)) / radii
    return (float(np.linalg.norm(q)) - 1.0) * float(radii.min())


def contains(p, heart: HeartHologram) -> bool:
    """Exact inside-or-on test in normalized ellipsoid coordinates."""
    scale = surface_scale(heart)
    radii = scale * np.asarray(heart.base_radii, dtype=float)
    q = (np.asarray(p, dtype=float) - np.asarray(heart.anchor)) / radii
    return float(np.linalg.norm(q)) <= 1.0


def update_scene(state: SceneState, smoothed_bpm: float | None, dt: float) -> SceneState:
    """Advance the scene by one frame given the smoothed BPM (or None when stale).

    A None reading keeps the last known BPM but flags flatline; a zero
    reading is an explicit flatline. Either way the phase freezes.
    """
    if dt < 0:
        raise ValueError(f"dt must be >= 0, got {dt}")
    heart = state.heart
    flat = smoothed_bpm is None or smoothed_bpm == 0.0
    bpm = heart.bpm if smoothed_bpm is None else smoothed_bpm
    phase = advance_phase(heart.phase, 0.0 if flat else smoothed_bpm, dt)
    return SceneState(
        heart=replace(heart, phase=phase, bpm=bpm, flatline=flat),
        seq=state.seq + 1,
        t=state.t + dt,
    )
