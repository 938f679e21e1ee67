"""Post-run measurement: focal-log parsing, period estimation, crossing oracle.

These are the checking tools for scenario assertions and acceptance runs.
The crossing oracle deliberately re-derives hologram containment from the
closed-form surface definition on a dense time grid, independent of the
frame loop it is used to judge.
"""
from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .geometry import plane_basis
from .hand import HandScript, synthesize_joints
from .haptics import FocalPointCommand
from .scene import HeartHologram

TWO_PI = 2.0 * math.pi


def read_focal_log(path) -> list[FocalPointCommand]:
    """Parse a focal command CSV (t,hand,x,y,z,intensity); `#` lines skipped."""
    commands = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        if len(parts) != 6:
            raise ValueError(f"{path}:{lineno}: expected 6 columns")
        commands.append(
            FocalPointCommand(
                t=float(parts[0]),
                hand_id=parts[1],
                pos=(float(parts[2]), float(parts[3]), float(parts[4])),
                intensity=float(parts[5]),
            )
        )
    return commands


def frame_index(t: float, frame_rate: float = 60.0) -> int:
    return int(math.floor(t * frame_rate + 1e-6))


def per_frame_series(
    commands, center, frame_rate: float = 60.0
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-frame (times, radii, intensities) taken from each frame's first command.

    Radius is the distance from `center`, which must be the focal trajectory
    center (the selected hand target) for the radius to mean anything.
    """
    center = np.asarray(center, dtype=float)
    seen: dict[int, FocalPointCommand] = {}
    for cmd in commands:
        idx = frame_index(cmd.t, frame_rate)
        if idx not in seen:
            seen[idx] = cmd
    idxs = sorted(seen)
    times = np.array([seen[i].t for i in idxs])
    radii = np.array([np.linalg.norm(np.asarray(seen[i].pos) - center) for i in idxs])
    intensities = np.array([seen[i].intensity for i in idxs])
    return times, radii, intensities


def fundamental_period(series, dt: float, threshold: float = 0.6) -> float | None:
    """Fundamental period of a uniformly sampled series via autocorrelation.

    Returns the lag of the first local autocorrelation maximum that reaches
    `threshold` of the zero-lag value (unbiased normalization), or None for
    a constant series.
    """
    x = np.asarray(series, dtype=float)
    n = len(x)
    if n < 4:
        return None
    x = x - x.mean()
    if np.allclose(x, 0.0):
        return None
    ac = np.correlate(x, x, mode="full")[n - 1 :]
    ac = ac / np.arange(n, 0, -1)
    floor = threshold * ac[0]
    for k in range(1, n - 1):
        if ac[k] >= ac[k - 1] and ac[k] >= ac[k + 1] and ac[k] >= floor:
            return k * dt
    return None


def circle_angles(positions, center, normal) -> np.ndarray:
    """Angles of positions around `center` in the deterministic circle basis."""
    u, v = plane_basis(normal)
    rel = np.atleast_2d(np.asarray(positions, dtype=float)) - np.asarray(center, dtype=float)
    return np.arctan2(rel @ v, rel @ u)


def angular_increments(angles) -> np.ndarray:
    """Consecutive angle steps wrapped to [0, 2*pi)."""
    diffs = np.diff(np.asarray(angles, dtype=float))
    return np.mod(diffs, TWO_PI)


def pulse_value(bpm: float, t: float) -> float:
    # Oracle-side re-derivation of the beat pulse; keep in sync with the
    # published waveform definition, not with biosignal internals.
    period = 60.0 / bpm
    tau = t % period
    peak, sigma = 0.15 * period, 0.08 * period
    return math.exp(-((tau - peak) ** 2) / (2.0 * sigma * sigma))


def hologram_crossing_times(
    script: HandScript,
    heart: HeartHologram,
    bpm: float,
    duration: float,
    fingertip_radius: float = 0.04,
    coarse_dt: float = 1e-3,
    refine_tol: float = 1e-7,
) -> list[tuple[float, bool]]:
    """Transition times of "any hand point touches the pulsating surface".

    Dense scan plus bisection, evaluated directly from the script's closed
    form and the surface definition (continuous phase at constant BPM).
    Returns (time, now_inside) pairs in chronological order.
    """
    anchor = np.asarray(heart.anchor, dtype=float)
    base = np.asarray(heart.base_radii, dtype=float)

    def inside(t: float) -> bool:
        palm, normal = script.sample(t)
        scale = 1.0 if bpm <= 0 else 1.0 + heart.pulse_amplitude * pulse_value(bpm, t)
        radii = scale * base
        points = [palm, *synthesize_joints(palm, normal, radius=fingertip_radius)]
        return any(
            np.linalg.norm((np.asarray(p) - anchor) / radii) <= 1.0 for p in points
        )

    transitions: list[tuple[float, bool]] = []
    n = int(round(duration / coarse_dt))
    prev_t, prev_in = 0.0, inside(0.0)
    for k in range(1, n + 1):
        t = k * coarse_dt
        now_in = inside(t)
        if now_in != prev_in:
            lo, hi = prev_t, t
            while hi - lo > refine_tol:
                mid = 0.5 * (lo + hi)
                if inside(mid) == prev_in:
                    lo = mid
                else:
                    hi = mid
            transitions.append((hi, now_in))
        prev_t, prev_in = t, now_in
    return transitions


def active_transitions(frames, hand_id: str | None = None) -> list[tuple[float, bool]]:
    """(t, now_active) at each change of any-hand haptic_active across frames."""
    transitions = []
    prev = False
    for fs in frames:
        active = any(
            h.haptic_active for h in fs.hands if hand_id is None or h.hand_id == hand_id
        )
        if active != prev:
            transitions.append((fs.t, active))
        prev = active
    return transitions
