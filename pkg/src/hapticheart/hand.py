"""Skeletal hand frames, tracker field-of-view gating, and hologram targeting.

The emulated tracker sits at the array center looking up (+z). Its limits
are modeled as a pyramidal frustum: two independent angular half-widths
plus a range cap. Frames whose palm falls outside are never emitted.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import plane_basis
from .scene import HeartHologram, signed_distance

UNIT_TOL = 1e-6
MAX_JOINTS = 25
FINGERTIP_RADIUS = 0.04
FINGERTIP_COUNT = 5
STALE_FRAME_S = 0.2

HAND_IDS = ("left", "right")


class HandError(ValueError):
    pass


@dataclass(frozen=True)
class TrackerConfig:
    fov_wide_deg: float = 150.0
    fov_deep_deg: float = 120.0
    range_m: float = 0.60
    rate_hz: float = 100.0
    origin: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if self.fov_wide_deg <= 0 or self.fov_deep_deg <= 0:
            raise HandError("tracker FOV angles must be positive")
        if self.range_m <= 0 or self.rate_hz <= 0:
            raise HandError("tracker range and rate must be positive")


@dataclass(frozen=True)
class HandFrame:
    t: float
    hand_id: str
    palm_center: tuple[float, float, float]
    palm_normal: tuple[float, float, float]
    joints: tuple[tuple[float, float, float], ...]

    def __post_init__(self):
        if self.hand_id not in HAND_IDS:
            raise HandError(f"hand_id must be one of {HAND_IDS}, got {self.hand_id!r}")
        pts = [self.palm_center, self.palm_normal, *self.joints]
        if not all(math.isfinite(c) for p in pts for c in p):
            raise HandError("non-finite hand frame coordinates")
        if not 1 <= len(self.joints) <= MAX_JOINTS:
            raise HandError(f"joint count must be 1..{MAX_JOINTS}, got {len(self.joints)}")
        n = math.sqrt(sum(c * c for c in self.palm_normal))
        if abs(n - 1.0) > UNIT_TOL:
            raise HandError(f"palm_normal must be unit length, |n|={n}")


def palm_pose(frame: HandFrame) -> tuple[tuple[float, float, float], tuple[float, float, float]]:
    return frame.palm_center, frame.palm_normal


def in_tracking_fov(p, cfg: TrackerConfig = TrackerConfig()) -> bool:
    """True when p is inside the tracker's range and both angular half-widths."""
    rel = np.asarray(p, dtype=float) - np.asarray(cfg.origin)
    if np.linalg.norm(rel) > cfg.range_m:
        return False
    half_wide = math.radians(cfg.fov_wide_deg / 2.0)
    half_deep = math.radians(cfg.fov_deep_deg / 2.0)
    return (
        abs(math.atan2(rel[0], rel[2])) <= half_wide
        and abs(math.atan2(rel[1], rel[2])) <= half_deep
    )


def synthesize_joints(
    palm_center,
    palm_normal,
    radius: float = FINGERTIP_RADIUS,
    count: int = FINGERTIP_COUNT,
) -> tuple[tuple[float, float, float], ...]:
    """Fingertips as a fixed ring around the palm, in the palm plane."""
    center = np.asarray(palm_center, dtype=float)
    u, v = plane_basis(palm_normal)
    joints = []
    for j in range(count):
        a = 2.0 * math.pi * j / count
        p = center + radius * (math.cos(a) * u + math.sin(a) * v)
        joints.append((float(p[0]), float(p[1]), float(p[2])))
    return tuple(joints)


def intersect_targets(frame: HandFrame, heart: HeartHologram) -> list[tuple[float, float, float]]:
    """Candidate haptic targets currently on or inside the hologram surface.

    Palm center first when it intersects, then joints by ascending signed
    distance. Empty list means no haptics for this hand this frame.
    """
    targets: list[tuple[float, tuple[float, float, float]]] = []
    for joint in frame.joints:
        d = signed_distance(joint, heart)
        if d <= 0.0:
            targets.append((d, joint))
    targets.sort(key=lambda item: item[0])
    ordered = [p for _, p in targets]
    if signed_distance(frame.palm_center, heart) <= 0.0:
        ordered.insert(0, frame.palm_center)
    return ordered


@dataclass(frozen=True)
class HandScript:
    """Palm pose keyframes with linear interpolation between them."""

    keyframes: tuple[tuple[float, tuple[float, float, float], tuple[float, float, float]], ...]
    loop: bool = False

    def __post_init__(self):
        if not self.keyframes:
            raise HandError("hand script needs at least one keyframe")
        times = [k[0] for k in self.keyframes]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise HandError("keyframe times must be strictly increasing")

    @property
    def duration(self) -> float:
        return self.keyframes[-1][0]

    def sample(self, t: float) -> tuple[tuple[float, float, float], tuple[float, float, float]]:
        """Palm (center, unit normal) at time t; clamped or looped at the ends."""
        keys = self.keyframes
        if self.loop and self.duration > 0:
            t = t % self.duration
        if t <= keys[0][0]:
            return keys[0][1], keys[0][2]
        if t >= keys[-1][0]:
            return keys[-1][1], keys[-1][2]
        hi = next(i for i in range(1, len(keys)) if keys[i][0] >= t)
        t0, p0, n0 = keys[hi - 1]
        t1, p1, n1 = keys[hi]
        w = (t - t0) / (t1 - t0)
        palm = tuple((1 - w) * a + w * b for a, b in zip(p0, p1))
        normal = np.asarray(n0) * (1 - w) + np.asarray(n1) * w
        norm = np.linalg.norm(normal)
        if norm < 1e-9:
            normal, norm = np.asarray(n0, dtype=float), 1.0
        normal = normal / norm
        return palm, (float(normal[0]), float(normal[1]), float(normal[2]))


def load_hand_script(path, loop: bool = False) -> HandScript:
    """Read keyframes `t,palm_x,palm_y,palm_z,nx,ny,nz`; `#` comments skipped.

    Keyframe normals are normalized on load.
    """
    keys = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        if len(parts) != 7:
            raise HandError(f"{path}:{lineno}: expected `t,px,py,pz,nx,ny,nz`")
        vals = [float(p) for p in parts]
        n = np.asarray(vals[4:7])
        norm = np.linalg.norm(n)
        if norm < 1e-9:
            raise HandError(f"{path}:{lineno}: zero palm normal")
        n = n / norm
        keys.append((vals[0], tuple(vals[1:4]), (float(n[0]), float(n[1]), float(n[2]))))
    return HandScript(keyframes=tuple(keys), loop=loop)
