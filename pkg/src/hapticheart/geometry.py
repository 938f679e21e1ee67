"""Coordinate frames, rigid transforms, and the point-correspondence calibration solve.

All positions are metric (meters). The canonical frame is the haptic device
frame: origin at the array center, z up. Headset-frame data is converted on
ingest via a calibrated rigid transform.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

ORTHONORMALITY_TOL = 1e-9


class FrameId(enum.Enum):
    """Label for the frame a position is expressed in."""

    DEVICE = "device"
    HEADSET = "headset"
    WORLD = "world"


class GeometryError(ValueError):
    pass


class TooFewPoints(GeometryError):
    pass


class DegenerateConfiguration(GeometryError):
    pass


def vec3(x: float, y: float, z: float) -> np.ndarray:
    v = np.array([x, y, z], dtype=float)
    if not np.all(np.isfinite(v)):
        raise GeometryError(f"non-finite vector components: {v}")
    return v


def as_points(points) -> np.ndarray:
    """Coerce a sequence of 3-vectors to an (N, 3) float array."""
    arr = np.atleast_2d(np.asarray(points, dtype=float))
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise GeometryError(f"expected (N, 3) points, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise GeometryError("non-finite point coordinates")
    return arr


@dataclass(frozen=True)
class RigidTransform:
    """Rotation + translation, with det(rotation) = +1 (no reflection)."""

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        R = np.asarray(self.rotation, dtype=float)
        t = np.asarray(self.translation, dtype=float).reshape(3)
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)
        if R.shape != (3, 3):
            raise GeometryError(f"rotation must be 3x3, got {R.shape}")
        if not np.all(np.isfinite(R)) or not np.all(np.isfinite(t)):
            raise GeometryError("non-finite transform entries")
        if np.abs(R.T @ R - np.eye(3)).max() > 1e-6:
            raise GeometryError("rotation is not orthonormal")
        if abs(np.linalg.det(R) - 1.0) > 1e-6:
            raise GeometryError("rotation has det != +1 (reflection?)")

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls()

    @classmethod
    def from_rotvec_translation(cls, axis, angle: float, translation) -> "RigidTransform":
        """Rodrigues rotation about `axis` by `angle` radians, then translate."""
        a = np.asarray(axis, dtype=float)
        a = a / np.linalg.norm(a)
        K = np.array([[0, -a[2], a[1]], [a[2], 0, -a[0]], [-a[1], a[0], 0]])
        R = np.eye(3) + np.sin(angle) * K + (1 - np.cos(angle)) * (K @ K)
        return cls(R, np.asarray(translation, dtype=float))

    def is_valid(self, tol: float = ORTHONORMALITY_TOL) -> bool:
        R = self.rotation
        return (
            np.abs(R.T @ R - np.eye(3)).max() <= tol
            and abs(np.linalg.det(R) - 1.0) <= tol
        )


def apply(T: RigidTransform, p) -> np.ndarray:
    """R @ p + t for a single point or an (N, 3) batch."""
    p = np.asarray(p, dtype=float)
    if p.ndim == 1:
        return T.rotation @ p + T.translation
    return p @ T.rotation.T + T.translation


def compose(T1: RigidTransform, T2: RigidTransform) -> RigidTransform:
    """Transform equal to applying T2 first, then T1."""
    return RigidTransform(T1.rotation @ T2.rotation, T1.rotation @ T2.translation + T1.translation)


def invert(T: RigidTransform) -> RigidTransform:
    Rt = T.rotation.T
    return RigidTransform(Rt, -Rt @ T.translation)


def solve_rigid_transform(src, dst) -> RigidTransform:
    """Least-squares rigid transform mapping src points onto dst points.

    SVD of the cross-covariance with a determinant sign correction on the
    smallest singular vector, so the result is always a proper rotation.
    Raises TooFewPoints (< 3 pairs) or DegenerateConfiguration (collinear src).
    """
    src = as_points(src)
    dst = as_points(dst)
    if src.shape != dst.shape:
        raise GeometryError(f"point count mismatch: {src.shape[0]} vs {dst.shape[0]}")
    if src.shape[0] < 3:
        raise TooFewPoints(f"need >= 3 correspondences, got {src.shape[0]}")

    src_c = src.mean(axis=0)
    dst_c = dst.mean(axis=0)
    a = src - src_c
    b = dst - dst_c

    # Collinear sources leave the rotation about the line unconstrained.
    spread = np.linalg.svd(a, compute_uv=False)
    if spread[0] > 0 and spread[1] < 1e-12 * spread[0]:
        raise DegenerateConfiguration("source points are collinear")
    if spread[0] == 0:
        raise DegenerateConfiguration("source points are coincident")

    H = a.T @ b
    U, S, Vt = np.linalg.svd(H)
    d = np.sign(np.linalg.det(Vt.T @ U.T))
    D = np.diag([1.0, 1.0, d if d != 0 else 1.0])
    R = Vt.T @ D @ U.T
    t = dst_c - R @ src_c
    return RigidTransform(R, t)


def calibration_residual(T: RigidTransform, src, dst) -> float:
    """RMS distance between transformed src points and dst points."""
    src = as_points(src)
    dst = as_points(dst)
    if src.shape != dst.shape:
        raise GeometryError(f"point count mismatch: {src.shape[0]} vs {dst.shape[0]}")
    err = apply(T, src) - dst
    return float(np.sqrt(np.mean(np.sum(err * err, axis=1))))


def plane_basis(normal) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic orthonormal basis (u, v) of the plane perpendicular to `normal`.

    u = normalize(normal x z-hat), falling back to x-hat when the normal is
    (anti)parallel to z; v = normal x u. Fixing the convention keeps focal
    traces reproducible across runs.
    """
    n = np.asarray(normal, dtype=float)
    u = np.cross(n, np.array([0.0, 0.0, 1.0]))
    norm = np.linalg.norm(u)
    if norm < 1e-6:
        u = np.array([1.0, 0.0, 0.0])
    else:
        u = u / norm
    v = np.cross(n, u)
    return u, v


def rotation_angle_between(Ra: np.ndarray, Rb: np.ndarray) -> float:
    """Geodesic angle (radians) between two rotation matrices."""
    cos = (np.trace(Ra.T @ Rb) - 1.0) / 2.0
    return float(np.arccos(np.clip(cos, -1.0, 1.0)))


def load_correspondences(path) -> tuple[np.ndarray, np.ndarray]:
    """Read calibration pairs from CSV lines `sx,sy,sz,dx,dy,dz` (meters).

    Lines starting with `#` and blank lines are skipped.
    """
    src, dst = [], []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        if len(parts) != 6:
            raise GeometryError(f"{path}:{lineno}: expected 6 comma-separated values")
        vals = [float(p) for p in parts]
        src.append(vals[:3])
        dst.append(vals[3:])
    if not src:
        raise TooFewPoints(f"{path}: no correspondence rows")
    return as_points(src), as_points(dst)
