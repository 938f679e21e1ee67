"""Phased-array model: transducer grid, focal phase solve, and field evaluation.

A brute-force monopole sum serves as the physics oracle for focal commands:
each transducer contributes amplitude/distance with a propagation phase, and
the solve cancels those phases at the requested focus. No directivity or
nonlinearity; only focusing and relative contrast are claimed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


class ArrayError(ValueError):
    pass


class FocusBehindArray(ArrayError):
    pass


class SingularEvaluationPoint(ArrayError):
    pass


@dataclass(frozen=True)
class ArrayConfig:
    rows: int = 16
    cols: int = 16
    pitch: float = 0.0105
    carrier_hz: float = 40_000.0
    speed_of_sound: float = 343.0
    amplitude: float = 1.0

    def __post_init__(self):
        if self.rows <= 0 or self.cols <= 0 or self.pitch <= 0:
            raise ArrayError("rows, cols, and pitch must be positive")
        if self.carrier_hz <= 0 or self.speed_of_sound <= 0:
            raise ArrayError("carrier and speed of sound must be positive")

    @property
    def wavenumber(self) -> float:
        return TWO_PI * self.carrier_hz / self.speed_of_sound

    @property
    def wavelength(self) -> float:
        return self.speed_of_sound / self.carrier_hz


def array_layout(cfg: ArrayConfig = ArrayConfig()) -> np.ndarray:
    """Transducer centers as an (rows*cols, 3) grid centered on the origin, z = 0."""
    i = np.arange(cfg.rows) - (cfg.rows - 1) / 2.0
    j = np.arange(cfg.cols) - (cfg.cols - 1) / 2.0
    xx, yy = np.meshgrid(i * cfg.pitch, j * cfg.pitch, indexing="ij")
    return np.column_stack([xx.ravel(), yy.ravel(), np.zeros(cfg.rows * cfg.cols)])


def solve_phases(layout: np.ndarray, focus, cfg: ArrayConfig = ArrayConfig()) -> np.ndarray:
    """Per-transducer emission phases that align all arrivals at `focus`.

    psi_i = (-k * |x_i - focus|) mod 2*pi. The focus must be in front of the
    array (z > 0).
    """
    focus = np.asarray(focus, dtype=float)
    if focus[2] <= 0:
        raise FocusBehindArray(f"focus z must be > 0, got {focus[2]}")
    d = np.linalg.norm(layout - focus, axis=1)
    return (-cfg.wavenumber * d) % TWO_PI


def field_at(layout: np.ndarray, phases: np.ndarray, points, cfg: ArrayConfig = ArrayConfig()):
    """Complex field from the monopole sum at one point or an (M, 3) batch.

    U(p) = sum_i (A / |x_i - p|) * exp(j * (k |x_i - p| + psi_i))
    """
    p = np.asarray(points, dtype=float)
    single = p.ndim == 1
    p = np.atleast_2d(p)
    d = np.linalg.norm(p[:, None, :] - layout[None, :, :], axis=2)
    if np.any(d < 1e-12):
        raise SingularEvaluationPoint("evaluation point coincides with a transducer")
    u = (cfg.amplitude / d) * np.exp(1j * (cfg.wavenumber * d + phases[None, :]))
    total = u.sum(axis=1)
    return complex(total[0]) if single else total


def aligned_peak(layout: np.ndarray, focus, cfg: ArrayConfig = ArrayConfig()) -> float:
    """|U| at the focus when all phasors align: sum of amplitude/distance."""
    d = np.linalg.norm(layout - np.asarray(focus, dtype=float), axis=1)
    return float(np.sum(cfg.amplitude / d))


def field_grid(
    focus,
    plane_axis: str,
    plane_value: float,
    extent: float,
    step: float,
    cfg: ArrayConfig = ArrayConfig(),
) -> tuple[np.ndarray, np.ndarray]:
    """Field sweep over a square axis-aligned plane around the focus.

    Returns (points, values): (M, 3) grid points spanning +/- extent around
    the focus in the two free axes, and the complex field at each.
    """
    if plane_axis not in ("x", "y", "z"):
        raise ArrayError(f"plane axis must be x, y, or z, got {plane_axis!r}")
    if extent <= 0 or step <= 0:
        raise ArrayError("extent and step must be positive")
    focus = np.asarray(focus, dtype=float)
    axis = "xyz".index(plane_axis)
    free = [a for a in range(3) if a != axis]
    n = int(round(2 * extent / step)) + 1
    coords = [np.linspace(f - extent, f + extent, n) for f in (focus[free[0]], focus[free[1]])]
    aa, bb = np.meshgrid(coords[0], coords[1], indexing="ij")
    points = np.empty((aa.size, 3))
    points[:, free[0]] = aa.ravel()
    points[:, free[1]] = bb.ravel()
    points[:, axis] = plane_value
    layout = array_layout(cfg)
    phases = solve_phases(layout, focus, cfg)
    values = field_at(layout, phases, points, cfg)
    return points, values
