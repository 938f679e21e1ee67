"""Figure rendering for scenario reports and the offline render/field sweeps.

Everything draws through the Agg backend straight to files; nothing here
opens a window.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .analysis import per_frame_series

DPI = 150


def scenario_figure(out_dir: Path, run) -> Path:
    """Overview panel: smoothed BPM, surface scale, haptic envelope, gating."""
    frames = run.frames
    t = np.array([fs.t for fs in frames])
    bpm = np.array([np.nan if fs.bpm is None else fs.bpm for fs in frames])
    scale = np.array([fs.scale for fs in frames])
    active = np.array([any(h.haptic_active for h in fs.hands) for fs in frames])

    fig, axes = plt.subplots(3, 1, figsize=(9, 7), sharex=True)
    axes[0].plot(t, bpm, color="tab:red", lw=1.2)
    axes[0].set_ylabel("smoothed bpm")
    axes[0].grid(alpha=0.3)

    axes[1].plot(t, scale, color="tab:blue", lw=0.8)
    axes[1].set_ylabel("surface scale")
    axes[1].grid(alpha=0.3)

    cmds = run.device.commands
    if cmds and run.scenario.hand_script is not None:
        center = run.scenario.hand_script.sample(cmds[0].t)[0]
        ct, radii, intensities = per_frame_series(cmds, center, run.scenario.frame_rate)
        axes[2].plot(ct, radii * 1000.0, color="tab:green", lw=0.8, label="radius [mm]")
        ax2 = axes[2].twinx()
        ax2.plot(ct, intensities, color="tab:orange", lw=0.8, label="intensity")
        ax2.set_ylabel("intensity")
        ax2.set_ylim(0, 1.05)
    axes[2].set_ylabel("circle radius [mm]")
    axes[2].set_xlabel("t [s]")
    axes[2].grid(alpha=0.3)
    for ax in axes:
        ax.fill_between(
            t, 0, 1, where=active, transform=ax.get_xaxis_transform(),
            color="tab:green", alpha=0.08,
        )

    fig.suptitle(f"scenario: {run.scenario.name} ({run.scenario.mode_name})")
    fig.tight_layout()
    path = Path(out_dir) / "overview.png"
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path


def render_figure(path, render) -> Path:
    """Offline render: the focal trace in the circle plane plus its envelope."""
    path = Path(path)
    cmds = render.commands
    pos = np.array([c.pos for c in cmds])
    t = np.array([c.t for c in cmds])
    intensity = np.array([c.intensity for c in cmds])
    center = np.asarray(render.target)
    radius = np.linalg.norm(pos - center, axis=1)

    fig, (ax_trace, ax_env) = plt.subplots(1, 2, figsize=(11, 4.5))
    ax_trace.scatter(
        (pos[:, 0] - center[0]) * 1000.0,
        (pos[:, 1] - center[1]) * 1000.0,
        s=2,
        c=t,
        cmap="viridis",
    )
    ax_trace.set_xlabel("x offset [mm]")
    ax_trace.set_ylabel("y offset [mm]")
    ax_trace.set_aspect("equal")
    ax_trace.set_title("focal trace around target")

    ax_env.plot(t, radius * 1000.0, lw=0.6, color="tab:green", label="radius [mm]")
    ax_env2 = ax_env.twinx()
    ax_env2.plot(t, intensity, lw=0.6, color="tab:orange", label="intensity")
    ax_env2.set_ylim(0, 1.05)
    ax_env2.set_ylabel("intensity")
    ax_env.set_xlabel("t [s]")
    ax_env.set_ylabel("radius [mm]")
    ax_env.set_title("command envelope")
    ax_env.grid(alpha=0.3)

    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path


def field_figure(path, points, values, plane_axis: str, focus) -> Path:
    """Magnitude heatmap of a plane sweep, with the focus marked."""
    path = Path(path)
    free = [a for a in range(3) if a != "xyz".index(plane_axis)]
    a = np.unique(points[:, free[0]])
    b = np.unique(points[:, free[1]])
    mag = np.abs(values).reshape(len(a), len(b))

    fig, ax = plt.subplots(figsize=(6.5, 5.5))
    mesh = ax.pcolormesh(a * 1000.0, b * 1000.0, mag.T, shading="auto", cmap="inferno")
    fig.colorbar(mesh, ax=ax, label="|U| [a.u.]")
    focus = np.asarray(focus, dtype=float)
    ax.plot(focus[free[0]] * 1000.0, focus[free[1]] * 1000.0, "c+", ms=12, mew=2)
    labels = ["x [mm]", "y [mm]", "z [mm]"]
    ax.set_xlabel(labels[free[0]])
    ax.set_ylabel(labels[free[1]])
    ax.set_title(f"field magnitude, {plane_axis} plane")
    ax.set_aspect("equal")
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path
