"""Command-line entry point: serve, emulate, scenario, render, field, calibrate.

Exit codes: 0 success, 1 assertion or validation failure, 2 usage or config
error. Flags override environment variables, which override the config
file. See docs/cli.md.
"""
from __future__ import annotations

import argparse
import asyncio
import logging
import os
import signal
import sys
from dataclasses import replace
from importlib import resources
from pathlib import Path

import numpy as np

from . import net
from .biosignal import load_hr_trace
from .config import AppConfig, ConfigError, ENV_CONFIG, apply_env, load_config, validate
from .emulators import HrTrace
from .geometry import GeometryError, load_correspondences, calibration_residual, solve_rigid_transform
from .hand import HandError, load_hand_script
from .haptics import FocalLogWriter, HapticsError, mode_from_name, render_offline
from .phased_array import ArrayError, field_grid
from .scenario import ScenarioError, load_scenario, run_scenario

log = logging.getLogger("hapticheart")

MODE_ALIASES = {
    "radius": "pulsing_radius",
    "intensity": "pulsing_intensity",
    "pulsing_radius": "pulsing_radius",
    "pulsing_intensity": "pulsing_intensity",
    "am": "am",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hapticheart",
        description="Simulated mid-air haptic rig with a heartbeat-driven hologram.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_serve = sub.add_parser("serve", help="run the 60 Hz sync server (TCP + WebSocket)")
    p_serve.add_argument("--config", type=Path, default=None)
    p_serve.add_argument("--tcp-port", type=int, default=None)
    p_serve.add_argument("--ws-port", type=int, default=None)
    p_serve.add_argument("--mode", choices=sorted(MODE_ALIASES), default=None)
    p_serve.add_argument("--virtual-clock", action="store_true")
    p_serve.add_argument("--ticks", type=int, default=None, help="frame budget (virtual clock)")
    p_serve.add_argument("--frame-log", type=Path, default=None)
    p_serve.add_argument("--host", default="127.0.0.1")

    p_emu = sub.add_parser("emulate", help="run a device emulator against a server")
    p_emu.add_argument("kind", choices=["wearable", "hand", "haptic"])
    p_emu.add_argument("--endpoint", default="127.0.0.1:7340", help="host:port (TCP)")
    p_emu.add_argument("--trace", type=Path, help="heart-rate trace CSV (wearable)")
    p_emu.add_argument("--interval", type=float, default=5.0, help="wearable emit interval")
    p_emu.add_argument("--script", type=Path, help="hand script CSV (hand)")
    p_emu.add_argument("--hand", choices=["left", "right"], default="right")
    p_emu.add_argument("--loop", action="store_true", help="loop the hand script")
    p_emu.add_argument("--log", type=Path, help="focal log path (haptic)")
    p_emu.add_argument("--duration", type=float, default=None)

    p_scn = sub.add_parser("scenario", help="run a scripted scenario and write a report")
    p_scn.add_argument("file", help="scenario TOML path or a bundled scenario name")
    p_scn.add_argument("--out-dir", type=Path, default=None)
    p_scn.add_argument("--no-figures", action="store_true")

    p_rnd = sub.add_parser("render", help="offline haptic synthesis, no server")
    p_rnd.add_argument("--bpm", type=float, required=True)
    p_rnd.add_argument("--mode", choices=sorted(MODE_ALIASES), default="radius")
    p_rnd.add_argument("--duration", type=float, default=10.0)
    p_rnd.add_argument("--frame-rate", type=float, default=60.0)
    p_rnd.add_argument("--out", type=Path, required=True)
    p_rnd.add_argument("--plot", type=Path, default=None, help="also render a PNG figure")
    p_rnd.add_argument("--config", type=Path, default=None)

    p_fld = sub.add_parser("field", help="sweep the acoustic field over a plane")
    p_fld.add_argument("--focus", default="0,0,0.2", help="focal point x,y,z in meters")
    p_fld.add_argument("--plane", default="z=0.2", help="axis=value, e.g. z=0.2")
    p_fld.add_argument("--extent", type=float, default=0.06)
    p_fld.add_argument("--step", type=float, default=0.002)
    p_fld.add_argument("--out", type=Path, required=True)
    p_fld.add_argument("--plot", type=Path, default=None, help="also render a heatmap PNG")
    p_fld.add_argument("--config", type=Path, default=None)

    p_cal = sub.add_parser("calibrate", help="solve headset-to-device transform from CSV pairs")
    p_cal.add_argument("file", type=Path)
    return parser


def _load_app_config(path: Path | None) -> AppConfig:
    if path is None and ENV_CONFIG in os.environ:
        path = Path(os.environ[ENV_CONFIG])
    return apply_env(load_config(path))


def _parse_endpoint(text: str) -> tuple[str, int]:
    host, _, port = text.rpartition(":")
    if not host or not port.isdigit():
        raise ConfigError(f"endpoint must be host:port, got {text!r}")
    return host, int(port)


def cmd_serve(args) -> int:
    cfg = _load_app_config(args.config)
    updates = {}
    if args.tcp_port is not None:
        updates["tcp_port"] = args.tcp_port
    if args.ws_port is not None:
        updates["ws_port"] = args.ws_port
    if args.mode is not None:
        updates["mode"] = MODE_ALIASES[args.mode]
    if updates:
        cfg = validate(replace(cfg, **updates))
    if args.virtual_clock and args.ticks is None:
        raise ConfigError("--virtual-clock requires --ticks")

    frame_log = args.frame_log.open("w", newline="\n") if args.frame_log else None

    async def run():
        server = net.SyncServer(
            cfg,
            virtual=args.virtual_clock,
            ticks=args.ticks,
            frame_log=frame_log,
            host=args.host,
        )
        # Graceful shutdown (flushes logs) even when SIGINT arrives as a
        # signal rather than a KeyboardInterrupt, e.g. under a process manager.
        loop = asyncio.get_running_loop()
        for sig in (signal.SIGINT, signal.SIGTERM):
            try:
                loop.add_signal_handler(sig, server.stopped.set)
            except NotImplementedError:
                pass
        await server.run()
        return server.frames_run

    try:
        frames = asyncio.run(run())
        log.info("served %d frames", frames)
        return 0
    except net.PortInUse as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        return 0
    finally:
        if frame_log is not None:
            frame_log.close()


def cmd_emulate(args) -> int:
    host, port = _parse_endpoint(args.endpoint)
    try:
        if args.kind == "wearable":
            if args.trace is None:
                raise ConfigError("emulate wearable requires --trace")
            trace = HrTrace(
                keyframes=tuple(load_hr_trace(args.trace)), emit_interval=args.interval
            )
            emits = asyncio.run(net.run_wearable_client(trace, host, port, args.duration))
            print(f"sent {len(emits)} heart-rate updates")
        elif args.kind == "hand":
            if args.script is None:
                raise ConfigError("emulate hand requires --script")
            script = load_hand_script(args.script, loop=args.loop)
            sent = asyncio.run(
                net.run_hand_client(script, host, port, args.duration, hand_id=args.hand)
            )
            print(f"sent {sent} hand frames")
        else:
            device = asyncio.run(
                net.run_haptic_client(host, port, log_path=args.log, duration=args.duration)
            )
            print(f"accepted {device.accepted} commands, {device.violations} violations")
            if device.violations:
                return 1
        return 0
    except ConnectionRefusedError:
        print(f"error: connection refused by {args.endpoint}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 0


def _resolve_scenario(name: str) -> Path:
    path = Path(name)
    if path.exists():
        return path
    bundled = resources.files("hapticheart").joinpath(f"data/scenarios/{name}.toml")
    if bundled.is_file():
        return Path(str(bundled))
    raise ScenarioError(f"no scenario file or bundled scenario named {name!r}")


def cmd_scenario(args) -> int:
    path = _resolve_scenario(args.file)
    scenario = load_scenario(path)
    out_dir = args.out_dir if args.out_dir is not None else Path("reports") / scenario.name
    report = run_scenario(scenario, out_dir=out_dir, figures=not args.no_figures)
    for outcome in report.outcomes:
        print(f"[{'PASS' if outcome.passed else 'FAIL'}] {outcome.kind}: {outcome.detail}")
    print(f"report written to {out_dir}")
    return 0 if report.passed else 1


def cmd_render(args) -> int:
    cfg = _load_app_config(args.config)
    mode = mode_from_name(MODE_ALIASES[args.mode], cfg.am_frequency)
    result = render_offline(
        bpm=args.bpm,
        mode=mode,
        duration=args.duration,
        frame_rate=args.frame_rate,
        params=cfg.stm,
        heart=cfg.scene.build_heart(),
    )
    writer = FocalLogWriter.open(args.out, mode, cfg.stm)
    writer.write(result.commands)
    writer.close()
    print(
        f"wrote {len(result.commands)} commands over {args.duration} s to {args.out}"
        f" ({result.dropped} dropped out of volume)"
    )
    if args.plot is not None:
        from .report import render_figure

        render_figure(args.plot, result)
        print(f"figure written to {args.plot}")
    return 0


def cmd_field(args) -> int:
    cfg = _load_app_config(args.config)
    try:
        focus = tuple(float(v) for v in args.focus.split(","))
        if len(focus) != 3:
            raise ValueError("need three components")
    except ValueError as exc:
        raise ConfigError(f"--focus: {exc}") from exc
    axis, _, value = args.plane.partition("=")
    if axis not in ("x", "y", "z") or not value:
        raise ConfigError(f"--plane: expected axis=value, got {args.plane!r}")
    points, values = field_grid(
        focus, axis, float(value), args.extent, args.step, cfg.array
    )
    mags = np.abs(values)
    with args.out.open("w", newline="\n") as fh:
        fh.write(f"# focus={args.focus} plane={args.plane} extent={args.extent} step={args.step}\n")
        fh.write("# x,y,z,re,im,abs\n")
        for p, v in zip(points, values):
            fh.write(
                f"{p[0]:.6f},{p[1]:.6f},{p[2]:.6f},{v.real:.9g},{v.imag:.9g},{abs(v):.9g}\n"
            )
    peak = points[int(np.argmax(mags))]
    print(
        f"wrote {len(points)} grid points to {args.out}; "
        f"peak |U|={mags.max():.6g} at ({peak[0]:.4f}, {peak[1]:.4f}, {peak[2]:.4f})"
    )
    if args.plot is not None:
        from .report import field_figure

        field_figure(args.plot, points, values, axis, focus)
        print(f"figure written to {args.plot}")
    return 0


def cmd_calibrate(args) -> int:
    src, dst = load_correspondences(args.file)
    T = solve_rigid_transform(src, dst)
    residual = calibration_residual(T, src, dst)
    print("rotation:")
    for row in T.rotation:
        print(f"  [{row[0]: .9f} {row[1]: .9f} {row[2]: .9f}]")
    t = T.translation
    print(f"translation: [{t[0]: .9f} {t[1]: .9f} {t[2]: .9f}] m")
    print(f"rms residual: {residual:.9f} m over {len(src)} pairs")
    return 0


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("HAPTICHEART_LOG", "INFO"),
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "serve": cmd_serve,
        "emulate": cmd_emulate,
        "scenario": cmd_scenario,
        "render": cmd_render,
        "field": cmd_field,
        "calibrate": cmd_calibrate,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (GeometryError, HandError, HapticsError, ArrayError, ScenarioError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
