"""Declarative end-to-end runs: server core plus emulators on the virtual clock.

A scenario bundles a heart-rate trace, a hand script, a haptic mode, and a
list of checks. The runner steps everything tick-by-tick in one thread, so
two runs of the same scenario produce byte-identical logs. Reports land in
an output directory: plain text, a CSV summary, the focal and frame logs,
and overview figures.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .analysis import (
    active_transitions,
    fundamental_period,
    hologram_crossing_times,
    per_frame_series,
)
from .clock import VirtualClock
from .config import AppConfig, SceneConfig, validate
from .emulators import HandTrackerEmulator, HapticDeviceEmulator, HrTrace, WearableEmulator
from .hand import HandScript, load_hand_script
from .haptics import FocalLogWriter, mode_from_name
from .biosignal import load_hr_trace
from .protocol import ErrorMsg, FocalBatch, FrameState
from .server import ServerCore


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class Check:
    kind: str
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Scenario:
    name: str
    duration: float
    hr_trace: HrTrace
    hand_script: HandScript | None = None
    hand_id: str = "right"
    mode_name: str = "pulsing_radius"
    am_frequency: float = 200.0
    frame_rate: float = 60.0
    scene: SceneConfig = field(default_factory=SceneConfig)
    checks: tuple[Check, ...] = ()

    def __post_init__(self):
        if self.duration <= 0:
            raise ScenarioError(f"duration must be positive, got {self.duration}")


@dataclass(frozen=True)
class CheckOutcome:
    kind: str
    passed: bool
    detail: str


@dataclass
class RunResult:
    scenario: Scenario
    frames: list[FrameState]
    batches: list[FocalBatch]
    device: HapticDeviceEmulator
    core: ServerCore
    errors: list[ErrorMsg]


@dataclass
class ScenarioReport:
    scenario: Scenario
    outcomes: list[CheckOutcome]
    run: RunResult
    out_dir: Path | None = None
    artifacts: list[Path] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(o.passed for o in self.outcomes)


def load_scenario(path) -> Scenario:
    """Parse a scenario TOML file; relative CSV references resolve next to it."""
    path = Path(path)
    try:
        data = tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"{path}: {exc}") from exc
    meta = data.get("scenario", {})
    if "name" not in meta or "duration" not in meta:
        raise ScenarioError(f"{path}: [scenario] must define name and duration")

    hr = data.get("hr", {})
    if "trace" in hr:
        keyframes = tuple(load_hr_trace(path.parent / hr["trace"]))
    elif "keyframes" in hr:
        keyframes = tuple((float(t), float(bpm)) for t, bpm in hr["keyframes"])
    else:
        raise ScenarioError(f"{path}: [hr] needs keyframes or a trace file")
    trace = HrTrace(
        keyframes=keyframes,
        interpolation=str(hr.get("interpolation", "step")),
        emit_interval=float(hr.get("emit_interval", 5.0)),
    )

    script = None
    hand_id = "right"
    hand = data.get("hand", {})
    if hand:
        hand_id = str(hand.get("hand_id", "right"))
        loop = bool(hand.get("loop", False))
        if "script" in hand:
            script = load_hand_script(path.parent / hand["script"], loop=loop)
        elif "keyframes" in hand:
            keys = []
            for row in hand["keyframes"]:
                if len(row) != 7:
                    raise ScenarioError(f"{path}: hand keyframes need 7 values")
                t, px, py, pz, nx, ny, nz = (float(v) for v in row)
                norm = math.sqrt(nx * nx + ny * ny + nz * nz)
                keys.append((t, (px, py, pz), (nx / norm, ny / norm, nz / norm)))
            script = HandScript(keyframes=tuple(keys), loop=loop)
        else:
            raise ScenarioError(f"{path}: [hand] needs keyframes or a script file")

    scene_raw = data.get("scene", {})
    scene = SceneConfig(
        anchor=tuple(scene_raw.get("anchor", SceneConfig().anchor)),
        radii=tuple(scene_raw.get("radii", SceneConfig().radii)),
        pulse_amplitude=float(scene_raw.get("pulse_amplitude", SceneConfig().pulse_amplitude)),
    )

    checks = []
    for raw in data.get("check", []):
        if "kind" not in raw:
            raise ScenarioError(f"{path}: every [[check]] needs a kind")
        params = {k: v for k, v in raw.items() if k != "kind"}
        checks.append(Check(kind=str(raw["kind"]), params=params))

    return Scenario(
        name=str(meta["name"]),
        duration=float(meta["duration"]),
        hr_trace=trace,
        hand_script=script,
        hand_id=hand_id,
        mode_name=str(meta.get("mode", "pulsing_radius")),
        am_frequency=float(meta.get("am_frequency", 200.0)),
        frame_rate=float(meta.get("frame_rate", 60.0)),
        scene=scene,
        checks=tuple(checks),
    )


def run_scenario(
    scenario: Scenario, out_dir: Path | str | None = None, figures: bool = True
) -> ScenarioReport:
    """Execute a scenario and evaluate its checks.

    Always completes and writes the report; failed checks are recorded, not
    raised, so the artifacts of a failing run survive for inspection.
    """
    cfg = validate(
        replace(
            AppConfig(),
            mode=scenario.mode_name,
            am_frequency=scenario.am_frequency,
            frame_rate=scenario.frame_rate,
            scene=scenario.scene,
        )
    )
    out_path = Path(out_dir) if out_dir is not None else None
    if out_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)

    core = ServerCore(cfg)
    mode = mode_from_name(scenario.mode_name, scenario.am_frequency)
    writer = None
    if out_path is not None:
        writer = FocalLogWriter.open(out_path / "focal.csv", mode, cfg.stm)
    device = HapticDeviceEmulator(writer=writer)

    producers = []
    errors: list[ErrorMsg] = []

    def register(emulator):
        sid = core.open_session()
        core.handle_message(sid, emulator.hello(), 0.0)
        return sid

    wearable = WearableEmulator(scenario.hr_trace)
    producers.append((register(wearable), wearable))
    if scenario.hand_script is not None:
        tracker = HandTrackerEmulator(
            scenario.hand_script, cfg.tracker, hand_id=scenario.hand_id
        )
        producers.append((register(tracker), tracker))
    register(device)

    clock = VirtualClock(scenario.frame_rate)
    dt = clock.tick_interval
    n_ticks = int(round(scenario.duration * scenario.frame_rate))
    frames: list[FrameState] = []
    batches: list[FocalBatch] = []
    for _ in range(n_ticks):
        t_next = (clock.ticks + 1) / scenario.frame_rate
        events = []
        for order, (sid, emulator) in enumerate(producers):
            for t_event, msg in emulator.poll(t_next):
                events.append((t_event, order, sid, msg))
        events.sort(key=lambda e: (e[0], e[1]))
        for t_event, _, sid, msg in events:
            for out in core.handle_message(sid, msg, t_event):
                if isinstance(out.message, ErrorMsg):
                    errors.append(out.message)
        now = clock.advance()
        result = core.frame_tick(now, dt)
        frames.append(result.frame_state)
        batches.append(result.batch)
        device.consume(result.batch)
    device.close()

    run = RunResult(
        scenario=scenario, frames=frames, batches=batches, device=device, core=core, errors=errors
    )
    outcomes = [evaluate_check(check, run) for check in scenario.checks]
    report = ScenarioReport(scenario=scenario, outcomes=outcomes, run=run, out_dir=out_path)
    if out_path is not None:
        report.artifacts.append(out_path / "focal.csv")
        report.artifacts.append(_write_frame_log(out_path, frames))
        report.artifacts.extend(_write_summary(out_path, report))
        if figures:
            from .report import scenario_figure

            report.artifacts.append(scenario_figure(out_path, run))
    return report


def _write_frame_log(out_path: Path, frames) -> Path:
    path = out_path / "frames.csv"
    with path.open("w", newline="\n") as fh:
        fh.write("# seq,t,bpm,flatline,phase,scale,active\n")
        for fs in frames:
            bpm = "" if fs.bpm is None else f"{fs.bpm:.6f}"
            active = int(any(h.haptic_active for h in fs.hands))
            fh.write(
                f"{fs.seq},{fs.t:.6f},{bpm},{int(fs.flatline)},"
                f"{fs.phase:.6f},{fs.scale:.6f},{active}\n"
            )
    return path


def _write_summary(out_path: Path, report: ScenarioReport) -> list[Path]:
    txt = out_path / "report.txt"
    csv = out_path / "report.csv"
    sc = report.scenario
    with txt.open("w", newline="\n") as fh:
        fh.write(f"scenario: {sc.name}\n")
        fh.write(f"mode: {sc.mode_name}  duration: {sc.duration} s  frame_rate: {sc.frame_rate}\n")
        fh.write(
            f"frames: {len(report.run.frames)}  commands: {report.run.device.accepted}"
            f"  violations: {report.run.device.violations}\n"
        )
        for o in report.outcomes:
            fh.write(f"[{'PASS' if o.passed else 'FAIL'}] {o.kind}: {o.detail}\n")
        fh.write(f"result: {'PASS' if report.passed else 'FAIL'}\n")
    with csv.open("w", newline="\n") as fh:
        fh.write("check,passed,detail\n")
        for o in report.outcomes:
            detail = o.detail.replace(",", ";")
            fh.write(f"{o.kind},{int(o.passed)},{detail}\n")
    return [txt, csv]


# -- checks -------------------------------------------------------------------


def evaluate_check(check: Check, run: RunResult) -> CheckOutcome:
    try:
        fn = _CHECKS[check.kind]
    except KeyError:
        return CheckOutcome(check.kind, False, f"unknown check kind {check.kind!r}")
    try:
        return fn(run, **check.params)
    except TypeError as exc:
        return CheckOutcome(check.kind, False, f"bad check parameters: {exc}")


def _palm_at(run: RunResult, t: float):
    return run.scenario.hand_script.sample(t)[0]


def _check_bpm_converges(run: RunResult, target: float, by: float, tol: float = 1.0) -> CheckOutcome:
    late = [fs for fs in run.frames if fs.t >= by]
    if not late:
        return CheckOutcome("bpm_converges", False, f"no frames at or after t={by}")
    bad = [fs for fs in late if fs.bpm is None or abs(fs.bpm - target) > tol]
    if bad:
        first = bad[0]
        return CheckOutcome(
            "bpm_converges",
            False,
            f"bpm {first.bpm} at t={first.t:.3f} not within {tol} of {target}",
        )
    return CheckOutcome(
        "bpm_converges", True, f"bpm within {tol} of {target} for all t >= {by}"
    )


def _check_flatline_static(run: RunResult) -> CheckOutcome:
    scales = {f"{fs.scale:.12f}" for fs in run.frames}
    if scales != {f"{1.0:.12f}"}:
        return CheckOutcome("flatline_static", False, f"surface scale varied: {sorted(scales)[:3]}")
    cmds = run.device.commands
    if not cmds:
        return CheckOutcome("flatline_static", False, "no commands emitted")
    intensities = {c.intensity for c in cmds}
    radii = set()
    for c in cmds:
        center = _palm_at(run, c.t)
        radii.add(round(float(np.linalg.norm(np.asarray(c.pos) - np.asarray(center))), 9))
    if len(intensities) != 1 or len(radii) != 1:
        return CheckOutcome(
            "flatline_static",
            False,
            f"{len(radii)} distinct radii, {len(intensities)} distinct intensities",
        )
    return CheckOutcome(
        "flatline_static",
        True,
        f"constant radius {next(iter(radii)):.4f} m, intensity {next(iter(intensities)):.3f}",
    )


def _check_envelope_period(
    run: RunResult,
    expected: float,
    start: float,
    end: float,
    signal: str = "radius",
    tol_frames: float = 1.0,
) -> CheckOutcome:
    sc = run.scenario
    cmds = [c for c in run.device.commands if start <= c.t <= end]
    if not cmds:
        return CheckOutcome("envelope_period", False, f"no commands in [{start}, {end}]")
    center = _palm_at(run, cmds[0].t)
    times, radii, intensities = per_frame_series(cmds, center, sc.frame_rate)
    series = radii if signal == "radius" else intensities
    measured = fundamental_period(series, 1.0 / sc.frame_rate)
    tol = tol_frames / sc.frame_rate + 1e-9
    if measured is None:
        return CheckOutcome("envelope_period", False, f"{signal} envelope has no period")
    if abs(measured - expected) > tol:
        return CheckOutcome(
            "envelope_period",
            False,
            f"{signal} period {measured:.4f} s != {expected:.4f} s (tol {tol:.4f})",
        )
    return CheckOutcome(
        "envelope_period", True, f"{signal} period {measured:.4f} s in [{start}, {end}]"
    )


def _constant_trace_bpm(run: RunResult) -> float | None:
    values = {bpm for _, bpm in run.scenario.hr_trace.keyframes}
    return values.pop() if len(values) == 1 else None


def _check_gate_transitions(run: RunResult, tol_frames: int = 1) -> CheckOutcome:
    sc = run.scenario
    if sc.hand_script is None:
        return CheckOutcome("gate_transitions", False, "scenario has no hand script")
    bpm = _constant_trace_bpm(run)
    if bpm is None:
        return CheckOutcome(
            "gate_transitions", False, "crossing oracle requires a constant-bpm trace"
        )
    heart = sc.scene.build_heart()
    expected = hologram_crossing_times(sc.hand_script, heart, bpm, sc.duration)
    measured = active_transitions(run.frames, hand_id=sc.hand_id)
    if len(expected) != len(measured):
        return CheckOutcome(
            "gate_transitions",
            False,
            f"{len(measured)} transitions, oracle predicts {len(expected)}",
        )
    rate = sc.frame_rate
    worst = 0
    for (t_exp, dir_exp), (t_meas, dir_meas) in zip(expected, measured):
        if dir_exp != dir_meas:
            return CheckOutcome(
                "gate_transitions", False, f"direction mismatch at t={t_meas:.3f}"
            )
        n_exp = math.ceil(t_exp * rate - 1e-9)
        n_meas = round(t_meas * rate)
        worst = max(worst, abs(n_meas - n_exp))
    if worst > tol_frames:
        return CheckOutcome(
            "gate_transitions", False, f"worst transition offset {worst} frames > {tol_frames}"
        )
    return CheckOutcome(
        "gate_transitions",
        True,
        f"{len(measured)} transitions within {tol_frames} frame(s) of the oracle",
    )


def _check_no_commands_outside(run: RunResult, guard_frames: int = 2) -> CheckOutcome:
    sc = run.scenario
    if sc.hand_script is None:
        return CheckOutcome("no_commands_outside", False, "scenario has no hand script")
    bpm = _constant_trace_bpm(run)
    if bpm is None:
        return CheckOutcome(
            "no_commands_outside", False, "crossing oracle requires a constant-bpm trace"
        )
    heart = sc.scene.build_heart()
    crossings = hologram_crossing_times(sc.hand_script, heart, bpm, sc.duration)
    guard = guard_frames / sc.frame_rate
    offenders = 0
    for fs, batch in zip(run.frames, run.batches):
        inside = False
        for t_cross, now_inside in crossings:
            if fs.t >= t_cross:
                inside = now_inside
        near_crossing = any(abs(fs.t - t_cross) <= guard for t_cross, _ in crossings)
        if not inside and not near_crossing and batch.commands:
            offenders += 1
    if offenders:
        return CheckOutcome(
            "no_commands_outside", False, f"{offenders} frames emitted commands while outside"
        )
    return CheckOutcome("no_commands_outside", True, "no commands while the hand was outside")


def _check_haptics_active(run: RunResult, start: float, end: float | None = None) -> CheckOutcome:
    stop = end if end is not None else run.scenario.duration
    window = [fs for fs in run.frames if start <= fs.t <= stop]
    inactive = [fs for fs in window if not any(h.haptic_active for h in fs.hands)]
    if inactive:
        return CheckOutcome(
            "haptics_active", False, f"{len(inactive)} inactive frames in [{start}, {stop}]"
        )
    return CheckOutcome("haptics_active", True, f"haptics active throughout [{start}, {stop}]")


def _check_no_violations(run: RunResult) -> CheckOutcome:
    v = run.device.violations
    if v:
        return CheckOutcome("no_violations", False, f"haptic device counted {v} violations")
    return CheckOutcome(
        "no_violations", True, f"0 violations across {run.device.accepted} commands"
    )


_CHECKS = {
    "bpm_converges": _check_bpm_converges,
    "flatline_static": _check_flatline_static,
    "envelope_period": _check_envelope_period,
    "gate_transitions": _check_gate_transitions,
    "no_commands_outside": _check_no_commands_outside,
    "haptics_active": _check_haptics_active,
    "no_violations": _check_no_violations,
}
