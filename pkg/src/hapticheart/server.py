"""The authoritative frame loop and session state machine, transport-free.

ServerCore consumes decoded messages and produces outbound ones; the socket
layer (net module) and the in-process scenario runner both drive it through
the same interface, so virtual-clock runs exercise the exact code path the
live server uses.

Within a tick the order is fixed: drain heart-rate updates, drain hand
updates (newest per hand wins), update the scene from the smoothed BPM,
render haptic commands, then hand the snapshots back for fan-out. The
server clock is authoritative: samples are stamped with arrival time and
frame timestamps come from the tick, not from device clocks.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

from .biosignal import BiosignalError, HeartRateSample, HrBuffer
from .config import AppConfig
from .geometry import RigidTransform, apply, calibration_residual, solve_rigid_transform
from .geometry import GeometryError
from .hand import HandError, HandFrame, STALE_FRAME_S, intersect_targets
from .haptics import HapticMode, mode_from_name, render_tick
from .protocol import (
    CalibrationResult,
    CalibrationSet,
    DEVICE_KINDS,
    ErrorMsg,
    FocalBatch,
    FrameState,
    HandStatus,
    HandUpdate,
    Hello,
    HrUpdate,
    MalformedMessage,
    Message,
    PROTO_VERSION,
    UnknownType,
    decode,
)
from .scene import SceneState, surface_scale, update_scene

OBSERVER_KINDS = ("headset", "ui")


@dataclass
class Session:
    session_id: int
    device_kind: str | None = None
    last_seen: float = 0.0


@dataclass(frozen=True)
class Outbound:
    session_id: int
    message: Message
    close: bool = False


@dataclass
class Diagnostics:
    hr_rejected: int = 0
    hand_rejected: int = 0
    decode_errors: int = 0
    out_of_volume_dropped: int = 0
    commands_emitted: int = 0
    last_hr_device_t: float | None = None


@dataclass(frozen=True)
class FrameResult:
    frame_state: FrameState
    batch: FocalBatch
    scene: SceneState


class ServerCore:
    """Single owner of scene, buffer, and session state."""

    def __init__(self, cfg: AppConfig | None = None, mode: HapticMode | None = None):
        self.cfg = cfg or AppConfig()
        self.mode = mode if mode is not None else mode_from_name(self.cfg.mode, self.cfg.am_frequency)
        self.hr = HrBuffer(self.cfg.hr_window, self.cfg.hr_staleness_timeout)
        self.scene = SceneState(heart=self.cfg.scene.build_heart())
        self.calibration = RigidTransform.identity()
        self.sessions: dict[int, Session] = {}
        self.hands: dict[str, tuple[HandFrame, float]] = {}
        self.diag = Diagnostics()
        self._next_session = 1
        self._pending_hr: list[HrUpdate] = []
        self._pending_hands: list[tuple[HandFrame, float]] = []

    # -- session lifecycle -------------------------------------------------

    def open_session(self) -> int:
        sid = self._next_session
        self._next_session += 1
        self.sessions[sid] = Session(session_id=sid)
        return sid

    def close_session(self, session_id: int) -> None:
        self.sessions.pop(session_id, None)

    def haptic_session_id(self) -> int | None:
        for s in self.sessions.values():
            if s.device_kind == "haptic_device":
                return s.session_id
        return None

    def observer_ids(self) -> list[int]:
        return [s.session_id for s in self.sessions.values() if s.device_kind in OBSERVER_KINDS]

    def ui_session_ids(self) -> list[int]:
        return [s.session_id for s in self.sessions.values() if s.device_kind == "ui"]

    # -- message handling ----------------------------------------------------

    def handle_line(self, session_id: int, line: str, now: float) -> list[Outbound]:
        """Decode one wire line; decode failures answer with an error message.

        A malformed or unknown line never tears the session down; only a
        broken handshake does.
        """
        try:
            msg = decode(line)
        except MalformedMessage as exc:
            self.diag.decode_errors += 1
            return [Outbound(session_id, ErrorMsg("malformed-message", str(exc)))]
        except UnknownType as exc:
            self.diag.decode_errors += 1
            return [Outbound(session_id, ErrorMsg("unknown-type", str(exc)))]
        return self.handle_message(session_id, msg, now)

    def handle_message(self, session_id: int, msg: Message, now: float) -> list[Outbound]:
        session = self.sessions.get(session_id)
        if session is None:
            return []
        session.last_seen = now

        if session.device_kind is None:
            return self._handshake(session, msg)

        if isinstance(msg, Hello):
            return [Outbound(session_id, ErrorMsg("duplicate-hello", "session already registered"))]
        if isinstance(msg, HrUpdate):
            self._pending_hr.append(msg)
            return []
        if isinstance(msg, HandUpdate):
            return self._ingest_hand(session, msg, now)
        if isinstance(msg, CalibrationSet):
            return self._ingest_calibration(session, msg)
        if isinstance(msg, ErrorMsg):
            return []
        return [
            Outbound(session_id, ErrorMsg("unexpected-type", f"{type(msg).__name__} is server-sent"))
        ]

    def _handshake(self, session: Session, msg: Message) -> list[Outbound]:
        sid = session.session_id
        if not isinstance(msg, Hello):
            return [
                Outbound(sid, ErrorMsg("not-hello", "first message must be hello"), close=True)
            ]
        if msg.proto != PROTO_VERSION:
            return [
                Outbound(
                    sid,
                    ErrorMsg("version-mismatch", f"server speaks proto {PROTO_VERSION}"),
                    close=True,
                )
            ]
        if msg.device_kind not in DEVICE_KINDS:
            return [
                Outbound(
                    sid,
                    ErrorMsg("unknown-kind", f"device_kind must be one of {DEVICE_KINDS}"),
                    close=True,
                )
            ]
        if msg.device_kind == "haptic_device" and self.haptic_session_id() is not None:
            return [
                Outbound(
                    sid, ErrorMsg("duplicate-role", "a haptic device is already connected"), close=True
                )
            ]
        session.device_kind = msg.device_kind
        return []

    def _ingest_hand(self, session: Session, msg: HandUpdate, now: float) -> list[Outbound]:
        try:
            frame = self._to_device_frame(msg)
        except HandError as exc:
            self.diag.hand_rejected += 1
            return [Outbound(session.session_id, ErrorMsg("bad-hand-frame", str(exc)))]
        self._pending_hands.append((frame, now))
        return []

    def _to_device_frame(self, msg: HandUpdate) -> HandFrame:
        """Convert an incoming hand pose to the device frame before any use."""
        palm, normal, joints = msg.palm, msg.normal, msg.joints
        if msg.frame == "headset":
            T = self.calibration
            palm = tuple(apply(T, palm))
            joints = tuple(tuple(apply(T, j)) for j in joints)
            normal = tuple(T.rotation @ normal)
        return HandFrame(
            t=msg.t, hand_id=msg.hand_id, palm_center=palm, palm_normal=normal, joints=joints
        )

    def _ingest_calibration(self, session: Session, msg: CalibrationSet) -> list[Outbound]:
        src = [p[:3] for p in msg.pairs]
        dst = [p[3:] for p in msg.pairs]
        try:
            T = solve_rigid_transform(src, dst)
        except GeometryError as exc:
            return [Outbound(session.session_id, ErrorMsg("bad-calibration", str(exc)))]
        self.calibration = T
        residual = calibration_residual(T, src, dst)
        return [
            Outbound(
                session.session_id,
                CalibrationResult(
                    residual=residual,
                    rotation=tuple(tuple(float(v) for v in row) for row in T.rotation),
                    translation=tuple(float(v) for v in T.translation),
                ),
            )
        ]

    # -- frame loop ----------------------------------------------------------

    def frame_tick(self, now: float, dt: float) -> FrameResult:
        """Run one authoritative frame at tick time `now`.

        Ingest errors are counted, never raised: a bad sample degrades
        diagnostics, not the loop.
        """
        for msg in self._pending_hr:
            self.diag.last_hr_device_t = msg.t
            try:
                self.hr.ingest(HeartRateSample(t=now, bpm=msg.bpm))
            except BiosignalError:
                self.diag.hr_rejected += 1
        self._pending_hr.clear()

        for frame, recv_t in self._pending_hands:
            current = self.hands.get(frame.hand_id)
            if current is None or frame.t >= current[0].t:
                self.hands[frame.hand_id] = (frame, recv_t)
        self._pending_hands.clear()

        smoothed = self.hr.smoothed_bpm(now)
        updated = update_scene(self.scene, smoothed, dt)
        # Re-stamp with the authoritative tick time so frame timestamps are
        # exact rationals of the frame rate, not an accumulated float sum.
        self.scene = replace(updated, t=now)

        active = [
            frame for frame, recv_t in self.hands.values() if now - recv_t <= STALE_FRAME_S
        ]
        commands, dropped = render_tick(
            self.scene, active, self.mode, now, dt, self.cfg.stm, self.cfg.volume
        )
        self.diag.out_of_volume_dropped += dropped
        self.diag.commands_emitted += len(commands)

        statuses = tuple(
            HandStatus(
                hand_id=frame.hand_id,
                haptic_active=bool(intersect_targets(frame, self.scene.heart)),
                palm=frame.palm_center,
                joints=frame.joints,
            )
            for frame in sorted(active, key=lambda f: f.hand_id)
        )
        heart = self.scene.heart
        frame_state = FrameState(
            seq=self.scene.seq,
            t=now,
            bpm=heart.bpm,
            flatline=heart.flatline,
            phase=heart.phase,
            scale=surface_scale(heart),
            anchor=heart.anchor,
            radii=heart.base_radii,
            hands=statuses,
        )
        batch = FocalBatch(seq=self.scene.seq, commands=tuple(commands))
        return FrameResult(frame_state=frame_state, batch=batch, scene=self.scene)
