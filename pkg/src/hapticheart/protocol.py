"""Line protocol: one JSON object per newline-terminated UTF-8 line.

The same messages travel over TCP and WebSocket (one line per text frame).
Decoding ignores unknown fields for forward compatibility but rejects
unknown type tags and non-finite numbers. See docs/protocol.md for one
example line per message type.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Union

from .haptics import FocalPointCommand

PROTO_VERSION = 1

DEVICE_KINDS = ("wearable", "hand_tracker", "headset", "haptic_device", "ui")
FRAME_LABELS = ("device", "headset")


class ProtocolError(ValueError):
    pass


class MalformedMessage(ProtocolError):
    pass


class UnknownType(ProtocolError):
    pass


@dataclass(frozen=True)
class Hello:
    device_kind: str
    proto: int = PROTO_VERSION


@dataclass(frozen=True)
class HrUpdate:
    t: float
    bpm: float


@dataclass(frozen=True)
class HandUpdate:
    t: float
    hand_id: str
    palm: tuple[float, float, float]
    normal: tuple[float, float, float]
    joints: tuple[tuple[float, float, float], ...]
    frame: str = "device"


@dataclass(frozen=True)
class HandStatus:
    hand_id: str
    haptic_active: bool
    palm: tuple[float, float, float]
    joints: tuple[tuple[float, float, float], ...]


@dataclass(frozen=True)
class FrameState:
    seq: int
    t: float
    bpm: float | None
    flatline: bool
    phase: float
    scale: float
    anchor: tuple[float, float, float]
    radii: tuple[float, float, float]
    hands: tuple[HandStatus, ...]


@dataclass(frozen=True)
class FocalBatch:
    seq: int
    commands: tuple[FocalPointCommand, ...]


@dataclass(frozen=True)
class CalibrationSet:
    pairs: tuple[tuple[float, float, float, float, float, float], ...]


@dataclass(frozen=True)
class CalibrationResult:
    residual: float
    rotation: tuple[tuple[float, float, float], ...]
    translation: tuple[float, float, float]


@dataclass(frozen=True)
class ErrorMsg:
    code: str
    detail: str = ""


Message = Union[
    Hello,
    HrUpdate,
    HandUpdate,
    FrameState,
    FocalBatch,
    CalibrationSet,
    CalibrationResult,
    ErrorMsg,
]


def _num(obj, what: str) -> float:
    if isinstance(obj, bool) or not isinstance(obj, (int, float)):
        raise MalformedMessage(f"{what} must be a number, got {type(obj).__name__}")
    v = float(obj)
    if not math.isfinite(v):
        raise MalformedMessage(f"{what} must be finite")
    return v


def _vec3(obj, what: str) -> tuple[float, float, float]:
    if not isinstance(obj, (list, tuple)) or len(obj) != 3:
        raise MalformedMessage(f"{what} must be a 3-element array")
    return (_num(obj[0], what), _num(obj[1], what), _num(obj[2], what))


def _str(obj, what: str, allowed=None) -> str:
    if not isinstance(obj, str):
        raise MalformedMessage(f"{what} must be a string")
    if allowed is not None and obj not in allowed:
        raise MalformedMessage(f"{what} must be one of {allowed}, got {obj!r}")
    return obj


def _field(data: dict, key: str):
    if key not in data:
        raise MalformedMessage(f"missing field {key!r}")
    return data[key]


def encode(msg: Message) -> str:
    """Serialize a message to one newline-terminated JSON line."""
    if isinstance(msg, Hello):
        payload = {"type": "hello", "device_kind": msg.device_kind, "proto": msg.proto}
    elif isinstance(msg, HrUpdate):
        payload = {"type": "hr_update", "t": msg.t, "bpm": msg.bpm}
    elif isinstance(msg, HandUpdate):
        payload = {
            "type": "hand_update",
            "t": msg.t,
            "hand_id": msg.hand_id,
            "palm": list(msg.palm),
            "normal": list(msg.normal),
            "joints": [list(j) for j in msg.joints],
            "frame": msg.frame,
        }
    elif isinstance(msg, FrameState):
        payload = {
            "type": "frame_state",
            "seq": msg.seq,
            "t": msg.t,
            "bpm": msg.bpm,
            "flatline": msg.flatline,
            "phase": msg.phase,
            "scale": msg.scale,
            "anchor": list(msg.anchor),
            "radii": list(msg.radii),
            "hands": [
                {
                    "hand_id": h.hand_id,
                    "haptic_active": h.haptic_active,
                    "palm": list(h.palm),
                    "joints": [list(j) for j in h.joints],
                }
                for h in msg.hands
            ],
        }
    elif isinstance(msg, FocalBatch):
        payload = {
            "type": "focal_batch",
            "seq": msg.seq,
            "commands": [
                {"t": c.t, "hand": c.hand_id, "pos": list(c.pos), "intensity": c.intensity}
                for c in msg.commands
            ],
        }
    elif isinstance(msg, CalibrationSet):
        payload = {"type": "calibration_set", "pairs": [list(p) for p in msg.pairs]}
    elif isinstance(msg, CalibrationResult):
        payload = {
            "type": "calibration_result",
            "residual": msg.residual,
            "rotation": [list(r) for r in msg.rotation],
            "translation": list(msg.translation),
        }
    elif isinstance(msg, ErrorMsg):
        payload = {"type": "error", "code": msg.code, "detail": msg.detail}
    else:
        raise ProtocolError(f"cannot encode {type(msg).__name__}")
    return json.dumps(payload, separators=(",", ":"), sort_keys=True, allow_nan=False) + "\n"


def _reject_constant(name: str):
    raise MalformedMessage(f"non-finite JSON constant {name!r}")


def decode(line: str) -> Message:
    """Parse one complete line back into a message.

    Unknown fields are ignored; an unknown type tag raises UnknownType and
    anything else wrong with the line raises MalformedMessage.
    """
    try:
        data = json.loads(line, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise MalformedMessage(f"invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise MalformedMessage("message must be a JSON object")
    tag = _field(data, "type")
    if not isinstance(tag, str):
        raise MalformedMessage("type tag must be a string")

    if tag == "hello":
        proto = _field(data, "proto")
        if isinstance(proto, bool) or not isinstance(proto, int):
            raise MalformedMessage("proto must be an integer")
        return Hello(device_kind=_str(_field(data, "device_kind"), "device_kind"), proto=proto)
    if tag == "hr_update":
        return HrUpdate(t=_num(_field(data, "t"), "t"), bpm=_num(_field(data, "bpm"), "bpm"))
    if tag == "hand_update":
        joints = _field(data, "joints")
        if not isinstance(joints, list):
            raise MalformedMessage("joints must be an array")
        return HandUpdate(
            t=_num(_field(data, "t"), "t"),
            hand_id=_str(_field(data, "hand_id"), "hand_id"),
            palm=_vec3(_field(data, "palm"), "palm"),
            normal=_vec3(_field(data, "normal"), "normal"),
            joints=tuple(_vec3(j, "joint") for j in joints),
            frame=_str(data.get("frame", "device"), "frame", FRAME_LABELS),
        )
    if tag == "frame_state":
        hands_raw = _field(data, "hands")
        if not isinstance(hands_raw, list):
            raise MalformedMessage("hands must be an array")
        hands = []
        for h in hands_raw:
            if not isinstance(h, dict):
                raise MalformedMessage("hand status must be an object")
            joints = h.get("joints", [])
            if not isinstance(joints, list):
                raise MalformedMessage("joints must be an array")
            active = _field(h, "haptic_active")
            if not isinstance(active, bool):
                raise MalformedMessage("haptic_active must be a boolean")
            hands.append(
                HandStatus(
                    hand_id=_str(_field(h, "hand_id"), "hand_id"),
                    haptic_active=active,
                    palm=_vec3(_field(h, "palm"), "palm"),
                    joints=tuple(_vec3(j, "joint") for j in joints),
                )
            )
        seq = _field(data, "seq")
        if isinstance(seq, bool) or not isinstance(seq, int):
            raise MalformedMessage("seq must be an integer")
        flatline = _field(data, "flatline")
        if not isinstance(flatline, bool):
            raise MalformedMessage("flatline must be a boolean")
        bpm = _field(data, "bpm")
        return FrameState(
            seq=seq,
            t=_num(_field(data, "t"), "t"),
            bpm=None if bpm is None else _num(bpm, "bpm"),
            flatline=flatline,
            phase=_num(_field(data, "phase"), "phase"),
            scale=_num(_field(data, "scale"), "scale"),
            anchor=_vec3(_field(data, "anchor"), "anchor"),
            radii=_vec3(_field(data, "radii"), "radii"),
            hands=tuple(hands),
        )
    if tag == "focal_batch":
        seq = _field(data, "seq")
        if isinstance(seq, bool) or not isinstance(seq, int):
            raise MalformedMessage("seq must be an integer")
        raw = _field(data, "commands")
        if not isinstance(raw, list):
            raise MalformedMessage("commands must be an array")
        commands = []
        for c in raw:
            if not isinstance(c, dict):
                raise MalformedMessage("command must be an object")
            try:
                commands.append(
                    FocalPointCommand(
                        t=_num(_field(c, "t"), "t"),
                        hand_id=_str(_field(c, "hand"), "hand"),
                        pos=_vec3(_field(c, "pos"), "pos"),
                        intensity=_num(_field(c, "intensity"), "intensity"),
                    )
                )
            except ValueError as exc:
                raise MalformedMessage(f"bad focal command: {exc}") from exc
        return FocalBatch(seq=seq, commands=tuple(commands))
    if tag == "calibration_set":
        raw = _field(data, "pairs")
        if not isinstance(raw, list):
            raise MalformedMessage("pairs must be an array")
        pairs = []
        for p in raw:
            if not isinstance(p, (list, tuple)) or len(p) != 6:
                raise MalformedMessage("each pair must have 6 numbers (sx,sy,sz,dx,dy,dz)")
            pairs.append(tuple(_num(v, "pair value") for v in p))
        return CalibrationSet(pairs=tuple(pairs))
    if tag == "calibration_result":
        rot = _field(data, "rotation")
        if not isinstance(rot, list) or len(rot) != 3:
            raise MalformedMessage("rotation must be a 3x3 array")
        return CalibrationResult(
            residual=_num(_field(data, "residual"), "residual"),
            rotation=tuple(_vec3(r, "rotation row") for r in rot),
            translation=_vec3(_field(data, "translation"), "translation"),
        )
    if tag == "error":
        return ErrorMsg(
            code=_str(_field(data, "code"), "code"),
            detail=_str(data.get("detail", ""), "detail"),
        )
    raise UnknownType(f"unknown message type {tag!r}")
