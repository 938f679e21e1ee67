"""Shared test helpers: random message generation for protocol fuzzing."""
from __future__ import annotations

import random

from hapticheart.haptics import FocalPointCommand
from hapticheart.protocol import (
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
)

_INTERESTING = [0.0, -0.0, 1.0, -1.5, 0.1, 1e-9, -1e-9, 1e300, -1e300, 2.5e-323, 123456.789]


def _f(rng: random.Random, lo: float = -1e3, hi: float = 1e3) -> float:
    if rng.random() < 0.15:
        return rng.choice(_INTERESTING)
    return rng.uniform(lo, hi)


def _vec(rng: random.Random) -> tuple[float, float, float]:
    return (_f(rng), _f(rng), _f(rng))


def _unit(rng: random.Random) -> tuple[float, float, float]:
    import math

    while True:
        v = (rng.gauss(0, 1), rng.gauss(0, 1), rng.gauss(0, 1))
        n = math.sqrt(sum(c * c for c in v))
        if n > 1e-6:
            return (v[0] / n, v[1] / n, v[2] / n)


def random_message(rng: random.Random):
    kind = rng.randrange(8)
    if kind == 0:
        return Hello(device_kind=rng.choice(DEVICE_KINDS), proto=rng.randrange(0, 5))
    if kind == 1:
        return HrUpdate(t=_f(rng, 0, 1e6), bpm=_f(rng, 0, 250))
    if kind == 2:
        return HandUpdate(
            t=_f(rng, 0, 1e6),
            hand_id=rng.choice(["left", "right"]),
            palm=_vec(rng),
            normal=_unit(rng),
            joints=tuple(_vec(rng) for _ in range(rng.randrange(1, 6))),
            frame=rng.choice(["device", "headset"]),
        )
    if kind == 3:
        hands = tuple(
            HandStatus(
                hand_id=rng.choice(["left", "right"]),
                haptic_active=rng.random() < 0.5,
                palm=_vec(rng),
                joints=tuple(_vec(rng) for _ in range(rng.randrange(0, 4))),
            )
            for _ in range(rng.randrange(0, 3))
        )
        return FrameState(
            seq=rng.randrange(0, 10**9),
            t=_f(rng, 0, 1e6),
            bpm=None if rng.random() < 0.2 else _f(rng, 0, 250),
            flatline=rng.random() < 0.5,
            phase=_f(rng, 0, 6.28),
            scale=_f(rng, 0.9, 1.1),
            anchor=_vec(rng),
            radii=(abs(_f(rng)) + 0.01, abs(_f(rng)) + 0.01, abs(_f(rng)) + 0.01),
            hands=hands,
        )
    if kind == 4:
        commands = tuple(
            FocalPointCommand(
                t=_f(rng, 0, 1e6),
                hand_id=rng.choice(["left", "right"]),
                pos=_vec(rng),
                intensity=rng.random(),
            )
            for _ in range(rng.randrange(0, 6))
        )
        return FocalBatch(seq=rng.randrange(0, 10**9), commands=commands)
    if kind == 5:
        return CalibrationSet(
            pairs=tuple(tuple(_f(rng) for _ in range(6)) for _ in range(rng.randrange(3, 8)))
        )
    if kind == 6:
        return CalibrationResult(
            residual=abs(_f(rng)), rotation=tuple(_vec(rng) for _ in range(3)), translation=_vec(rng)
        )
    return ErrorMsg(code=rng.choice(["oops", "bad-thing", "x"]), detail="detail " + str(rng.random()))
