"""Frame clocks: wall time for live runs, tick-counted virtual time for replay.

Virtual time is derived from an integer tick count (now = ticks / rate), so
frame timestamps are exact rationals of the frame rate and never accumulate
float drift across a run.
"""
from __future__ import annotations

import time


class VirtualClock:
    """Advances only by explicit ticks; deterministic across runs."""

    mode = "virtual"

    def __init__(self, frame_rate: float = 60.0):
        if frame_rate <= 0:
            raise ValueError(f"frame_rate must be positive, got {frame_rate}")
        self.frame_rate = float(frame_rate)
        self.ticks = 0

    @property
    def tick_interval(self) -> float:
        return 1.0 / self.frame_rate

    @property
    def now(self) -> float:
        return self.ticks / self.frame_rate

    def advance(self) -> float:
        self.ticks += 1
        return self.now


class WallClock:
    """Monotonic wall time, zeroed at construction."""

    mode = "wall"

    def __init__(self, frame_rate: float = 60.0):
        if frame_rate <= 0:
            raise ValueError(f"frame_rate must be positive, got {frame_rate}")
        self.frame_rate = float(frame_rate)
        self._start = time.monotonic()

    @property
    def tick_interval(self) -> float:
        return 1.0 / self.frame_rate

    @property
    def now(self) -> float:
        return time.monotonic() - self._start
