"""Heart-rate ingestion, sliding-window smoothing, and pulse waveform synthesis.

The wearable reports BPM roughly every 5 s; readings are kept in a 6 s
sliding buffer and smoothed by an arithmetic mean over that window. A BPM of
0 encodes a flatline. A synthetic pulse waveform (one Gaussian pulse per
beat) stands in for the optical pulse trace and drives both the visual
pulsation and the haptic envelope.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

BPM_MAX = 250.0
WINDOW_S = 6.0
STALENESS_TIMEOUT_S = 15.0

# Gaussian pulse placement within one beat period, as fractions of the period.
PULSE_PEAK_FRAC = 0.15
PULSE_SIGMA_FRAC = 0.08

TWO_PI = 2.0 * math.pi


class BiosignalError(ValueError):
    pass


class OutOfOrderSample(BiosignalError):
    pass


class BpmOutOfRange(BiosignalError):
    pass


class NonPositiveBpm(BiosignalError):
    pass


class EmptyWindow(BiosignalError):
    pass


@dataclass(frozen=True)
class HeartRateSample:
    t: float
    bpm: float


class HrBuffer:
    """Time-ordered BPM readings, kept within `window` of the newest sample.

    Owned by the frame loop; all reads are pure given the buffer contents.
    """

    def __init__(self, window: float = WINDOW_S, staleness_timeout: float = STALENESS_TIMEOUT_S):
        self.window = float(window)
        self.staleness_timeout = float(staleness_timeout)
        self.samples: list[HeartRateSample] = []
        self.last_smoothed: float | None = None

    def ingest(self, sample: HeartRateSample) -> None:
        """Append a sample and evict readings older than the window.

        Rejects out-of-order timestamps and BPM outside [0, 250].
        """
        if not math.isfinite(sample.bpm) or not math.isfinite(sample.t):
            raise BpmOutOfRange(f"non-finite sample {sample}")
        if not 0.0 <= sample.bpm <= BPM_MAX:
            raise BpmOutOfRange(f"bpm {sample.bpm} outside [0, {BPM_MAX}]")
        if self.samples and sample.t < self.samples[-1].t:
            raise OutOfOrderSample(
                f"sample at t={sample.t} older than buffered t={self.samples[-1].t}"
            )
        self.samples.append(sample)
        cutoff = sample.t - self.window
        self.samples = [s for s in self.samples if s.t >= cutoff]
        # All retained samples are in-window relative to the newest, so this
        # mean is the value a later stale read should hold.
        self.last_smoothed = sum(s.bpm for s in self.samples) / len(self.samples)

    def smoothed_bpm(self, now: float) -> float | None:
        """Mean BPM over the window ending at `now`.

        Holds the last smoothed value while the stream is quiet but not yet
        stale; returns None once nothing was heard for `staleness_timeout`.
        """
        in_window = [s.bpm for s in self.samples if s.t >= now - self.window]
        if in_window:
            return sum(in_window) / len(in_window)
        if self.samples and self.samples[-1].t >= now - self.staleness_timeout:
            return self.last_smoothed
        return None

    def is_flatline(self, now: float) -> bool:
        """True when the stream is absent, stale, or averaging to zero."""
        smoothed = self.smoothed_bpm(now)
        return smoothed is None or smoothed == 0.0


def ppg_waveform(bpm: float, t: float) -> float:
    """Normalized pulse value in [0, 1]: one Gaussian pulse per beat.

    Period is 60/bpm seconds; the pulse peaks at 0.15 of the period with a
    width of 0.08 of the period, so the shape is invariant under BPM rescale.
    """
    if bpm <= 0:
        raise NonPositiveBpm(f"bpm must be > 0, got {bpm}")
    period = 60.0 / bpm
    tau = t % period
    peak = PULSE_PEAK_FRAC * period
    sigma = PULSE_SIGMA_FRAC * period
    return math.exp(-((tau - peak) ** 2) / (2.0 * sigma * sigma))


def normalize_window(raw: list[tuple[float, float]], now: float, window: float = WINDOW_S) -> float:
    """Min-max normalize the latest value against the window's span.

    For replayed raw pulse traces. A constant window normalizes to 0, which
    downstream treats the same as a flat signal.
    """
    in_window = [(t, v) for t, v in raw if now - window <= t <= now]
    if not in_window:
        raise EmptyWindow(f"no samples within {window} s of t={now}")
    values = [v for _, v in in_window]
    lo, hi = min(values), max(values)
    if hi == lo:
        return 0.0
    latest = max(in_window, key=lambda tv: tv[0])[1]
    return (latest - lo) / (hi - lo)


def advance_phase(phase: float, bpm: float, dt: float) -> float:
    """Advance beat phase by 2*pi*(bpm/60)*dt, wrapped to [0, 2*pi).

    A flatlined (zero) BPM freezes the phase.
    """
    if dt < 0:
        raise BiosignalError(f"dt must be >= 0, got {dt}")
    if bpm == 0:
        return phase
    return (phase + TWO_PI * (bpm / 60.0) * dt) % TWO_PI


def load_hr_trace(path) -> list[tuple[float, float]]:
    """Read `t_seconds,bpm` keyframes; `#` comments and blanks skipped."""
    rows: list[tuple[float, float]] = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise BiosignalError(f"{path}:{lineno}: expected `t,bpm`")
        t, bpm = float(parts[0]), float(parts[1])
        if rows and t <= rows[-1][0]:
            raise BiosignalError(f"{path}:{lineno}: timestamps must be strictly increasing")
        if not 0.0 <= bpm <= BPM_MAX:
            raise BpmOutOfRange(f"{path}:{lineno}: bpm {bpm} outside [0, {BPM_MAX}]")
        rows.append((t, bpm))
    if not rows:
        raise BiosignalError(f"{path}: empty trace")
    return rows
