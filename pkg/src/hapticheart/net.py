"""Socket transports: TCP and WebSocket endpoints carrying the line protocol.

One reader task per connection decodes lines and forwards them to the
single ServerCore owner; outbound traffic goes through per-session queues
so a slow reader can never stall the frame loop. Observer queues drop their
oldest frame when full (newest wins); the haptic session keeps at most one
pending batch but is itself never dropped.

Client helpers for the three emulators live here too: the same cores the
in-process scenario runner uses, paced on the wall clock.
"""
from __future__ import annotations

import asyncio
import contextlib
import logging
import time

from websockets.asyncio.server import serve as ws_serve
from websockets.exceptions import ConnectionClosed

from .clock import VirtualClock, WallClock
from .config import AppConfig
from .emulators import HandTrackerEmulator, HapticDeviceEmulator, HrTrace
from .hand import HandScript
from .haptics import FocalLogWriter, mode_from_name
from .protocol import FocalBatch, FrameState, Hello, HrUpdate, decode, encode
from .server import FrameResult, Outbound, ServerCore

log = logging.getLogger(__name__)

OBSERVER_QUEUE = 8


class PortInUse(OSError):
    def __init__(self, port: int):
        super().__init__(f"port {port} is already in use")
        self.port = port


class _SessionIO:
    """Outbound queue plus sender task for one connection."""

    def __init__(self, session_id: int, send_line):
        self.session_id = session_id
        self.send_line = send_line
        self.queue: asyncio.Queue[str] = asyncio.Queue(maxsize=OBSERVER_QUEUE)
        self.task: asyncio.Task | None = None

    def offer(self, line: str) -> None:
        """Enqueue without blocking; drop the oldest entry when full."""
        while True:
            try:
                self.queue.put_nowait(line)
                return
            except asyncio.QueueFull:
                with contextlib.suppress(asyncio.QueueEmpty):
                    self.queue.get_nowait()

    def offer_latest(self, line: str) -> None:
        """Replace anything pending; the consumer only ever sees the newest."""
        with contextlib.suppress(asyncio.QueueEmpty):
            while True:
                self.queue.get_nowait()
        self.queue.put_nowait(line)

    async def pump(self) -> None:
        while True:
            line = await self.queue.get()
            try:
                await self.send_line(line)
            except (ConnectionError, ConnectionClosed, RuntimeError):
                return

    async def shutdown(self, flush: bool) -> None:
        if self.task is not None:
            self.task.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await self.task
        while flush and not self.queue.empty():
            line = self.queue.get_nowait()
            try:
                await self.send_line(line)
            except (ConnectionError, ConnectionClosed, RuntimeError):
                return


class SyncServer:
    """TCP + WebSocket front ends around one ServerCore and one frame loop."""

    def __init__(
        self,
        cfg: AppConfig | None = None,
        core: ServerCore | None = None,
        virtual: bool = False,
        ticks: int | None = None,
        frame_log=None,
        host: str = "127.0.0.1",
    ):
        self.cfg = cfg or AppConfig()
        self.core = core or ServerCore(self.cfg)
        self.virtual = virtual
        self.ticks = ticks
        self.host = host
        self.clock = (
            VirtualClock(self.cfg.frame_rate) if virtual else WallClock(self.cfg.frame_rate)
        )
        self.stopped = asyncio.Event()
        self.frames_run = 0
        self._io: dict[int, _SessionIO] = {}
        self._frame_log = frame_log
        self._tcp_server: asyncio.AbstractServer | None = None
        self._ws_server = None
        self._frame_task: asyncio.Task | None = None

    # -- lifecycle -------------------------------------------------------------

    async def start(self) -> None:
        try:
            self._tcp_server = await asyncio.start_server(
                self._handle_tcp, host=self.host, port=self.cfg.tcp_port
            )
        except OSError as exc:
            raise PortInUse(self.cfg.tcp_port) from exc
        try:
            self._ws_server = await ws_serve(self._handle_ws, self.host, self.cfg.ws_port)
        except OSError as exc:
            self._tcp_server.close()
            raise PortInUse(self.cfg.ws_port) from exc
        self._frame_task = asyncio.create_task(self._frame_loop())
        log.info(
            "listening: tcp=%d ws=%d (%s clock)",
            self.cfg.tcp_port,
            self.cfg.ws_port,
            self.clock.mode,
        )

    async def stop(self) -> None:
        self.stopped.set()
        if self._frame_task is not None:
            self._frame_task.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await self._frame_task
        for io in list(self._io.values()):
            await io.shutdown(flush=False)
        self._io.clear()
        if self._tcp_server is not None:
            self._tcp_server.close()
            await self._tcp_server.wait_closed()
        if self._ws_server is not None:
            self._ws_server.close()
            await self._ws_server.wait_closed()

    async def run(self) -> None:
        """Start, then block until the tick budget is exhausted or cancelled."""
        await self.start()
        try:
            await self.stopped.wait()
        finally:
            await self.stop()

    # -- connection handling -----------------------------------------------------

    def _register(self, send_line) -> _SessionIO:
        sid = self.core.open_session()
        io = _SessionIO(sid, send_line)
        io.task = asyncio.create_task(io.pump())
        self._io[sid] = io
        return io

    def _dispatch(self, outs: list[Outbound]) -> bool:
        close_current = False
        for out in outs:
            io = self._io.get(out.session_id)
            if io is not None:
                io.offer(encode(out.message))
            if out.close:
                close_current = True
        return close_current

    def _handle_incoming(self, io: _SessionIO, line: str) -> bool:
        outs = self.core.handle_line(io.session_id, line, self.clock.now)
        return self._dispatch(outs)

    async def _teardown(self, io: _SessionIO) -> None:
        self.core.close_session(io.session_id)
        self._io.pop(io.session_id, None)
        # Flush so a handshake rejection reaches the peer before the close.
        await io.shutdown(flush=True)

    async def _handle_tcp(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter):
        async def send_line(line: str):
            writer.write(line.encode())
            await writer.drain()

        io = self._register(send_line)
        try:
            while True:
                raw = await reader.readline()
                if not raw:
                    break
                if self._handle_incoming(io, raw.decode("utf-8", errors="replace")):
                    break
        except (ConnectionError, asyncio.IncompleteReadError):
            pass
        finally:
            await self._teardown(io)
            with contextlib.suppress(Exception):
                writer.close()
                await writer.wait_closed()

    async def _handle_ws(self, connection):
        async def send_line(line: str):
            await connection.send(line.rstrip("\n"))

        io = self._register(send_line)
        try:
            async for message in connection:
                if isinstance(message, bytes):
                    message = message.decode("utf-8", errors="replace")
                if self._handle_incoming(io, message):
                    break
        except ConnectionClosed:
            pass
        finally:
            await self._teardown(io)
            with contextlib.suppress(Exception):
                await connection.close()

    # -- frame loop ----------------------------------------------------------------

    def _tick(self, now: float, dt: float) -> FrameResult:
        result = self.core.frame_tick(now, dt)
        frame_line = encode(result.frame_state)
        for sid in self.core.observer_ids():
            io = self._io.get(sid)
            if io is not None:
                io.offer(frame_line)
        batch_line = encode(result.batch)
        haptic_sid = self.core.haptic_session_id()
        if haptic_sid is not None:
            io = self._io.get(haptic_sid)
            if io is not None:
                io.offer_latest(batch_line)
        # ui consoles draw the focal trail, so they get batches too
        for sid in self.core.ui_session_ids():
            io = self._io.get(sid)
            if io is not None:
                io.offer(batch_line)
        if self._frame_log is not None:
            fs = result.frame_state
            bpm = "" if fs.bpm is None else f"{fs.bpm:.6f}"
            self._frame_log.write(
                f"{fs.seq},{fs.t:.6f},{bpm},{int(fs.flatline)},{fs.scale:.6f}\n"
            )
        self.frames_run += 1
        return result

    async def _frame_loop(self) -> None:
        dt = self.clock.tick_interval
        if self.virtual:
            budget = self.ticks if self.ticks is not None else 0
            for _ in range(budget):
                now = self.clock.advance()
                self._tick(now, dt)
                await asyncio.sleep(0)
            self.stopped.set()
            return
        prev = self.clock.now
        next_tick = prev + dt
        while True:
            delay = next_tick - self.clock.now
            if delay > 0:
                await asyncio.sleep(delay)
            now = self.clock.now
            step = now - prev
            self._tick(now, step if step > 0 else dt)
            prev = now
            next_tick += dt
            if now - next_tick > 0.25:
                # Fell far behind (suspended process); resync instead of burst-ticking.
                next_tick = now + dt
            if self.ticks is not None and self.frames_run >= self.ticks:
                self.stopped.set()
                return


# -- emulator clients ---------------------------------------------------------------


async def _drain(reader: asyncio.StreamReader):
    with contextlib.suppress(Exception):
        while await reader.readline():
            pass


async def run_wearable_client(
    trace: HrTrace, host: str, port: int, duration: float | None = None
) -> list[float]:
    """Send BPM updates on the wearable cadence; returns wall emit times."""
    reader, writer = await asyncio.open_connection(host, port)
    drain_task = asyncio.create_task(_drain(reader))
    emit_wall: list[float] = []
    start = time.monotonic()
    k = 0
    try:
        writer.write(encode(Hello("wearable")).encode())
        await writer.drain()
        while True:
            t = k * trace.emit_interval
            if duration is not None and t > duration:
                break
            delay = (start + t) - time.monotonic()
            if delay > 0:
                await asyncio.sleep(delay)
            writer.write(encode(HrUpdate(t=t, bpm=trace.value_at(t))).encode())
            await writer.drain()
            emit_wall.append(time.monotonic())
            k += 1
    finally:
        drain_task.cancel()
        with contextlib.suppress(Exception):
            writer.close()
            await writer.wait_closed()
    return emit_wall


async def run_hand_client(
    script: HandScript,
    host: str,
    port: int,
    duration: float | None = None,
    hand_id: str = "right",
) -> int:
    """Stream tracker frames at the tracker rate; returns frames sent."""
    emulator = HandTrackerEmulator(script, hand_id=hand_id)
    reader, writer = await asyncio.open_connection(host, port)
    drain_task = asyncio.create_task(_drain(reader))
    period = 1.0 / emulator.tracker.rate_hz
    start = time.monotonic()
    sent = 0
    k = 0
    try:
        writer.write(encode(emulator.hello()).encode())
        await writer.drain()
        while True:
            t = k * period
            if duration is not None and t > duration:
                break
            if duration is None and not script.loop and t > script.duration:
                break
            delay = (start + t) - time.monotonic()
            if delay > 0:
                await asyncio.sleep(delay)
            frame = emulator.frame_at(t)
            if frame is not None:
                writer.write(encode(frame).encode())
                await writer.drain()
                sent += 1
            k += 1
    finally:
        drain_task.cancel()
        with contextlib.suppress(Exception):
            writer.close()
            await writer.wait_closed()
    return sent


async def run_haptic_client(
    host: str,
    port: int,
    log_path=None,
    duration: float | None = None,
    mode_name: str = "pulsing_radius",
    cfg: AppConfig | None = None,
) -> HapticDeviceEmulator:
    """Receive focal batches, re-validate, and log them until EOF or timeout."""
    cfg = cfg or AppConfig()
    writer_obj = None
    if log_path is not None:
        writer_obj = FocalLogWriter.open(
            log_path, mode_from_name(mode_name, cfg.am_frequency), cfg.stm
        )
    device = HapticDeviceEmulator(writer=writer_obj, volume=cfg.volume, keep_commands=False)
    reader, writer = await asyncio.open_connection(host, port)
    deadline = None if duration is None else time.monotonic() + duration
    try:
        writer.write(encode(device.hello()).encode())
        await writer.drain()
        while True:
            timeout = None if deadline is None else max(0.0, deadline - time.monotonic())
            try:
                raw = await asyncio.wait_for(reader.readline(), timeout=timeout)
            except asyncio.TimeoutError:
                break
            if not raw:
                break
            msg = decode(raw.decode("utf-8", errors="replace"))
            if isinstance(msg, FocalBatch):
                device.consume(msg)
    finally:
        device.close()
        with contextlib.suppress(Exception):
            writer.close()
            await writer.wait_closed()
    return device


async def collect_frames(
    host: str, port: int, duration: float, kind: str = "ui"
) -> list[FrameState]:
    """Observer client: gather FrameState broadcasts for `duration` seconds."""
    reader, writer = await asyncio.open_connection(host, port)
    frames: list[FrameState] = []
    deadline = time.monotonic() + duration
    try:
        writer.write(encode(Hello(kind)).encode())
        await writer.drain()
        while True:
            timeout = max(0.0, deadline - time.monotonic())
            if timeout == 0:
                break
            try:
                raw = await asyncio.wait_for(reader.readline(), timeout=timeout)
            except asyncio.TimeoutError:
                break
            if not raw:
                break
            msg = decode(raw.decode("utf-8", errors="replace"))
            if isinstance(msg, FrameState):
                frames.append(msg)
    finally:
        with contextlib.suppress(Exception):
            writer.close()
            await writer.wait_closed()
    return frames
