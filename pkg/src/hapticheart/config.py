"""Runtime configuration: defaults, then config file, then env, then flags.

Every layer overrides the one before it. Validation happens up front and
names the offending key, so a bad file never gets as far as starting a
subsystem.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .hand import TrackerConfig
from .haptics import InteractionVolume, StmCircleParams, validate_volume
from .phased_array import ArrayConfig
from .scene import DEFAULT_ANCHOR, DEFAULT_PULSE_AMPLITUDE, DEFAULT_RADII, HeartHologram

ENV_TCP_PORT = "HAPTICHEART_TCP_PORT"
ENV_WS_PORT = "HAPTICHEART_WS_PORT"
ENV_CONFIG = "HAPTICHEART_CONFIG"


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


@dataclass(frozen=True)
class SceneConfig:
    anchor: tuple[float, float, float] = DEFAULT_ANCHOR
    radii: tuple[float, float, float] = DEFAULT_RADII
    pulse_amplitude: float = DEFAULT_PULSE_AMPLITUDE

    def build_heart(self) -> HeartHologram:
        return HeartHologram(
            anchor=self.anchor, base_radii=self.radii, pulse_amplitude=self.pulse_amplitude
        )


@dataclass(frozen=True)
class AppConfig:
    tcp_port: int = 7340
    ws_port: int = 7341
    frame_rate: float = 60.0
    mode: str = "pulsing_radius"
    am_frequency: float = 200.0
    scene: SceneConfig = field(default_factory=SceneConfig)
    stm: StmCircleParams = field(default_factory=StmCircleParams)
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    array: ArrayConfig = field(default_factory=ArrayConfig)
    volume: InteractionVolume = field(default_factory=InteractionVolume)
    hr_window: float = 6.0
    hr_staleness_timeout: float = 15.0


def _vec3_key(raw, key: str) -> tuple[float, float, float]:
    if not isinstance(raw, (list, tuple)) or len(raw) != 3:
        raise ConfigError(f"{key}: expected a 3-element array")
    try:
        return tuple(float(v) for v in raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key}: {exc}") from exc


def _number(raw, key: str) -> float:
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise ConfigError(f"{key}: expected a number")
    return float(raw)


def _integer(raw, key: str) -> int:
    if isinstance(raw, bool) or not isinstance(raw, int):
        raise ConfigError(f"{key}: expected an integer")
    return raw


def load_config(path=None) -> AppConfig:
    """Build an AppConfig from defaults plus an optional TOML file."""
    cfg = AppConfig()
    if path is None:
        return validate(cfg)
    try:
        data = tomllib.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    server = data.get("server", {})
    scene = data.get("scene", {})
    hapt = data.get("haptics", {})
    tracker = data.get("tracker", {})
    array = data.get("array", {})
    bio = data.get("biosignal", {})

    def pick(section, name, key, conv, default):
        return conv(section[name], key) if name in section else default

    try:
        stm = StmCircleParams(
            r_max=pick(hapt, "r_max", "haptics.r_max", _number, cfg.stm.r_max),
            r_min=pick(hapt, "r_min", "haptics.r_min", _number, cfg.stm.r_min),
            draw_rate=pick(hapt, "draw_rate", "haptics.draw_rate", _number, cfg.stm.draw_rate),
            base_intensity=pick(
                hapt, "base_intensity", "haptics.base_intensity", _number, cfg.stm.base_intensity
            ),
            min_intensity=pick(
                hapt, "min_intensity", "haptics.min_intensity", _number, cfg.stm.min_intensity
            ),
            command_rate=pick(
                hapt, "command_rate", "haptics.command_rate", _number, cfg.stm.command_rate
            ),
        )
        tracker_cfg = TrackerConfig(
            fov_wide_deg=pick(
                tracker, "fov_wide_deg", "tracker.fov_wide_deg", _number, cfg.tracker.fov_wide_deg
            ),
            fov_deep_deg=pick(
                tracker, "fov_deep_deg", "tracker.fov_deep_deg", _number, cfg.tracker.fov_deep_deg
            ),
            range_m=pick(tracker, "range_m", "tracker.range_m", _number, cfg.tracker.range_m),
            rate_hz=pick(tracker, "rate_hz", "tracker.rate_hz", _number, cfg.tracker.rate_hz),
        )
        array_cfg = ArrayConfig(
            rows=pick(array, "rows", "array.rows", _integer, cfg.array.rows),
            cols=pick(array, "cols", "array.cols", _integer, cfg.array.cols),
            pitch=pick(array, "pitch", "array.pitch", _number, cfg.array.pitch),
            carrier_hz=pick(array, "carrier_hz", "array.carrier_hz", _number, cfg.array.carrier_hz),
            speed_of_sound=pick(
                array,
                "speed_of_sound",
                "array.speed_of_sound",
                _number,
                cfg.array.speed_of_sound,
            ),
        )
        scene_cfg = SceneConfig(
            anchor=pick(scene, "anchor", "scene.anchor", _vec3_key, cfg.scene.anchor),
            radii=pick(scene, "radii", "scene.radii", _vec3_key, cfg.scene.radii),
            pulse_amplitude=pick(
                scene,
                "pulse_amplitude",
                "scene.pulse_amplitude",
                _number,
                cfg.scene.pulse_amplitude,
            ),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc

    cfg = replace(
        cfg,
        tcp_port=pick(server, "tcp_port", "server.tcp_port", _integer, cfg.tcp_port),
        ws_port=pick(server, "ws_port", "server.ws_port", _integer, cfg.ws_port),
        frame_rate=pick(server, "frame_rate", "server.frame_rate", _number, cfg.frame_rate),
        mode=str(hapt.get("mode", cfg.mode)),
        am_frequency=pick(hapt, "am_frequency", "haptics.am_frequency", _number, cfg.am_frequency),
        scene=scene_cfg,
        stm=stm,
        tracker=tracker_cfg,
        array=array_cfg,
        hr_window=pick(bio, "window", "biosignal.window", _number, cfg.hr_window),
        hr_staleness_timeout=pick(
            bio,
            "staleness_timeout",
            "biosignal.staleness_timeout",
            _number,
            cfg.hr_staleness_timeout,
        ),
    )
    return validate(cfg)


def apply_env(cfg: AppConfig, env=os.environ) -> AppConfig:
    """Overlay environment overrides (currently the two port numbers)."""
    updates = {}
    for var, key in ((ENV_TCP_PORT, "tcp_port"), (ENV_WS_PORT, "ws_port")):
        if var in env:
            try:
                updates[key] = int(env[var])
            except ValueError as exc:
                raise ConfigError(f"{var}: expected an integer port") from exc
    return validate(replace(cfg, **updates)) if updates else cfg


def validate(cfg: AppConfig) -> AppConfig:
    if not 0 < cfg.tcp_port < 65536:
        raise ConfigError(f"server.tcp_port: {cfg.tcp_port} not a valid port")
    if not 0 < cfg.ws_port < 65536:
        raise ConfigError(f"server.ws_port: {cfg.ws_port} not a valid port")
    if cfg.tcp_port == cfg.ws_port:
        raise ConfigError("server.ws_port: must differ from server.tcp_port")
    if cfg.frame_rate <= 0:
        raise ConfigError(f"server.frame_rate: must be positive, got {cfg.frame_rate}")
    if cfg.mode not in ("pulsing_intensity", "pulsing_radius", "am"):
        raise ConfigError(f"haptics.mode: unknown mode {cfg.mode!r}")
    if not validate_volume(cfg.scene.anchor, cfg.volume):
        raise ConfigError(f"scene.anchor: {cfg.scene.anchor} outside the interaction volume")
    if cfg.hr_window <= 0 or cfg.hr_staleness_timeout <= 0:
        raise ConfigError("biosignal.window and biosignal.staleness_timeout must be positive")
    try:
        cfg.scene.build_heart()
    except ValueError as exc:
        raise ConfigError(f"scene: {exc}") from exc
    return cfg
