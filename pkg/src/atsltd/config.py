"""Run configuration: flat ``section.key = value`` text files.

Blank lines and ``#`` comments are ignored. Every key is optional; unknown keys
are errors. Example::

    sensor.width = 240
    interval.source = calibrate
    interval.window_ms = 9
    tracker.mu = 0.3
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field
from typing import Any, Callable

from .boxes import SensorGeometry
from .detect import DetectorConfig
from .events import EventArray
from .nzge import DEFAULT_INTERVAL, ConfidenceInterval, GridSpec, load_calibration
from .surface import calibrate_from_stream
from .track import PipelineConfig, TrackerConfig

INTERVAL_SOURCES = ("default", "file", "calibrate")


class ConfigError(ValueError):
    pass


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _opt_float(text: str) -> float | None:
    return None if text.strip().lower() in ("", "none") else float(text)


@dataclass
class RunConfig:
    geometry: SensorGeometry = field(default_factory=SensorGeometry)
    # rows/columns of cells; None means as many r-pixel cells as fit (45 x 60 at 240 x 180)
    grid_p: int | None = None
    grid_q: int | None = None
    grid_r: int = 4
    interval_source: str = "default"
    interval_file: str | None = None
    omega: float = 0.05
    calibration_window_ms: float = 9.0
    log_base: float = 2.0
    tracker: TrackerConfig = field(default_factory=TrackerConfig)
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    events: str | None = None
    gt: str | None = None
    out: str | None = None
    dump_frames: bool = False
    cadence: int = 200
    max_open_ms: float | None = None
    workers: int = 1
    seed: int = 0

    def validate(self) -> None:
        if self.interval_source not in INTERVAL_SOURCES:
            raise ConfigError(f"interval.source must be one of {', '.join(INTERVAL_SOURCES)}")
        if self.interval_source == "file" and not self.interval_file:
            raise ConfigError("interval.source = file needs interval.file")
        for name in ("events", "gt", "interval_file"):
            path = getattr(self, name)
            if path is not None and not os.path.isfile(path):
                raise ConfigError(f"{name} file not found: {path}")
        try:
            self.grid.check(self.geometry.h, self.geometry.w)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if not 0 < self.omega < 1:
            raise ConfigError("interval.omega must be in (0, 1)")
        if not self.calibration_window_ms > 0:
            raise ConfigError("interval.window_ms must be positive")
        if not self.log_base > 1:
            raise ConfigError("interval.log_base must be > 1")
        if self.cadence < 1:
            raise ConfigError("run.cadence must be >= 1")
        if self.max_open_ms is not None and not self.max_open_ms > 0:
            raise ConfigError("run.max_open_ms must be positive")
        if self.workers < 1:
            raise ConfigError("run.workers must be >= 1")

    @property
    def grid(self) -> GridSpec:
        r = self.grid_r
        p = self.geometry.h // r if self.grid_p is None else self.grid_p
        q = self.geometry.w // r if self.grid_q is None else self.grid_q
        return GridSpec(p, q, r)

    def resolve_interval(self, events: EventArray | None = None) -> ConfidenceInterval:
        """Interval named by ``interval_source``; ``calibrate`` needs the stream."""
        if self.interval_source == "default":
            return DEFAULT_INTERVAL
        if self.interval_source == "file":
            interval, _ = load_calibration(self.interval_file)
            return interval
        if events is None:
            raise ConfigError("interval.source = calibrate needs an event stream")
        interval, _ = calibrate_from_stream(
            events, int(round(self.calibration_window_ms * 1000)), self.geometry, self.grid,
            self.omega, self.log_base,
        )
        return interval

    def pipeline(self, interval: ConfidenceInterval) -> PipelineConfig:
        max_open = None if self.max_open_ms is None else int(round(self.max_open_ms * 1000))
        return PipelineConfig(self.geometry, self.grid, interval, self.cadence, max_open, self.tracker, self.detector)


# key -> (parser, setter)
def _set_geometry(attr: str):
    def setter(cfg: RunConfig, v: int) -> None:
        cfg.geometry = dataclasses.replace(cfg.geometry, **{attr: v})
    return setter


def _set_nested(section: str, attr: str):
    def setter(cfg: RunConfig, v) -> None:
        setattr(cfg, section, dataclasses.replace(getattr(cfg, section), **{attr: v}))
    return setter


def _set(attr: str):
    def setter(cfg: RunConfig, v) -> None:
        setattr(cfg, attr, v)
    return setter


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.split(","))


KEYS: dict[str, tuple[Callable[[str], Any], Callable[[RunConfig, Any], None]]] = {
    "sensor.width": (int, _set_geometry("w")),
    "sensor.height": (int, _set_geometry("h")),
    "grid.p": (int, _set("grid_p")),
    "grid.q": (int, _set("grid_q")),
    "grid.r": (int, _set("grid_r")),
    "interval.source": (str, _set("interval_source")),
    "interval.file": (str, _set("interval_file")),
    "interval.omega": (float, _set("omega")),
    "interval.window_ms": (float, _set("calibration_window_ms")),
    "interval.log_base": (float, _set("log_base")),
    "tracker.tau": (float, _set_nested("tracker", "tau")),
    "tracker.lambda": (float, _set_nested("tracker", "lam")),
    "tracker.mu": (float, _set_nested("tracker", "mu")),
    "tracker.recovery_growth": (float, _set_nested("tracker", "recovery_growth")),
    "tracker.resume_score": (float, _set_nested("tracker", "resume_score")),
    "detector.max_boxes": (int, _set_nested("detector", "max_boxes")),
    "detector.min_box_area": (float, _set_nested("detector", "min_box_area")),
    "detector.area_factors": (_floats, _set_nested("detector", "area_factors")),
    "detector.aspect_factors": (_floats, _set_nested("detector", "aspect_factors")),
    "detector.nms_overlap": (float, _set_nested("detector", "nms_overlap")),
    "detector.stride_div": (int, _set_nested("detector", "stride_div")),
    "detector.band_px": (int, _set_nested("detector", "band_px")),
    "detector.recency_power": (float, _set_nested("detector", "recency_power")),
    "detector.min_score_ratio": (float, _set_nested("detector", "min_score_ratio")),
    "io.events": (str, _set("events")),
    "io.gt": (str, _set("gt")),
    "io.out": (str, _set("out")),
    "io.dump_frames": (_bool, _set("dump_frames")),
    "run.cadence": (int, _set("cadence")),
    "run.max_open_ms": (_opt_float, _set("max_open_ms")),
    "run.workers": (int, _set("workers")),
    "run.seed": (int, _set("seed")),
}


def parse_config(text: str, base: RunConfig | None = None, source: str = "<config>") -> RunConfig:
    """Apply ``key = value`` lines to a copy of ``base`` (defaults when None). Not validated."""
    cfg = dataclasses.replace(base) if base is not None else RunConfig()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"{source}:{lineno}: expected 'section.key = value'")
        if key not in KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        conv, setter = KEYS[key]
        try:
            setter(cfg, conv(value))
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: {key}: {exc}") from None
    return cfg


def load_config(path: str | os.PathLike | None, overrides: dict[str, str] | None = None) -> RunConfig:
    """Config file (or defaults) with ``overrides`` applied on top, then validated."""
    cfg = RunConfig()
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        cfg = parse_config(text, cfg, str(path))
    if overrides:
        cfg = parse_config("\n".join(f"{k} = {v}" for k, v in overrides.items()), cfg, "<flags>")
    cfg.validate()
    return cfg


def format_config(cfg: RunConfig) -> str:
    """Config text that parses back to ``cfg``."""
    t, d = cfg.tracker, cfg.detector
    lines = {
        "sensor.width": cfg.geometry.w, "sensor.height": cfg.geometry.h,
        "grid.p": cfg.grid_p, "grid.q": cfg.grid_q, "grid.r": cfg.grid_r,
        "interval.source": cfg.interval_source, "interval.file": cfg.interval_file,
        "interval.omega": cfg.omega, "interval.window_ms": cfg.calibration_window_ms,
        "interval.log_base": cfg.log_base,
        "tracker.tau": t.tau, "tracker.lambda": t.lam, "tracker.mu": t.mu,
        "tracker.recovery_growth": t.recovery_growth, "tracker.resume_score": t.resume_score,
        "detector.max_boxes": d.max_boxes, "detector.min_box_area": d.min_box_area,
        "detector.area_factors": ",".join(repr(x) for x in d.area_factors),
        "detector.aspect_factors": ",".join(repr(x) for x in d.aspect_factors),
        "detector.nms_overlap": d.nms_overlap, "detector.stride_div": d.stride_div,
        "detector.band_px": d.band_px, "detector.recency_power": d.recency_power,
        "detector.min_score_ratio": d.min_score_ratio,
        "io.events": cfg.events, "io.gt": cfg.gt, "io.out": cfg.out,
        "io.dump_frames": str(cfg.dump_frames).lower(),
        "run.cadence": cfg.cadence, "run.max_open_ms": cfg.max_open_ms,
        "run.workers": cfg.workers, "run.seed": cfg.seed,
    }
    return "".join(f"{k} = {v}\n" for k, v in lines.items() if v is not None)
