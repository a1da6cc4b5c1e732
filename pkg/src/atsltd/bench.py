"""Throughput benchmark for the adaptive conversion loop.

A synthetic 240x180 scene (several moving rectangles plus background noise) is
written to a text file, an interval is calibrated from fixed-window frames of
that stream, and the converter is timed twice:

* ``loop``: surface updates and NZGE checks over events already in memory;
* ``end_to_end``: text parsing included, reading the file in chunks.

Each figure is the best of ``repeats`` runs, which filters scheduler noise.
"""

from __future__ import annotations

import logging
import os
import tempfile
import time
from dataclasses import asdict, dataclass

import numpy as np

from .boxes import SensorGeometry
from .events import iter_event_chunks, write_events
from .nzge import GridSpec
from .surface import AdaptiveConverter, calibrate_from_stream
from .synth import SceneScript, Shape, generate

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class BenchmarkConfig:
    duration: float = 1.0
    n_objects: int = 6
    edge_density: float = 150.0
    noise_rate: float = 2e5
    seed: int = 7
    # calibration window; at these speeds objects move 0.1 to 0.3 px per ms
    window_ms: float = 2.0
    cadence: int = 200
    repeats: int = 5
    geometry: SensorGeometry = SensorGeometry()

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError("duration must be positive")
        if self.n_objects < 1 or self.repeats < 1:
            raise ValueError("n_objects and repeats must be >= 1")
        if not self.window_ms > 0:
            raise ValueError("window_ms must be positive")


@dataclass(frozen=True)
class BenchmarkResult:
    events: int
    frames: int
    confirmations: int
    alpha: float
    loop_seconds: float
    end_to_end_seconds: float

    @property
    def loop_rate(self) -> float:
        return self.events / self.loop_seconds

    @property
    def end_to_end_rate(self) -> float:
        return self.events / self.end_to_end_seconds

    def to_dict(self) -> dict:
        d = asdict(self)
        d["loop_events_per_s"] = self.loop_rate
        d["end_to_end_events_per_s"] = self.end_to_end_rate
        return d


def benchmark_scene(cfg: BenchmarkConfig) -> SceneScript:
    """Rectangles of 15 to 50 px crossing the sensor between random points."""
    rng = np.random.default_rng(cfg.seed)
    W, H = cfg.geometry.w, cfg.geometry.h
    shapes = []
    for k in range(cfg.n_objects):
        w, h = rng.uniform(15, 50, 2)
        a = (rng.uniform(w / 2, W - w / 2), rng.uniform(h / 2, H - h / 2))
        b = (rng.uniform(w / 2, W - w / 2), rng.uniform(h / 2, H - h / 2))
        shapes.append(Shape.rect(w, h, [(0.0, *a), (cfg.duration, *b)], edge_density=cfg.edge_density, object_id=k))
    return SceneScript(cfg.geometry, cfg.duration, shapes, cfg.noise_rate, cfg.seed)


def _time_best(fn, repeats: int):
    best, out = float("inf"), None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def run_benchmark(cfg: BenchmarkConfig = BenchmarkConfig(), workdir: str | None = None) -> BenchmarkResult:
    events, _ = generate(benchmark_scene(cfg))
    interval, _ = calibrate_from_stream(events, int(cfg.window_ms * 1000), cfg.geometry)
    grid = GridSpec.for_geometry(cfg.geometry)
    log.info("benchmark stream: %d events, alpha %.4f", len(events), interval.alpha)

    def make():
        return AdaptiveConverter(cfg.geometry, grid, interval, cfg.cadence)

    # warm the compiled kernels outside the timed region
    make().feed(events[: min(len(events), 10_000)])

    chunk = 1 << 18
    parts = [events[i : i + chunk] for i in range(0, len(events), chunk)]

    def loop():
        conv = make()
        n = sum(len(conv.feed(p)) for p in parts)
        return n, conv.confirmations

    with tempfile.TemporaryDirectory(dir=workdir) as tmp:
        path = os.path.join(tmp, "bench_events.txt")
        write_events(events, path)

        def end_to_end():
            conv = make()
            n = sum(len(conv.feed(c)) for c in iter_event_chunks(path, cfg.geometry))
            return n, conv.confirmations

        loop_s, (frames, confirms) = _time_best(loop, cfg.repeats)
        e2e_s, (frames2, _) = _time_best(end_to_end, cfg.repeats)
    if frames != frames2:
        raise RuntimeError(f"in-memory and file runs disagree: {frames} vs {frames2} frames")
    return BenchmarkResult(len(events), frames, confirms, interval.alpha, loop_s, e2e_s)

