"""Two-channel time surface with linear time decay, and frame conversion.

Decay is applied lazily. Multiplying the whole surface by ``t_{k-1}/t_k`` at every
event telescopes to ``t_set/t_now`` for a pixel last set at ``t_set``, so each pixel
keeps only its set time and intensity is computed on read:

    I = round_half_up(255 * (t_set - T0 + eps) / (t_now - T0 + eps))

with ``T0`` the start of the current frame and ``eps`` one microsecond.
"""

from __future__ import annotations

import logging
from typing import Iterable, Iterator

import numpy as np

from . import _kernels
from .boxes import SensorGeometry
from .events import BoundsError, Event, EventArray, OrderingError, Polarity
from .nzge import (
    DEFAULT_INTERVAL, CalibrationSet, ConfidenceInterval, GridSpec, calibrate_interval, entropy_map,
    entropy_shares, nzge,
)

log = logging.getLogger(__name__)

EMPTY = int(_kernels.EMPTY)


class EmptyFrameError(RuntimeError):
    pass


class ConversionConfigError(ValueError):
    pass


class AtslTdFrame:
    """Finalized, immutable frame. ``planes[Polarity.OFF]`` and ``planes[Polarity.ON]`` are uint8.

    Frames cut by the converter keep only their set pixels (flat index and
    level); the dense planes are built on first access.
    """

    __slots__ = ("_planes", "_shape", "_pixels", "_levels", "start_us", "end_us", "event_count",
                 "nzge_at_cut", "index")

    def __init__(self, planes: np.ndarray, start_us: int, end_us: int, event_count: int,
                 nzge_at_cut: float | None = None, index: int = 0):
        planes = np.asarray(planes, dtype=np.uint8)
        if planes.ndim != 3 or planes.shape[0] != 2:
            raise ValueError(f"planes must be shaped (2, h, w), got {planes.shape}")
        planes.setflags(write=False)
        self._init(planes, planes.shape, None, None, start_us, end_us, event_count, nzge_at_cut, index)

    def _init(self, planes, shape, pixels, levels, start_us, end_us, event_count, nzge_at_cut, index):
        for name, value in zip(self.__slots__, (planes, tuple(shape), pixels, levels, int(start_us), int(end_us),
                                                 int(event_count), nzge_at_cut, int(index))):
            object.__setattr__(self, name, value)

    @classmethod
    def from_pixels(cls, shape, pixels: np.ndarray, levels: np.ndarray, start_us: int, end_us: int,
                    event_count: int, nzge_at_cut: float | None = None, index: int = 0) -> "AtslTdFrame":
        """Frame from flat pixel indices into a ``(2, h, w)`` array and their levels."""
        frame = cls.__new__(cls)
        pixels.setflags(write=False)
        levels.setflags(write=False)
        frame._init(None, shape, pixels, levels, start_us, end_us, event_count, nzge_at_cut, index)
        return frame

    def __setattr__(self, name, value):
        raise AttributeError("AtslTdFrame is immutable")

    @property
    def planes(self) -> np.ndarray:
        if self._planes is None:
            planes = np.zeros(self._shape, dtype=np.uint8)
            planes.reshape(-1)[self._pixels] = self._levels
            planes.setflags(write=False)
            object.__setattr__(self, "_planes", planes)
        return self._planes

    @property
    def on(self) -> np.ndarray:
        return self.planes[Polarity.ON]

    @property
    def off(self) -> np.ndarray:
        return self.planes[Polarity.OFF]

    @property
    def start_time(self) -> float:
        return self.start_us / 1e6

    @property
    def end_time(self) -> float:
        return self.end_us / 1e6

    @property
    def geometry(self) -> SensorGeometry:
        return SensorGeometry(self._shape[2], self._shape[1])

    def same_as(self, other: "AtslTdFrame") -> bool:
        return (
            self.start_us == other.start_us
            and self.end_us == other.end_us
            and self.event_count == other.event_count
            and np.array_equal(self.planes, other.planes)
        )


class Surface:
    """In-progress frame accumulator.

    The fresh surface starts at ``frame_start_us`` (default 0). Pixels hold the
    time of their most recent event in the current frame; everything else is
    derived when rendering.
    """

    def __init__(self, geometry: SensorGeometry = SensorGeometry(), frame_start_us: int = 0, eps_us: int = 1):
        if eps_us <= 0:
            raise ConversionConfigError("eps_us must be positive")
        self.geometry = geometry
        self.set_times = np.full((2, geometry.h, geometry.w), EMPTY, dtype=np.int64)
        self.touched = np.zeros(2 * geometry.h * geometry.w + 1, dtype=np.int64)
        self.state = np.array([frame_start_us, frame_start_us, 0, 0, eps_us], dtype=np.int64)

    @property
    def frame_start_us(self) -> int:
        return int(self.state[_kernels.S_FRAME_START])

    @property
    def last_event_us(self) -> int:
        return int(self.state[_kernels.S_LAST_T])

    @property
    def event_count(self) -> int:
        return int(self.state[_kernels.S_COUNT])

    @property
    def eps_us(self) -> int:
        return int(self.state[_kernels.S_EPS])

    def apply_event(self, e: Event) -> None:
        if not self.geometry.contains(e.u, e.v):
            raise BoundsError(None, e.u, e.v)
        if e.t_us < self.last_event_us:
            raise OrderingError()
        ch = int(e.p)
        if self.set_times[ch, e.v, e.u] == EMPTY:
            self.touched[self.state[_kernels.S_TOUCHED]] = (ch * self.geometry.h + e.v) * self.geometry.w + e.u
            self.state[_kernels.S_TOUCHED] += 1
        self.set_times[ch, e.v, e.u] = e.t_us
        self.state[_kernels.S_LAST_T] = e.t_us
        self.state[_kernels.S_COUNT] += 1

    def apply_events(self, events: EventArray) -> None:
        if len(events) == 0:
            return
        bad = _kernels.apply_events(
            events.t, events.x, events.y, events.p, 0, len(events), self.set_times, self.touched, self.state
        )
        if bad >= 0:
            raise OrderingError()

    def set_time(self, u: int, v: int, channel: int) -> int | None:
        st = int(self.set_times[channel, v, u])
        return None if st == EMPTY else st

    def render_intensity(self, u: int, v: int, channel: int) -> int:
        st = int(self.set_times[channel, v, u])
        if st == EMPTY:
            return 0
        t0, eps = self.frame_start_us, self.eps_us
        a = st - t0 + eps
        b = self.last_event_us - t0 + eps
        return (510 * a + b) // (2 * b)

    def render(self) -> np.ndarray:
        out = np.empty((2, self.geometry.h, self.geometry.w), dtype=np.uint8)
        _kernels.render(self.set_times, self.touched, self.state, out)
        return out

    def reset(self, frame_start_us: int) -> None:
        _kernels.reset(self.set_times, self.touched, self.state, frame_start_us)

    def finalize_frame(self, index: int = 0, nzge_at_cut: float | None = None) -> AtslTdFrame:
        """Emit the current frame and restart the surface at its end time."""
        if self.event_count == 0:
            raise EmptyFrameError("cannot finalize a surface that has received no events")
        end = self.last_event_us
        frame = AtslTdFrame(self.render(), self.frame_start_us, end, self.event_count, nzge_at_cut, index)
        self.reset(end)
        return frame


def _grid_tables(grid: GridSpec, geometry: SensorGeometry) -> tuple[np.ndarray, np.ndarray]:
    """Pixel -> cell lookup (-1 outside the grid) and each cell's top-left flat pixel index."""
    r, w = grid.r, geometry.w
    cell_of = np.full((geometry.h, w), -1, dtype=np.int64)
    ids = np.arange(grid.p * grid.q, dtype=np.int64).reshape(grid.p, grid.q)
    cell_of[: grid.p * r, : grid.q * r] = np.repeat(np.repeat(ids, r, axis=0), r, axis=1)
    cy, cx = np.divmod(ids.ravel(), grid.q)
    return cell_of.ravel(), cy * r * w + cx * r


class AdaptiveConverter:
    """Streaming event-to-frame conversion cut by NZGE.

    NZGE is re-evaluated every ``cadence`` events. Only cells touched since the
    previous check are recomputed; when that estimate reaches ``interval.alpha``
    all occupied cells are recomputed and the frame is cut if the exact value
    still reaches it.
    """

    # most frames finalized per compiled call
    BATCH = 256

    def __init__(
        self,
        geometry: SensorGeometry = SensorGeometry(),
        grid: GridSpec | None = None,
        interval: ConfidenceInterval = DEFAULT_INTERVAL,
        cadence: int = 200,
        max_open_us: int | None = None,
        eps_us: int = 1,
        start_us: int | None = None,
    ):
        if cadence < 1:
            raise ConversionConfigError("cadence must be >= 1")
        if max_open_us is not None and max_open_us <= 0:
            raise ConversionConfigError("max_open_us must be positive")
        self.geometry = geometry
        self.grid = grid or GridSpec.for_geometry(geometry)
        self.grid.check(geometry.h, geometry.w)
        self.interval = interval
        self.surface = Surface(geometry, 0 if start_us is None else start_us, eps_us)
        self._started = start_us is not None
        g = self.grid
        pq = g.p * g.q
        n = g.r * g.r
        self._shares = np.array(entropy_shares(n, interval.log_base))
        # both channels of every cell at maximal entropy must fit the int64 total
        if 2 * pq * n * int(self._shares[1]) >= 1 << 62:
            raise ConversionConfigError(f"grid of {pq} cells is too large for fixed-point totals")
        self._cell_of, self._cell_origin = _grid_tables(g, geometry)
        self._gparams = np.array([g.r, cadence, -1 if max_open_us is None else max_open_us], dtype=np.int64)
        self._gstate = np.zeros(5, dtype=np.int64)
        self._fstate = np.array([interval.alpha, np.nan])
        self._ent = np.zeros(2 * pq, dtype=np.int64)
        self._dirty = np.zeros(2 * pq, dtype=np.uint8)
        self._dirty_list = np.zeros(2 * pq + 1, dtype=np.int64)
        self._buf = _kernels.make_scratch(n)
        # reusable output of one compiled batch: pixel room for two full frames
        npx = 2 * geometry.h * geometry.w
        self._out = (
            np.empty(2 * npx, dtype=np.int32), np.empty(2 * npx, dtype=np.uint8),
            np.empty((self.BATCH, 5), dtype=np.int64), np.empty(self.BATCH),
        )
        self.frames_emitted = 0

    @property
    def confirmations(self) -> int:
        """Exact NZGE recomputations triggered so far."""
        return int(self._gstate[_kernels.G_CONFIRMS])

    def _cut(self, nzge_value: float) -> AtslTdFrame:
        value = None if np.isnan(nzge_value) else float(nzge_value)
        s = self.surface
        _kernels.reset_grid(
            s.set_times, s.touched, s.state, self._gstate, self._ent, self._dirty,
            self._cell_of, self._cell_origin.size,
        )
        frame = s.finalize_frame(self.frames_emitted, value)
        self.frames_emitted += 1
        return frame

    def feed(self, events: EventArray) -> list[AtslTdFrame]:
        n = len(events)
        if n == 0:
            return []
        s = self.surface
        if not self._started:
            s.reset(int(events.t[0]))
            self._started = True
        frames = []
        shape = s.set_times.shape
        pix, lev, meta, values = self._out
        i = 0
        while i < n:
            i, nf, status = _kernels.convert_batch(
                events.t, events.x, events.y, events.p, i, n, s.set_times, s.touched, s.state,
                self._gparams, self._gstate, self._fstate, self._ent, self._dirty, self._dirty_list,
                self._cell_of, self._cell_origin, self._shares, self._buf, pix, lev, meta, values,
            )
            for k in range(nf):
                v = float(values[k])
                a, b = int(meta[k, 3]), int(meta[k, 4])
                frames.append(AtslTdFrame.from_pixels(
                    shape, pix[a:b].copy(), lev[a:b].copy(), int(meta[k, 0]), int(meta[k, 1]), int(meta[k, 2]),
                    None if np.isnan(v) else v, self.frames_emitted,
                ))
                self.frames_emitted += 1
            if status == _kernels.RUN_ORDER:
                raise OrderingError()
        return frames

    def flush(self) -> list[AtslTdFrame]:
        """Emit the open frame regardless of its NZGE (end of stream)."""
        s = self.surface
        if s.event_count == 0 or s.last_event_us <= s.frame_start_us:
            return []
        value = _kernels.exact_nzge(
            s.set_times, s.touched, s.state, self._gparams, self._gstate, self._ent, self._dirty,
            self._dirty_list, 0, self._cell_of, self._cell_origin, self._shares, self._buf,
        )
        return [self._cut(value)]

    def convert(self, chunks: Iterable[EventArray], emit_partial: bool = False) -> Iterator[AtslTdFrame]:
        for chunk in chunks:
            yield from self.feed(chunk)
        if emit_partial:
            yield from self.flush()


def convert_atsltd(
    events: EventArray,
    geometry: SensorGeometry = SensorGeometry(),
    grid: GridSpec | None = None,
    interval: ConfidenceInterval = DEFAULT_INTERVAL,
    cadence: int = 200,
    max_open_us: int | None = None,
    emit_partial: bool = False,
) -> list[AtslTdFrame]:
    conv = AdaptiveConverter(geometry, grid, interval, cadence, max_open_us)
    return list(conv.convert([events], emit_partial=emit_partial))


def convert_fixed_time_window(
    events: EventArray,
    window_us: int,
    geometry: SensorGeometry = SensorGeometry(),
    grid: GridSpec | None = None,
    log_base: float = 2.0,
    eps_us: int = 1,
) -> list[AtslTdFrame]:
    """Cut a frame every ``window_us`` of stream time; windows without events are skipped.

    Windows are aligned to the first event. Each frame decays relative to its own
    window start and reports the window end as ``end_us``.
    """
    if window_us <= 0:
        raise ConversionConfigError(f"window must be positive, got {window_us}")
    if len(events) == 0:
        return []
    grid = grid or GridSpec.for_geometry(geometry)
    t = events.t
    if np.any(np.diff(t) < 0):
        raise OrderingError()
    t_first = int(t[0])
    widx = (t - t_first) // window_us
    bounds = np.flatnonzero(np.diff(widx)) + 1
    starts = np.concatenate(([0], bounds))
    stops = np.concatenate((bounds, [len(t)]))
    surface = Surface(geometry, t_first, eps_us)
    frames = []
    for k, (i0, i1) in enumerate(zip(starts.tolist(), stops.tolist())):
        w0 = t_first + int(widx[i0]) * window_us
        surface.reset(w0)
        _kernels.apply_events(events.t, events.x, events.y, events.p, i0, i1, surface.set_times, surface.touched, surface.state)
        planes = surface.render()
        value = nzge(entropy_map(planes, grid, log_base))
        frames.append(AtslTdFrame(planes, w0, w0 + window_us, i1 - i0, value, k))
    surface.reset(surface.last_event_us)
    return frames


def calibrate_from_stream(
    events: EventArray,
    window_us: int,
    geometry: SensorGeometry = SensorGeometry(),
    grid: GridSpec | None = None,
    omega: float = 0.05,
    log_base: float = 2.0,
) -> tuple[ConfidenceInterval, list[float]]:
    """Interval from the NZGE of fixed-window frames of ``events``.

    Pick ``window_us`` so that the fastest object moves a few pixels per window;
    the resulting frames are the reference look that adaptive cutting reproduces.
    """
    frames = convert_fixed_time_window(events, window_us, geometry, grid, log_base)
    samples = [f.nzge_at_cut for f in frames if f.nzge_at_cut is not None]
    return calibrate_interval(CalibrationSet(samples), omega, log_base), samples
