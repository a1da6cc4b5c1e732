"""Event stream and ground-truth file formats.

Event files hold one ``t x y p`` record per line with ``t`` in decimal seconds.
Timestamps are carried as integer microseconds from the moment they are parsed.
"""

from __future__ import annotations

import csv
import io
import logging
import os
import re
from dataclasses import dataclass, field
from enum import IntEnum
from typing import BinaryIO, Iterator

import numpy as np

from . import _parse
from .boxes import BoundingBox, SensorGeometry

log = logging.getLogger(__name__)

US_PER_S = 1_000_000
_SECONDS_RE = re.compile(r"^(\d*)(?:\.(\d*))?$")
_INT_RE = re.compile(r"^-?\d+$")


class EventFormatError(ValueError):
    """Base class for event and ground-truth file errors."""


class ParseError(EventFormatError):
    def __init__(self, line: int, text: str = ""):
        self.line = line
        super().__init__(f"line {line}: malformed event record {text!r}".rstrip())


def _at(line: int | None) -> str:
    return "" if line is None else f"line {line}: "


class BoundsError(EventFormatError):
    def __init__(self, line: int | None, u: int | None = None, v: int | None = None):
        self.line = line
        where = "" if u is None else f" ({u}, {v})"
        super().__init__(f"{_at(line)}event coordinate{where} outside the sensor")


class OrderingError(EventFormatError):
    def __init__(self, line: int | None = None):
        self.line = line
        super().__init__(f"{_at(line)}timestamp regression beyond allowed slack")


class Polarity(IntEnum):
    OFF = 0
    ON = 1


@dataclass(frozen=True)
class Event:
    u: int
    v: int
    p: Polarity
    t_us: int

    @property
    def t(self) -> float:
        """Timestamp in seconds."""
        return self.t_us / US_PER_S


@dataclass
class EventArray:
    """Column-wise batch of events, timestamps in microseconds."""

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        self.t = np.ascontiguousarray(self.t, dtype=np.int64)
        self.x = np.ascontiguousarray(self.x, dtype=np.int32)
        self.y = np.ascontiguousarray(self.y, dtype=np.int32)
        self.p = np.ascontiguousarray(self.p, dtype=np.int8)

    @classmethod
    def empty(cls) -> "EventArray":
        return cls(np.empty(0), np.empty(0), np.empty(0), np.empty(0))

    @classmethod
    def from_events(cls, events) -> "EventArray":
        events = list(events)
        return cls(
            np.array([e.t_us for e in events], dtype=np.int64),
            np.array([e.u for e in events], dtype=np.int32),
            np.array([e.v for e in events], dtype=np.int32),
            np.array([int(e.p) for e in events], dtype=np.int8),
        )

    @classmethod
    def concatenate(cls, parts) -> "EventArray":
        parts = list(parts)
        if not parts:
            return cls.empty()
        return cls(
            np.concatenate([a.t for a in parts]),
            np.concatenate([a.x for a in parts]),
            np.concatenate([a.y for a in parts]),
            np.concatenate([a.p for a in parts]),
        )

    def __len__(self) -> int:
        return int(self.t.shape[0])

    def __getitem__(self, idx) -> "EventArray":
        if isinstance(idx, (int, np.integer)):
            raise TypeError("use .event(i) for a single event")
        return EventArray(self.t[idx], self.x[idx], self.y[idx], self.p[idx])

    def event(self, i: int) -> Event:
        return Event(int(self.x[i]), int(self.y[i]), Polarity(int(self.p[i])), int(self.t[i]))

    def __iter__(self) -> Iterator[Event]:
        for i in range(len(self)):
            yield self.event(i)

    def time_shifted(self, dt_us: int) -> "EventArray":
        return EventArray(self.t + dt_us, self.x, self.y, self.p)


def seconds_to_us(text: str) -> int:
    """Decimal seconds to integer microseconds, rounding half up at 1 us."""
    m = _SECONDS_RE.match(text)
    if m is None or not (m.group(1) or m.group(2)):
        raise ValueError(f"not a decimal timestamp: {text!r}")
    whole = int(m.group(1) or "0")
    frac = (m.group(2) or "").ljust(7, "0")
    us = whole * US_PER_S + int(frac[:6])
    if frac[6] >= "5":
        us += 1
    return us


def format_us(t_us: int) -> str:
    return f"{t_us // US_PER_S}.{t_us % US_PER_S:06d}"


def _open_binary(source) -> tuple[BinaryIO, bool]:
    if isinstance(source, (str, os.PathLike)):
        return open(source, "rb"), True
    if isinstance(source, (bytes, bytearray)):
        return io.BytesIO(source), True
    if isinstance(source, io.TextIOBase):
        return io.BytesIO(source.read().encode()), True
    return source, False


def parse_event_stream(
    source, geometry: SensorGeometry = SensorGeometry(), slack_us: int = 0
) -> Iterator[Event]:
    """Yield events one by one from a ``t x y p`` text stream.

    Timestamps that regress by at most ``slack_us`` are clamped to the running
    maximum so the output is non-decreasing; larger regressions raise
    :class:`OrderingError`.
    """
    fh, owned = _open_binary(source)
    try:
        last = -1
        for lineno, raw in enumerate(fh, start=1):
            line = raw.decode("utf-8").strip()
            if not line:
                continue
            fields = line.split()
            if (
                len(fields) != 4
                or fields[3] not in ("0", "1")
                or not (_INT_RE.match(fields[1]) and _INT_RE.match(fields[2]))
            ):
                raise ParseError(lineno, line)
            try:
                t = seconds_to_us(fields[0])
                u, v = int(fields[1]), int(fields[2])
            except ValueError:
                raise ParseError(lineno, line) from None
            if not geometry.contains(u, v):
                raise BoundsError(lineno, u, v)
            if t < last:
                if last - t > slack_us:
                    raise OrderingError(lineno)
                t = last
            last = t
            yield Event(u, v, Polarity(int(fields[3])), t)
    finally:
        if owned:
            fh.close()


def iter_event_chunks(
    source,
    geometry: SensorGeometry = SensorGeometry(),
    slack_us: int = 0,
    chunk_bytes: int = 1 << 22,
) -> Iterator[EventArray]:
    """Compiled-path equivalent of :func:`parse_event_stream` yielding arrays.

    Memory use is bounded by ``chunk_bytes`` regardless of stream length.
    """
    fh, owned = _open_binary(source)
    try:
        # one reusable buffer; the unfinished last line moves to its front
        buf = bytearray(max(chunk_bytes, 16))
        keep = 0
        line_base = 1
        last = np.int64(-1)
        while True:
            if keep == len(buf):
                buf.extend(bytes(len(buf)))
            nread = _read_into(fh, buf, keep)
            if nread == 0:
                if keep == 0:
                    break
                if buf[keep - 1] != 0x0A:
                    buf[keep : keep + 1] = b"\n"
                    keep += 1
                end = cut = keep
            else:
                end = keep + nread
                cut = buf.rfind(b"\n", 0, end) + 1
                if cut == 0:
                    keep = end
                    continue
            events, nlines, last = _parse_chunk(buf, cut, geometry, last, slack_us, line_base)
            line_base += nlines
            buf[: end - cut] = buf[cut:end]
            keep = end - cut
            if len(events):
                yield events
            if nread == 0:
                break
    finally:
        if owned:
            fh.close()


def _read_into(fh, buf: bytearray, offset: int) -> int:
    view = memoryview(buf)[offset:]
    try:
        if hasattr(fh, "readinto"):
            return fh.readinto(view) or 0
        data = fh.read(len(view))
        view[: len(data)] = data
        return len(data)
    finally:
        view.release()


def _parse_chunk(buf: bytearray, size: int, geometry: SensorGeometry, last, slack_us: int, line_base: int):
    block = np.frombuffer(buf, dtype=np.uint8, count=size)
    # the shortest valid line, "0 0 0 0\n", has 8 bytes
    cap = size // 8 + 1
    t = np.empty(cap, np.int64)
    x = np.empty(cap, np.int32)
    y = np.empty(cap, np.int32)
    p = np.empty(cap, np.int8)
    k, nlines, status, bad, last = _parse.parse_block(block, geometry.w, geometry.h, last, slack_us, t, x, y, p)
    del block
    if status != _parse.OK:
        lineno = line_base + bad
        text = bytes(buf[:size]).split(b"\n")[bad].decode("utf-8", "replace").strip()
        if status == _parse.ERR_BOUNDS:
            fields = text.split()
            raise BoundsError(lineno, int(fields[1]), int(fields[2]))
        if status == _parse.ERR_ORDER:
            raise OrderingError(lineno)
        raise ParseError(lineno, text)
    return EventArray(t[:k], x[:k], y[:k], p[:k]), nlines, last


def read_events(
    source, geometry: SensorGeometry = SensorGeometry(), slack_us: int = 0
) -> EventArray:
    return EventArray.concatenate(iter_event_chunks(source, geometry, slack_us))


def write_events(events: EventArray, dest, chunk: int = 1 << 16) -> None:
    """Write events in the ``t x y p`` text format (timestamps to 1 us).

    ``dest`` is a path or a text stream. Output is produced in chunks so memory
    stays bounded for long streams.
    """
    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w", encoding="utf-8") as fh:
            write_events(events, fh, chunk)
        return
    for i in range(0, len(events), chunk):
        part = events[i : i + chunk]
        secs = (part.t // US_PER_S).tolist()
        frac = (part.t % US_PER_S).tolist()
        dest.write(
            "".join(
                f"{s}.{f:06d} {x} {y} {p}\n"
                for s, f, x, y, p in zip(secs, frac, part.x.tolist(), part.y.tolist(), part.p.tolist())
            )
        )


# ---------------------------------------------------------------------------
# ground truth


@dataclass
class GroundTruthTrack:
    object_id: int
    times: list[float] = field(default_factory=list)
    boxes: list[BoundingBox] = field(default_factory=list)
    resorted: bool = False

    @property
    def entries(self) -> list[tuple[float, BoundingBox]]:
        return list(zip(self.times, self.boxes))

    @property
    def t_min(self) -> float:
        return self.times[0]

    @property
    def t_max(self) -> float:
        return self.times[-1]

    def box_at(self, t: float) -> BoundingBox | None:
        """Linear interpolation of position and size; None outside the labelled span."""
        if not self.times or t < self.times[0] or t > self.times[-1]:
            return None
        j = int(np.searchsorted(self.times, t, side="right"))
        if j >= len(self.times):
            return self.boxes[-1]
        i = j - 1
        t0, t1 = self.times[i], self.times[j]
        a, b = self.boxes[i], self.boxes[j]
        if t1 == t0:
            return a
        s = (t - t0) / (t1 - t0)
        return BoundingBox(
            a.x + s * (b.x - a.x),
            a.y + s * (b.y - a.y),
            a.w + s * (b.w - a.w),
            a.h + s * (b.h - a.h),
        )


def parse_ground_truth(source) -> list[GroundTruthTrack]:
    """Read ``object_id,t,x,y,w,h`` CSV rows into per-object tracks."""
    fh, owned = _open_binary(source)
    try:
        text = io.TextIOWrapper(fh, encoding="utf-8", newline="")
        reader = csv.reader(text)
        rows = [r for r in reader if r and any(c.strip() for c in r)]
        text.detach()
    finally:
        if owned:
            fh.close()
    if not rows:
        return []
    start = 0
    if rows[0][0].strip() == "object_id":
        start = 1
    tracks: dict[int, GroundTruthTrack] = {}
    for lineno, row in enumerate(rows[start:], start=start + 1):
        if len(row) != 6:
            raise EventFormatError(f"ground truth row {lineno}: expected 6 fields, got {len(row)}")
        try:
            oid = int(row[0])
            t, x, y, w, h = (float(c) for c in row[1:])
        except ValueError:
            raise EventFormatError(f"ground truth row {lineno}: non-numeric field") from None
        if w <= 0 or h <= 0:
            raise EventFormatError(f"ground truth row {lineno}: non-positive box size {w}x{h}")
        tr = tracks.setdefault(oid, GroundTruthTrack(oid))
        tr.times.append(t)
        tr.boxes.append(BoundingBox(x, y, w, h))
    out = []
    for oid in sorted(tracks):
        tr = tracks[oid]
        order = sorted(range(len(tr.times)), key=lambda i: tr.times[i])
        if order != list(range(len(order))):
            log.warning("ground truth for object %d was not time-sorted; sorted on load", oid)
            tr.times = [tr.times[i] for i in order]
            tr.boxes = [tr.boxes[i] for i in order]
            tr.resorted = True
        out.append(tr)
    return out


def write_ground_truth(tracks: list[GroundTruthTrack], dest) -> None:
    buf = io.StringIO()
    buf.write("object_id,t,x,y,w,h\n")
    for tr in tracks:
        for t, b in tr.entries:
            buf.write(f"{tr.object_id},{t:.6f},{b.x:.3f},{b.y:.3f},{b.w:.3f},{b.h:.3f}\n")
    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w", encoding="utf-8") as fh:
            fh.write(buf.getvalue())
    else:
        dest.write(buf.getvalue())
