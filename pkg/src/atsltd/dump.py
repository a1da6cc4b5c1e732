"""Frame dumps on disk and annotated renders.

Each frame becomes ``frame_{index:06d}_on.pgm``, ``frame_{index:06d}_off.pgm``
(binary 8-bit PGM) and a ``frame_{index:06d}.json`` sidecar with its time span,
event count and NZGE at cut.
"""

from __future__ import annotations

import json
import os
import re
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .boxes import BoundingBox
from .events import Polarity
from .surface import AtslTdFrame

_STEM = "frame_{:06d}"
_SIDECAR_RE = re.compile(r"^frame_(\d+)\.json$")


class DumpFormatError(ValueError):
    pass


def write_pgm(path, image: np.ndarray) -> None:
    img = np.ascontiguousarray(image, dtype=np.uint8)
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


def write_ppm(path, image: np.ndarray) -> None:
    img = np.ascontiguousarray(image, dtype=np.uint8)
    h, w, _ = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


def _read_netpbm(path, magic: bytes, channels: int) -> np.ndarray:
    data = Path(path).read_bytes()
    # header: magic, width, height, maxval, separated by whitespace (comments allowed)
    fields, pos = [], 0
    while len(fields) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        end = pos
        while end < len(data) and not data[end : end + 1].isspace():
            end += 1
        if end == pos:
            raise DumpFormatError(f"{path}: truncated header")
        fields.append(data[pos:end])
        pos = end
    if fields[0] != magic or fields[3] != b"255":
        raise DumpFormatError(f"{path}: expected 8-bit {magic.decode()} image")
    w, h = int(fields[1]), int(fields[2])
    pix = np.frombuffer(data, dtype=np.uint8, offset=pos + 1)
    if pix.size != w * h * channels:
        raise DumpFormatError(f"{path}: expected {w * h * channels} pixel bytes, found {pix.size}")
    return pix.reshape((h, w, channels) if channels > 1 else (h, w))


def read_pgm(path) -> np.ndarray:
    return _read_netpbm(path, b"P5", 1)


def read_ppm(path) -> np.ndarray:
    return _read_netpbm(path, b"P6", 3)


def dump_frame(frame: AtslTdFrame, directory) -> None:
    d = Path(directory)
    stem = _STEM.format(frame.index)
    write_pgm(d / f"{stem}_on.pgm", frame.on)
    write_pgm(d / f"{stem}_off.pgm", frame.off)
    meta = {
        "index": frame.index,
        "start_us": frame.start_us,
        "end_us": frame.end_us,
        "event_count": frame.event_count,
        "nzge_at_cut": frame.nzge_at_cut,
    }
    with open(d / f"{stem}.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")


def dump_frames(frames: Iterable[AtslTdFrame], directory) -> int:
    os.makedirs(directory, exist_ok=True)
    n = 0
    for fr in frames:
        dump_frame(fr, directory)
        n += 1
    return n


def load_frames(directory) -> list[AtslTdFrame]:
    """Frames of a dump directory, ordered by index."""
    d = Path(directory)
    if not d.is_dir():
        raise DumpFormatError(f"not a directory: {d}")
    out = []
    for name in sorted(os.listdir(d)):
        m = _SIDECAR_RE.match(name)
        if not m:
            continue
        with open(d / name, encoding="utf-8") as fh:
            meta = json.load(fh)
        stem = _STEM.format(int(m.group(1)))
        planes = np.empty((2,) + read_pgm(d / f"{stem}_on.pgm").shape, dtype=np.uint8)
        planes[Polarity.ON] = read_pgm(d / f"{stem}_on.pgm")
        planes[Polarity.OFF] = read_pgm(d / f"{stem}_off.pgm")
        out.append(AtslTdFrame(planes, meta["start_us"], meta["end_us"], meta["event_count"],
                               meta.get("nzge_at_cut"), meta["index"]))
    out.sort(key=lambda f: f.index)
    return out


# ---------------------------------------------------------------------------
# annotated renders

_PALETTE = np.array(
    [(255, 64, 64), (64, 255, 64), (64, 160, 255), (255, 220, 0), (255, 0, 255), (0, 255, 255)], dtype=np.uint8
)


def base_image(frame: AtslTdFrame | None, shape: tuple[int, int]) -> np.ndarray:
    """RGB backdrop: On intensity in red+green, Off in blue; black without a frame."""
    h, w = shape
    img = np.zeros((h, w, 3), dtype=np.uint8)
    if frame is not None:
        on, off = frame.on, frame.off
        img[..., 0] = on
        img[..., 1] = on // 2
        img[..., 2] = off
    return img


def draw_box(img: np.ndarray, box: BoundingBox, color, dashed: bool = False, dash: int = 3) -> None:
    """Outline of ``box`` in pixel coordinates; the last covered pixel is ``x + w - 1``."""
    h, w, _ = img.shape
    x0, y0 = int(round(box.x)), int(round(box.y))
    x1, y1 = int(round(box.x + box.w)) - 1, int(round(box.y + box.h)) - 1
    color = np.asarray(color, dtype=np.uint8)

    def on(k: int) -> bool:
        return not dashed or (k // dash) % 2 == 0

    for k, x in enumerate(range(x0, x1 + 1)):
        if 0 <= x < w and on(k):
            for y in (y0, y1):
                if 0 <= y < h:
                    img[y, x] = color
    for k, y in enumerate(range(y0, y1 + 1)):
        if 0 <= y < h and on(k):
            for x in (x0, x1):
                if 0 <= x < w:
                    img[y, x] = color


def object_color(object_id: int) -> np.ndarray:
    return _PALETTE[object_id % len(_PALETTE)]


def render_results(rows: Sequence, frames: dict[int, AtslTdFrame], shape: tuple[int, int], out_dir,
                   workers: int = 1) -> list[Path]:
    """One PPM per frame index in ``rows``; recovery rows are dashed."""
    by_frame: dict[int, list] = {}
    for r in rows:
        by_frame.setdefault(r.frame_index, []).append(r)

    def render(idx: int) -> Path:
        img = base_image(frames.get(idx), shape)
        for r in sorted(by_frame[idx], key=lambda r: r.object_id):
            draw_box(img, r.box, object_color(r.object_id), dashed=r.mode.value == "recovering")
        path = Path(out_dir) / f"render_{idx:06d}.ppm"
        write_ppm(path, img)
        return path

    order = sorted(by_frame)
    if workers > 1 and len(order) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(render, order))
    return [render(idx) for idx in order]
