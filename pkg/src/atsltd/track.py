"""IoU tracking-by-detection over adaptive frames, with re-detection recovery."""

from __future__ import annotations

import csv
import enum
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .boxes import BoundingBox, SensorGeometry
from .detect import DetectorConfig, Proposal, SearchRegion, dump_proposals, propose, refine, refine_score
from .events import EventArray
from .nzge import DEFAULT_INTERVAL, ConfidenceInterval, GridSpec
from .surface import AdaptiveConverter, AtslTdFrame

log = logging.getLogger(__name__)


def iou(a: BoundingBox, b: BoundingBox) -> float:
    iw = min(a.x1, b.x1) - max(a.x, b.x)
    ih = min(a.y1, b.y1) - max(a.y, b.y)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return inter / (a.area + b.area - inter)


class Mode(enum.Enum):
    TRACKING = "tracking"
    RECOVERING = "recovering"


@dataclass(frozen=True)
class TrackerConfig:
    tau: float = 1.5
    lam: float = 0.7
    mu: float = 0.3
    recovery_growth: float = 1.5
    resume_score: float = 0.7

    def __post_init__(self):
        if not self.tau > 1:
            raise ValueError("tau must be > 1")
        if not 0 <= self.mu < 1:
            raise ValueError("mu must be in [0, 1)")
        if not 0 <= self.lam <= 1:
            raise ValueError("lambda must be in [0, 1]")
        if not self.recovery_growth >= 1:
            raise ValueError("recovery growth must be >= 1")


@dataclass(frozen=True)
class HistoryEntry:
    frame_index: int
    start_us: int
    end_us: int
    box: BoundingBox
    iou_prev: float
    mode: Mode


@dataclass
class TrackState:
    box: BoundingBox
    last_confident: BoundingBox
    mode: Mode = Mode.TRACKING
    frames_in_recovery: int = 0
    object_id: int = 0
    history: list[HistoryEntry] = field(default_factory=list)

    @classmethod
    def start(cls, box: BoundingBox, object_id: int = 0) -> "TrackState":
        return cls(box, box, object_id=object_id)

    def reinitialize(self, box: BoundingBox) -> None:
        self.box = box
        self.last_confident = box
        self.mode = Mode.TRACKING
        self.frames_in_recovery = 0

    def _record(self, frame: AtslTdFrame, value: float) -> None:
        self.history.append(HistoryEntry(frame.index, frame.start_us, frame.end_us, self.box, value, self.mode))


def select(prev: BoundingBox, candidates: Sequence[Proposal]) -> tuple[Proposal | None, float]:
    """Largest IoU with ``prev``; ties go to the higher refine score, then the earlier rank."""
    best, best_key = None, None
    for rank, c in enumerate(candidates):
        key = (iou(prev, c.box), c.refine_score or 0.0, -rank)
        if best_key is None or key > best_key:
            best, best_key = c, key
    return best, (0.0 if best_key is None else best_key[0])


def step(state: TrackState, frame: AtslTdFrame, cfg: TrackerConfig = TrackerConfig(),
         det: DetectorConfig = DetectorConfig(), proposals_out=None) -> TrackState:
    """One tracking update. Falls into recovery when the best IoU is below ``mu``."""
    prev = state.box
    region = SearchRegion.around(prev, cfg.tau, frame.geometry)
    proposals = propose(frame, region, prev, det)
    if proposals_out is not None:
        dump_proposals(proposals_out, frame.index, proposals)
    winner, best = select(prev, refine(prev, proposals, cfg.lam))
    if winner is not None and best >= cfg.mu:
        state.box = winner.box
        state.last_confident = winner.box
        state.mode = Mode.TRACKING
        state.frames_in_recovery = 0
    else:
        state.box = state.last_confident
        state.mode = Mode.RECOVERING
        state.frames_in_recovery = 0
    state._record(frame, best)
    return state


def recover_step(state: TrackState, frame: AtslTdFrame, cfg: TrackerConfig = TrackerConfig(),
                 det: DetectorConfig = DetectorConfig(), proposals_out=None) -> TrackState:
    """Re-detect the target in a search region that widens every frame spent lost."""
    anchor = state.last_confident
    state.frames_in_recovery += 1
    factor = cfg.tau * cfg.recovery_growth ** state.frames_in_recovery
    geo = frame.geometry
    region = SearchRegion.around(anchor, factor, geo) or SearchRegion.full(geo)
    proposals = propose(frame, region, anchor, det)
    if proposals_out is not None:
        dump_proposals(proposals_out, frame.index, proposals)
    best, best_key = None, None
    for rank, p in enumerate(proposals):
        key = (refine_score(anchor, p.box), -rank)
        if best_key is None or key > best_key:
            best, best_key = p, key
    if best is not None and best_key[0] >= cfg.resume_score:
        prev_iou = iou(anchor, best.box)
        state.box = best.box
        state.last_confident = best.box
        state.mode = Mode.TRACKING
        state.frames_in_recovery = 0
        state._record(frame, prev_iou)
    else:
        state.box = anchor
        state._record(frame, 0.0)
    return state


def advance(state: TrackState, frame: AtslTdFrame, cfg: TrackerConfig = TrackerConfig(),
            det: DetectorConfig = DetectorConfig(), proposals_out=None) -> TrackState:
    if state.mode is Mode.RECOVERING:
        return recover_step(state, frame, cfg, det, proposals_out)
    return step(state, frame, cfg, det, proposals_out)


def search_region_extent(state: TrackState, cfg: TrackerConfig, geometry: SensorGeometry) -> BoundingBox:
    """Region the next update will search (for inspection and tests)."""
    if state.mode is Mode.RECOVERING:
        factor = cfg.tau * cfg.recovery_growth ** (state.frames_in_recovery + 1)
        r = SearchRegion.around(state.last_confident, factor, geometry) or SearchRegion.full(geometry)
    else:
        r = SearchRegion.around(state.box, cfg.tau, geometry)
    return r.box


@dataclass(frozen=True)
class PipelineConfig:
    geometry: SensorGeometry = SensorGeometry()
    grid: GridSpec | None = None
    interval: ConfidenceInterval = DEFAULT_INTERVAL
    cadence: int = 200
    max_open_us: int | None = None
    tracker: TrackerConfig = TrackerConfig()
    detector: DetectorConfig = DetectorConfig()

    def converter(self) -> AdaptiveConverter:
        return AdaptiveConverter(self.geometry, self.grid, self.interval, self.cadence, self.max_open_us)


@dataclass
class TrackResult:
    frames: list[AtslTdFrame]
    states: list[TrackState]


def track_frames(frames: Sequence[AtslTdFrame], first_boxes: Sequence[BoundingBox],
                 cfg: PipelineConfig = PipelineConfig(), workers: int = 1,
                 object_ids: Sequence[int] | None = None) -> list[TrackState]:
    ids = list(object_ids) if object_ids is not None else list(range(len(first_boxes)))

    def run(k: int) -> TrackState:
        st = TrackState.start(first_boxes[k], ids[k])
        for fr in frames:
            advance(st, fr, cfg.tracker, cfg.detector)
        return st

    if workers > 1 and len(first_boxes) > 1:
        with ThreadPoolExecutor(workers) as ex:
            return list(ex.map(run, range(len(first_boxes))))
    return [run(k) for k in range(len(first_boxes))]


def track_stream(events: EventArray | Iterable[EventArray], first_boxes: BoundingBox | Sequence[BoundingBox],
                 cfg: PipelineConfig = PipelineConfig(), workers: int = 1,
                 object_ids: Sequence[int] | None = None) -> TrackResult:
    """Convert events to adaptive frames and track every object through them."""
    if isinstance(first_boxes, BoundingBox):
        first_boxes = [first_boxes]
    chunks = [events] if isinstance(events, EventArray) else events
    frames = list(cfg.converter().convert(chunks))
    log.info("converted stream into %d frames", len(frames))
    return TrackResult(frames, track_frames(frames, first_boxes, cfg, workers, object_ids))


RESULT_HEADER = ["frame_index", "t_start", "t_end", "object_id", "x", "y", "w", "h", "iou_prev", "mode"]


def write_results(states: Sequence[TrackState], path: str | os.PathLike) -> None:
    rows = []
    for st in states:
        for h in st.history:
            rows.append((h.frame_index, st.object_id, h))
    rows.sort(key=lambda r: (r[0], r[1]))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_HEADER)
        for idx, oid, h in rows:
            b = h.box
            w.writerow([
                idx, f"{h.start_us / 1e6:.6f}", f"{h.end_us / 1e6:.6f}", oid,
                f"{b.x:.3f}", f"{b.y:.3f}", f"{b.w:.3f}", f"{b.h:.3f}", f"{h.iou_prev:.6f}", h.mode.value,
            ])


@dataclass(frozen=True)
class ResultRow:
    frame_index: int
    t_start: float
    t_end: float
    object_id: int
    box: BoundingBox
    iou_prev: float
    mode: Mode


def read_results(path: str | os.PathLike) -> list[ResultRow]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for r in csv.DictReader(fh):
            out.append(ResultRow(
                int(r["frame_index"]), float(r["t_start"]), float(r["t_end"]), int(r["object_id"]),
                BoundingBox(float(r["x"]), float(r["y"]), float(r["w"]), float(r["h"])),
                float(r["iou_prev"]), Mode(r["mode"]),
            ))
    return out
