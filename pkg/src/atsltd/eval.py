"""Average precision / robustness scoring with reinitialization on sustained failure."""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .boxes import BoundingBox
from .events import EventArray, GroundTruthTrack
from .surface import AtslTdFrame
from .track import PipelineConfig, TrackState, advance, iou


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class EvalConfig:
    n_rep: int = 1
    failure_ap_threshold: float = 0.5
    reinit_on_failure: bool = True
    # consecutive frames below the threshold that count as a tracking failure
    reinit_after: int = 3

    def __post_init__(self):
        if self.n_rep < 1:
            raise ValueError("n_rep must be >= 1")
        if self.reinit_after < 1:
            raise ValueError("reinit_after must be >= 1")


@dataclass(frozen=True)
class ObjectScore:
    object_id: int
    ap: float
    success: bool


@dataclass(frozen=True)
class ReinitEvent:
    rep: int
    object_id: int
    frame_index: int
    t: float


@dataclass(frozen=True)
class FrameScore:
    rep: int
    object_id: int
    frame_index: int
    t_end: float
    iou: float


@dataclass
class EvalReport:
    per_object: list[ObjectScore]
    ap: float
    ar: float
    reinits: list[ReinitEvent] = field(default_factory=list)
    frames: list[FrameScore] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "per_object": [{"id": o.object_id, "ap": o.ap, "success": o.success} for o in self.per_object],
            "ap": self.ap,
            "ar": self.ar,
            "reinits": [
                {"rep": r.rep, "object_id": r.object_id, "frame_index": r.frame_index, "t": r.t}
                for r in self.reinits
            ],
        }

    def write_json(self, path: str | os.PathLike) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    def write_frames_csv(self, path: str | os.PathLike) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["rep", "object_id", "frame_index", "t_end", "iou"])
            for f in self.frames:
                w.writerow([f.rep, f.object_id, f.frame_index, f"{f.t_end:.6f}", f"{f.iou:.6f}"])


def frame_ious(estimates: Sequence[BoundingBox | None], ground_truth: Sequence[BoundingBox | None]) -> list[float]:
    """Per-frame IoU over frames where both sides exist."""
    if len(estimates) != len(ground_truth):
        raise EvaluationError(f"{len(estimates)} estimates vs {len(ground_truth)} ground-truth boxes")
    return [iou(e, g) for e, g in zip(estimates, ground_truth) if e is not None and g is not None]


def average_precision(estimates, ground_truth) -> float:
    """Mean per-frame IoU of one run, ``estimates`` and ``ground_truth`` aligned per frame.

    Frames without a ground-truth box are skipped; a run with none left is an error.
    """
    vals = frame_ious(estimates, ground_truth)
    if not vals:
        raise EvaluationError("estimates and ground truth share no frames")
    return float(np.mean(vals))


def is_success(ap: float, threshold: float = 0.5) -> bool:
    return ap >= threshold


def average_robustness(successes: Sequence[bool]) -> float:
    if len(successes) == 0:
        raise EvaluationError("no runs to score")
    return float(np.mean([1.0 if s else 0.0 for s in successes]))


def align_ground_truth(track: GroundTruthTrack, times_s: Sequence[float]) -> list[BoundingBox | None]:
    """Ground truth interpolated to each time; None outside the labelled span."""
    return [track.box_at(t) for t in times_s]


def _summarize(runs: dict[int, list[float]], threshold: float, reinits, frames) -> EvalReport:
    per_object = []
    all_aps, all_success = [], []
    for oid in sorted(runs):
        aps = runs[oid]
        ap = float(np.mean(aps))
        per_object.append(ObjectScore(oid, ap, is_success(ap, threshold)))
        all_aps.extend(aps)
        all_success.extend(is_success(a, threshold) for a in aps)
    return EvalReport(per_object, float(np.mean(all_aps)), average_robustness(all_success), list(reinits), list(frames))


def evaluate_results(rows, tracks: Sequence[GroundTruthTrack], cfg: EvalConfig = EvalConfig()) -> EvalReport:
    """Score precomputed tracker output (``track.ResultRow`` items) against ground truth."""
    gt = {t.object_id: t for t in tracks}
    by_obj: dict[int, list] = {}
    for r in rows:
        by_obj.setdefault(r.object_id, []).append(r)
    runs, frames = {}, []
    for oid, rs in by_obj.items():
        if oid not in gt:
            raise EvaluationError(f"no ground truth for object {oid}")
        rs.sort(key=lambda r: r.frame_index)
        truth = align_ground_truth(gt[oid], [r.t_end for r in rs])
        for r, g in zip(rs, truth):
            if g is not None:
                frames.append(FrameScore(0, oid, r.frame_index, r.t_end, iou(r.box, g)))
        try:
            runs[oid] = [average_precision([r.box for r in rs], truth)]
        except EvaluationError as exc:
            raise EvaluationError(f"object {oid}: {exc}") from None
    if not runs:
        raise EvaluationError("no results to evaluate")
    return _summarize(runs, cfg.failure_ap_threshold, [], frames)


def _track_object(frames: Sequence[AtslTdFrame], gt: GroundTruthTrack, pipe: PipelineConfig, cfg: EvalConfig,
                  rep: int, reinits: list, scores: list) -> float:
    state: TrackState | None = None
    est, truth = [], []
    misses = 0
    pending_reinit = False
    for fr in frames:
        if state is None or pending_reinit:
            seed = gt.box_at(fr.start_time)
            if seed is None:
                # object not labelled yet; nothing to track or score
                continue
            if state is None:
                state = TrackState.start(seed, gt.object_id)
            else:
                state.reinitialize(seed)
                reinits.append(ReinitEvent(rep, gt.object_id, fr.index, fr.start_time))
            pending_reinit = False
            misses = 0
        advance(state, fr, pipe.tracker, pipe.detector)
        g = gt.box_at(fr.end_time)
        if g is None:
            continue
        v = iou(state.box, g)
        est.append(state.box)
        truth.append(g)
        scores.append(FrameScore(rep, gt.object_id, fr.index, fr.end_time, v))
        misses = misses + 1 if v < cfg.failure_ap_threshold else 0
        if cfg.reinit_on_failure and misses >= cfg.reinit_after:
            pending_reinit = True
    if not est:
        raise EvaluationError(f"object {gt.object_id}: no frame overlaps its ground truth")
    return average_precision(est, truth)


def run_protocol(events: EventArray | Sequence[AtslTdFrame], tracks: Sequence[GroundTruthTrack],
                 cfg: EvalConfig = EvalConfig(), pipeline: PipelineConfig = PipelineConfig()) -> EvalReport:
    """Track every labelled object ``n_rep`` times and aggregate AP/AR.

    Each object starts from its ground truth at the start of the first frame it
    is labelled in. With ``reinit_on_failure``, ``reinit_after`` consecutive
    frames with IoU below the failure threshold restart the tracker from ground
    truth at the following frame.
    """
    if not tracks:
        raise EvaluationError("no ground-truth tracks")
    if isinstance(events, EventArray):
        frames = list(pipeline.converter().convert([events]))
    else:
        frames = list(events)
    if not frames:
        raise EvaluationError("stream produced no frames")
    runs: dict[int, list[float]] = {}
    reinits: list[ReinitEvent] = []
    scores: list[FrameScore] = []
    for rep in range(cfg.n_rep):
        for gt in tracks:
            ap = _track_object(frames, gt, pipeline, cfg, rep, reinits, scores)
            runs.setdefault(gt.object_id, []).append(ap)
    return _summarize(runs, cfg.failure_ap_threshold, reinits, scores)
