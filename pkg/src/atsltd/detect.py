"""Object proposals on time-surface frames and their size/shape refinement.

Frame intensities already are a contour map in which brightness encodes
recency, so candidate boxes are scored directly from them with integral images:
contour mass in a ring just inside the box edges, minus mass in a thin band just
outside them (contours the box straddles), divided by the perimeter. Raising the
intensities to a power first keeps older, fainter contours from pulling the box
backwards along the motion.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .boxes import BoundingBox, SensorGeometry


@dataclass(frozen=True)
class DetectorConfig:
    max_boxes: int = 1000
    min_box_area: float = 100.0
    area_factors: tuple[float, ...] = (0.5, 2**-0.5, 1.0, 2**0.5, 2.0)
    aspect_factors: tuple[float, ...] = (0.5, 0.75, 1.0, 4.0 / 3.0, 2.0)
    nms_overlap: float = 0.8
    stride_div: int = 16
    # width of the outside band whose mass counts as straddled contour
    band_px: int = 1
    # intensity exponent; higher values concentrate mass on the newest contour
    recency_power: float = 4.0
    # proposals scoring below this fraction of the best one are dropped
    min_score_ratio: float = 0.7

    def __post_init__(self):
        if self.max_boxes < 1:
            raise ValueError("max_boxes must be >= 1")
        if self.min_box_area < 1:
            raise ValueError("min_box_area must be >= 1")
        if self.band_px < 1:
            raise ValueError("band_px must be >= 1")
        if not 0 <= self.min_score_ratio <= 1:
            raise ValueError("min_score_ratio must be in [0, 1]")


@dataclass(frozen=True)
class SearchRegion:
    box: BoundingBox

    @classmethod
    def around(cls, prev: BoundingBox, tau: float, geometry: SensorGeometry) -> "SearchRegion | None":
        """``prev`` scaled by ``tau`` about its center and clipped to the sensor."""
        clipped = prev.scaled(tau).clip(geometry)
        return None if clipped is None else cls(clipped)

    @classmethod
    def full(cls, geometry: SensorGeometry) -> "SearchRegion":
        return cls(BoundingBox(0, 0, geometry.w, geometry.h))


@dataclass(frozen=True)
class Proposal:
    box: BoundingBox
    detector_score: float
    refine_score: float | None = None


class ProposalList(list):
    """List of proposals; ``degenerate`` is set when the search region was empty."""

    degenerate: bool = False


def _integral(img: np.ndarray) -> np.ndarray:
    s = np.zeros((img.shape[0] + 1, img.shape[1] + 1))
    np.cumsum(np.cumsum(img, axis=0), axis=1, out=s[1:, 1:])
    return s


def _mass(s, x0, y0, x1, y1):
    return s[y1, x1] - s[y0, x1] - s[y1, x0] + s[y0, x0]


def _nms(x0, y0, x1, y1, order, overlap, limit):
    areas = (x1 - x0) * (y1 - y0)
    keep = []
    alive = np.ones(order.size, dtype=bool)
    for i in range(order.size):
        if not alive[i]:
            continue
        keep.append(order[i])
        if len(keep) >= limit:
            break
        a = order[i]
        rest = order[i + 1 :]
        iw = np.clip(np.minimum(x1[a], x1[rest]) - np.maximum(x0[a], x0[rest]), 0, None)
        ih = np.clip(np.minimum(y1[a], y1[rest]) - np.maximum(y0[a], y0[rest]), 0, None)
        inter = iw * ih
        iou = inter / (areas[a] + areas[rest] - inter)
        alive[i + 1 :] &= iou <= overlap
    return np.asarray(keep, dtype=np.int64)


def propose(frame, region: SearchRegion | None, prev: BoundingBox, cfg: DetectorConfig = DetectorConfig()) -> ProposalList:
    """Scored candidate boxes inside ``region``, best first.

    Candidate sizes are a ladder of area and aspect factors around ``prev``.
    """
    out = ProposalList()
    planes = np.asarray(getattr(frame, "planes", frame))
    if region is None:
        out.degenerate = True
        return out
    img = planes.astype(np.float64) / 255.0
    if cfg.recency_power != 1:
        img = img**cfg.recency_power
    if img.ndim == 3:
        img = img.sum(axis=0)
    H, W = img.shape
    rx0 = max(0, math.ceil(region.box.x - 1e-9))
    ry0 = max(0, math.ceil(region.box.y - 1e-9))
    rx1 = min(W, math.floor(region.box.x1 + 1e-9))
    ry1 = min(H, math.floor(region.box.y1 + 1e-9))
    if rx1 <= rx0 or ry1 <= ry0:
        out.degenerate = True
        return out
    s = _integral(img)
    if s[-1, -1] <= 0:
        return out

    cols = {k: [] for k in ("x0", "y0", "w", "h", "score")}
    for af in cfg.area_factors:
        for kf in cfg.aspect_factors:
            area = prev.area * af
            aspect = prev.aspect * kf
            w = int(round(math.sqrt(area * aspect)))
            h = int(round(math.sqrt(area / aspect)))
            if w < 1 or h < 1 or w * h < cfg.min_box_area or w >= rx1 - rx0 or h >= ry1 - ry0:
                continue
            sx = max(1, w // cfg.stride_div)
            sy = max(1, h // cfg.stride_div)
            xs = np.arange(rx0, rx1 - w, sx)
            ys = np.arange(ry0, ry1 - h, sy)
            X0, Y0 = np.meshgrid(xs, ys)
            X0 = X0.ravel()
            Y0 = Y0.ravel()
            # a box of width w spans pixels x0..x0+w inclusive: its edges run
            # through the centers of the boundary pixels
            X1, Y1 = X0 + w + 1, Y0 + h + 1
            d = cfg.band_px
            m_in = _mass(s, X0, Y0, X1, Y1)
            if w > 2 * d and h > 2 * d:
                m_core = _mass(s, X0 + d, Y0 + d, X1 - d, Y1 - d)
            else:
                m_core = 0.0
            m_out = (
                _mass(s, np.maximum(X0 - d, 0), np.maximum(Y0 - d, 0), np.minimum(X1 + d, W), np.minimum(Y1 + d, H))
                - m_in
            )
            score = (m_in - m_core - m_out) / (2.0 * (w + h))
            cols["x0"].append(X0)
            cols["y0"].append(Y0)
            cols["w"].append(np.full(X0.size, w))
            cols["h"].append(np.full(X0.size, h))
            cols["score"].append(score)
    if not cols["score"]:
        return out
    x0 = np.concatenate(cols["x0"]).astype(np.float64)
    y0 = np.concatenate(cols["y0"]).astype(np.float64)
    ws = np.concatenate(cols["w"]).astype(np.float64)
    hs = np.concatenate(cols["h"]).astype(np.float64)
    score = np.concatenate(cols["score"])

    good = score > 0
    if not good.any():
        return out
    good &= score >= cfg.min_score_ratio * score[good].max()
    idx = np.flatnonzero(good)
    # best first; ties resolved by position then size so the order is total
    order = idx[np.lexsort((hs[idx], ws[idx], x0[idx], y0[idx], -score[idx]))]
    keep = _nms(x0, y0, x0 + ws, y0 + hs, order, cfg.nms_overlap, cfg.max_boxes)
    for k in keep.tolist():
        out.append(Proposal(BoundingBox(x0[k] + 0.5, y0[k] + 0.5, ws[k], hs[k]), float(score[k])))
    return out


def phi(x: float) -> float:
    """``x`` on (0, 1), ``1/x`` from 1 upward; peaks at 1 when ``x == 1``."""
    if not x > 0:
        raise ValueError(f"phi is defined for x > 0, got {x}")
    return x if x < 1 else 1.0 / x


def refine_score(prev: BoundingBox, cand: BoundingBox) -> float:
    return phi(prev.area / cand.area) * phi(prev.aspect / cand.aspect)


def refine(prev: BoundingBox, proposals, lam: float = 0.7) -> list[Proposal]:
    """Keep proposals whose size/shape score against ``prev`` exceeds ``lam``."""
    if not 0 <= lam <= 1:
        raise ValueError(f"lambda must be in [0, 1], got {lam}")
    out = []
    for p in proposals:
        sc = refine_score(prev, p.box)
        if sc > lam:
            out.append(Proposal(p.box, p.detector_score, sc))
    return out


def dump_proposals(fh, frame_index: int, proposals) -> None:
    """Append one JSON line ``{frame_index, boxes: [[x, y, w, h, score], ...]}``."""
    boxes = [[*p.box.as_tuple(), p.detector_score] for p in proposals]
    fh.write(json.dumps({"frame_index": frame_index, "boxes": boxes}) + "\n")
