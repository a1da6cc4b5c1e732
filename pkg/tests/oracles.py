"""Brute-force reference implementations used only by the tests.

None of these share code with the package: they follow the definitions as
literally as possible and trade speed for obviousness.
"""

from __future__ import annotations

import math
from collections import Counter
from fractions import Fraction

import numpy as np


_INT64_MAX = np.iinfo(np.int64).max


def literal_decay(events, w: int, h: int, frame_start_us: int, eps_us: int = 1, checkpoints=()):
    """Whole-matrix decay simulation in exact rationals, rounded once at the end.

    Before each event every pixel of both planes is multiplied by
    ``t'_{k-1} / t'_k`` (``t' = t - frame_start + eps``); then the event's pixel
    is set to 255. Returns the rounded planes after the last event, plus the
    planes after each event index listed in ``checkpoints``.

    Each pixel is a reduced fraction ``num / den`` in int64 arrays; a guard
    refuses any step whose product could overflow, so results are exact.
    """
    n = 2 * h * w
    num = np.zeros(n, dtype=np.int64)
    den = np.ones(n, dtype=np.int64)
    prev = None
    snaps = {}
    want = set(checkpoints)
    for k, (t, x, y, p) in enumerate(events):
        tp = t - frame_start_us + eps_us
        if prev is not None and tp != prev:
            if int(num.max()) > _INT64_MAX // prev or int(den.max()) > _INT64_MAX // tp:
                raise OverflowError("exact decay simulation would overflow int64")
            num *= prev
            den *= tp
            g = np.gcd(num, den)
            num //= g
            den //= g
        prev = tp
        i = (p * h + y) * w + x
        num[i], den[i] = 255, 1
        if k in want:
            snaps[k] = round_half_up(num, den).reshape(2, h, w)
    return round_half_up(num, den).reshape(2, h, w), snaps


def literal_decay_fractions(events, w: int, h: int, frame_start_us: int, eps_us: int = 1):
    """Same simulation with ``fractions.Fraction`` cells; slow, for cross-checking the array version."""
    F = [Fraction(0)] * (2 * h * w)
    prev = None
    for t, x, y, p in events:
        tp = Fraction(t - frame_start_us + eps_us)
        if prev is not None and tp != prev:
            F = [v * prev / tp for v in F]
        prev = tp
        F[(p * h + y) * w + x] = Fraction(255)
    return np.array([math.floor(v + Fraction(1, 2)) for v in F], dtype=np.int64).reshape(2, h, w)


def round_half_up(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    """``floor(num / den + 1/2)`` in integers."""
    return (2 * num + den) // (2 * den)


def counter_entropy(values, base: float = 2.0) -> float:
    values = list(values)
    n = len(values)
    if n == 0:
        return 0.0
    return -sum((c / n) * math.log(c / n, base) for c in Counter(values).values())


def grid_nzge(planes, p: int, q: int, r: int, base: float = 2.0):
    """Per-cell channel-mean entropies summed and divided by the non-zero count."""
    planes = np.asarray(planes)
    cells = []
    for i in range(p):
        for j in range(q):
            per_channel = [
                counter_entropy(pl[i * r : (i + 1) * r, j * r : (j + 1) * r].ravel().tolist(), base) for pl in planes
            ]
            cells.append(sum(per_channel) / len(per_channel))
    nonzero = [c for c in cells if c > 0]
    if not nonzero:
        return None, cells
    return sum(cells) / len(nonzero), cells


def raster_iou(a, b) -> float:
    """IoU of integer boxes ``(x, y, w, h)`` by counting covered unit pixels."""
    def pixels(box):
        x, y, w, h = box
        return {(i, j) for i in range(x, x + w) for j in range(y, y + h)}

    pa, pb = pixels(a), pixels(b)
    union = len(pa | pb)
    return len(pa & pb) / union if union else 0.0


def scalar_refine_score(prev, cand) -> float:
    """Size/shape score for ``(w, h)`` pairs, written out from the definition."""
    def phi(x):
        return x if x < 1 else 1 / x

    (pw, ph), (cw, ch) = prev, cand
    return phi((pw * ph) / (cw * ch)) * phi((pw / ph) / (cw / ch))
