"""Grid entropy, non-zero grid entropy (NZGE) and its confidence interval.

A frame is split into ``p x q`` cells of ``r x r`` pixels. Each cell's entropy is
the mean of the two polarity channels' gray-level entropies; NZGE is the sum of
cell entropies divided by the number of cells whose entropy is non-zero.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from functools import lru_cache
from statistics import NormalDist

import numpy as np

from . import _kernels
from ._ttable import T_CRIT_01, T_CRIT_05
from .boxes import SensorGeometry


class GridSpecError(ValueError):
    pass


class CalibrationError(ValueError):
    pass


class DegenerateIntervalError(CalibrationError):
    pass


@dataclass(frozen=True)
class GridSpec:
    p: int = 45
    q: int = 60
    r: int = 4

    def __post_init__(self):
        if min(self.p, self.q, self.r) < 1:
            raise GridSpecError(f"grid dimensions must be positive: {self}")

    @classmethod
    def for_geometry(cls, geometry: SensorGeometry, r: int = 4) -> "GridSpec":
        """Largest grid of ``r``-pixel cells fitting the sensor; partial cells are dropped."""
        if geometry.h < r or geometry.w < r:
            raise GridSpecError(f"cell size {r} exceeds sensor {geometry.w}x{geometry.h}")
        return cls(geometry.h // r, geometry.w // r, r)

    def check(self, h: int, w: int) -> None:
        if self.p * self.r > h or self.q * self.r > w:
            raise GridSpecError(
                f"grid {self.p}x{self.q} of {self.r}px cells does not fit a {w}x{h} image"
            )


@lru_cache(maxsize=64)
def entropy_shares(n: int, base: float = 2.0) -> np.ndarray:
    """Fixed-point per-pixel entropy contributions for ``n``-pixel patches.

    ``shares[c] = round(-log_base(c/n) / n * 2**SHARE_BITS)``: a level seen ``c``
    times contributes ``c * shares[c]``, and the patch entropy is the sum times
    ``2**-SHARE_BITS``. ``shares[0]`` is unused.
    """
    if not base > 1:
        raise ValueError(f"log base must be > 1, got {base}")
    if n < 1 or math.log(n, base) >= 32:
        raise ValueError(f"unsupported patch size {n} for base {base}")
    lb = math.log2(base)
    out = np.zeros(n + 1, dtype=np.int64)
    for c in range(1, n + 1):
        out[c] = round(-math.log2(c / n) / lb / n * 2.0**_kernels.SHARE_BITS)
    out.setflags(write=False)
    return out


def patch_entropy(patch, base: float = 2.0) -> float:
    """Gray-level entropy of an intensity block (any shape, any values)."""
    a = np.asarray(patch).ravel()
    if a.size == 0:
        return 0.0
    _, counts = np.unique(a, return_counts=True)
    shares = entropy_shares(int(a.size), float(base))
    # exact integer sum, converted like the compiled cell kernel does
    total = sum(int(c) * int(shares[c]) for c in counts.tolist())
    return float(total) * 2.0**-_kernels.SHARE_BITS


@dataclass(frozen=True)
class EntropyMap:
    """Per-cell entropy averaged over channels.

    ``fixed`` holds the per-cell sum over channels in ``2**-SHARE_BITS`` units;
    ``values`` is the same map as floats.
    """

    fixed: np.ndarray
    channels: int = 2

    @property
    def values(self) -> np.ndarray:
        return self.fixed * (2.0**-_kernels.SHARE_BITS / self.channels)

    @property
    def n_grid(self) -> int:
        return int(np.count_nonzero(self.fixed > 0))

    @property
    def total(self) -> float:
        # rounded once from the exact integer sum, as the frame cutter does
        scale = 0.5 if self.channels == 2 else 1.0 / self.channels
        return float(int(self.fixed.sum(dtype=np.int64))) * 2.0**-_kernels.SHARE_BITS * scale


def _planes(frame) -> np.ndarray:
    planes = getattr(frame, "planes", frame)
    planes = np.asarray(planes)
    if planes.ndim == 2:
        planes = planes[None]
    return planes


def _channel_fixed(image, spec: GridSpec, base: float) -> np.ndarray:
    img = np.ascontiguousarray(image, dtype=np.int64)
    spec.check(*img.shape)
    if img.size and (img.min() < 0 or img.max() > 255):
        raise ValueError("channel entropy expects 8-bit intensities")
    out = np.zeros((spec.p, spec.q), dtype=np.int64)
    _kernels.image_entropy_map(img, spec.p, spec.q, spec.r, entropy_shares(spec.r * spec.r, base), out)
    return out


def channel_entropy_map(image, spec: GridSpec, base: float = 2.0) -> np.ndarray:
    """Per-cell entropy of one 8-bit plane."""
    return _channel_fixed(image, spec, base) * 2.0**-_kernels.SHARE_BITS


def entropy_map(frame, spec: GridSpec, base: float = 2.0) -> EntropyMap:
    """Entropy map of a two-channel frame; each cell is the mean over channels.

    ``frame`` may be an :class:`~atsltd.surface.AtslTdFrame` or an array shaped
    ``(2, h, w)``. A single ``(h, w)`` plane is treated as a one-channel frame.
    """
    planes = _planes(frame)
    maps = [_channel_fixed(pl, spec, base) for pl in planes]
    return EntropyMap(sum(maps[1:], maps[0]), len(maps))


def nzge(emap: EntropyMap) -> float | None:
    """Mean entropy over non-zero cells; None when every cell is zero."""
    n = emap.n_grid
    if n == 0:
        return None
    return emap.total / n


# ---------------------------------------------------------------------------
# confidence interval


def t_critical(df: int, omega: float = 0.05) -> float:
    """Two-sided critical value ``|g_{omega/2}|`` of Student's t with ``df`` degrees of freedom."""
    if df < 1:
        raise CalibrationError(f"degrees of freedom must be >= 1, got {df}")
    if df > 200:
        return NormalDist().inv_cdf(1.0 - omega / 2.0)
    if math.isclose(omega, 0.05):
        return T_CRIT_05[df - 1]
    if math.isclose(omega, 0.01):
        return T_CRIT_01[df - 1]
    raise CalibrationError(f"no t table for omega={omega}; supported: 0.05, 0.01")


@dataclass(frozen=True)
class ConfidenceInterval:
    alpha: float
    beta: float
    omega: float = 0.05
    log_base: float = 2.0

    def __post_init__(self):
        if not (0 < self.alpha < self.beta):
            raise DegenerateIntervalError(f"interval needs 0 < alpha < beta, got [{self.alpha}, {self.beta}]")

    @property
    def width(self) -> float:
        return self.beta - self.alpha

    def __contains__(self, value: float) -> bool:
        return self.alpha <= value <= self.beta


@dataclass
class CalibrationSet:
    samples: list[float] = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.samples)

    @property
    def mean(self) -> float:
        return float(np.mean(self.samples))

    @property
    def std(self) -> float:
        return float(np.std(self.samples, ddof=1))


def interval_from_stats(
    n: int, mean: float, std: float, omega: float = 0.05, log_base: float = 2.0
) -> ConfidenceInterval:
    if n < 2:
        raise CalibrationError(f"need at least 2 samples, got {n}")
    if not 0 < omega < 1:
        raise CalibrationError(f"significance must be in (0, 1), got {omega}")
    if not std > 0:
        raise DegenerateIntervalError("sample standard deviation is zero")
    half = t_critical(n - 1, omega) * std / math.sqrt(n)
    return ConfidenceInterval(mean - half, mean + half, omega, log_base)


def calibrate_interval(
    cal: CalibrationSet, omega: float = 0.05, log_base: float = 2.0
) -> ConfidenceInterval:
    """Mean +/- t * S / sqrt(n) over the calibration NZGE samples."""
    if cal.n < 2:
        raise CalibrationError(f"need at least 2 samples, got {cal.n}")
    return interval_from_stats(cal.n, cal.mean, cal.std, omega, log_base)


# Default interval: 100 reference samples, mean 0.08795, std 0.02394, omega 0.05.
# Only base-10 entropies can fall that low on 4x4 cells, hence log_base=10.
DEFAULT_INTERVAL = interval_from_stats(100, 0.08795, 0.02394, 0.05, log_base=10.0)


def frame_samples(frames, spec: GridSpec, base: float = 2.0) -> list[float]:
    """NZGE of each frame, skipping frames with no non-zero cell."""
    values = (nzge(entropy_map(f, spec, base)) for f in frames)
    return [v for v in values if v is not None]


def reaches(value: float | None, interval: ConfidenceInterval) -> bool:
    """Cut decision: NZGE defined and at least ``alpha``; overshooting ``beta`` still cuts."""
    return value is not None and value >= interval.alpha


def should_finalize(frame, spec: GridSpec, interval: ConfidenceInterval) -> bool:
    return reaches(nzge(entropy_map(frame, spec, interval.log_base)), interval)


def save_calibration(
    path, interval: ConfidenceInterval, spec: GridSpec, samples: list[float] | None = None
) -> None:
    doc = {
        "samples": list(samples or []),
        "omega": interval.omega,
        "alpha": interval.alpha,
        "beta": interval.beta,
        "log_base": interval.log_base,
        "grid": {"p": spec.p, "q": spec.q, "r": spec.r},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_calibration(path: str | os.PathLike) -> tuple[ConfidenceInterval, GridSpec]:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    g = doc["grid"]
    return (
        ConfidenceInterval(doc["alpha"], doc["beta"], doc["omega"], doc["log_base"]),
        GridSpec(g["p"], g["q"], g["r"]),
    )
