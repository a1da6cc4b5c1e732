"""Axis-aligned bounding boxes in pixel coordinates."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class SensorGeometry:
    w: int = 240
    h: int = 180

    def __post_init__(self):
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"sensor geometry must be positive, got {self.w}x{self.h}")

    def contains(self, u: int, v: int) -> bool:
        return 0 <= u < self.w and 0 <= v < self.h


@dataclass(frozen=True)
class BoundingBox:
    """Box with top-left corner ``(x, y)`` and size ``(w, h)``."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0):
            raise ValueError(f"box width and height must be positive, got {self.w}x{self.h}")

    @classmethod
    def from_center(cls, cx: float, cy: float, w: float, h: float) -> "BoundingBox":
        return cls(cx - w / 2.0, cy - h / 2.0, w, h)

    @classmethod
    def from_corners(cls, x0: float, y0: float, x1: float, y1: float) -> "BoundingBox":
        return cls(x0, y0, x1 - x0, y1 - y0)

    @property
    def x1(self) -> float:
        return self.x + self.w

    @property
    def y1(self) -> float:
        return self.y + self.h

    @property
    def center(self) -> tuple[float, float]:
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)

    @property
    def area(self) -> float:
        return self.w * self.h

    @property
    def aspect(self) -> float:
        return self.w / self.h

    def scaled(self, fx: float, fy: float | None = None) -> "BoundingBox":
        """Same center, size multiplied by ``fx`` (and ``fy``, default ``fx``)."""
        fy = fx if fy is None else fy
        cx, cy = self.center
        return BoundingBox.from_center(cx, cy, self.w * fx, self.h * fy)

    def clip(self, geometry: SensorGeometry) -> "BoundingBox | None":
        """Intersection with the sensor plane, or None when it is empty."""
        x0 = max(self.x, 0.0)
        y0 = max(self.y, 0.0)
        x1 = min(self.x1, float(geometry.w))
        y1 = min(self.y1, float(geometry.h))
        if x1 <= x0 or y1 <= y0:
            return None
        return BoundingBox.from_corners(x0, y0, x1, y1)

    def contains_box(self, other: "BoundingBox", tol: float = 1e-9) -> bool:
        return (
            other.x >= self.x - tol
            and other.y >= self.y - tol
            and other.x1 <= self.x1 + tol
            and other.y1 <= self.y1 + tol
        )

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x, self.y, self.w, self.h)
