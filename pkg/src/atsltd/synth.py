"""Synthetic event streams from moving outlines, with exact ground truth.

Each polygon edge emits events while it moves. The expected count is
``edge_density * length * |v . n| * dt``: ``edge_density`` events per contour
pixel per pixel of normal displacement. Edges moving along themselves stay
silent, as do static shapes. Candidate events follow a regular per-edge schedule
and a seeded thinning pass decides which survive.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .boxes import BoundingBox, SensorGeometry
from .events import EventArray, GroundTruthTrack, Polarity

KEEP_PROB = 0.75


class ScriptError(ValueError):
    pass


@dataclass
class Shape:
    """Outline moving along a piecewise-linear path of ``(t, cx, cy)`` waypoints.

    ``vertices`` are offsets from the center; ``rect(w, h)`` builds a rectangle.
    Events are suppressed inside ``hidden`` time windows (occlusion).
    """

    vertices: list[tuple[float, float]]
    waypoints: list[tuple[float, float, float]]
    edge_density: float = 1.0
    object_id: int = 0
    leading_polarity: Polarity = Polarity.ON
    hidden: list[tuple[float, float]] = field(default_factory=list)

    @classmethod
    def rect(cls, w: float, h: float, waypoints, **kw) -> "Shape":
        hw, hh = w / 2.0, h / 2.0
        return cls([(-hw, -hh), (hw, -hh), (hw, hh), (-hw, hh)], [tuple(p) for p in waypoints], **kw)

    def center_at(self, t: float) -> tuple[float, float]:
        wp = self.waypoints
        if t <= wp[0][0]:
            return wp[0][1], wp[0][2]
        for (t0, x0, y0), (t1, x1, y1) in zip(wp, wp[1:]):
            if t <= t1:
                s = (t - t0) / (t1 - t0)
                return x0 + s * (x1 - x0), y0 + s * (y1 - y0)
        return wp[-1][1], wp[-1][2]

    def box_at(self, t: float) -> BoundingBox:
        cx, cy = self.center_at(t)
        vx = [cx + a for a, _ in self.vertices]
        vy = [cy + b for _, b in self.vertices]
        return BoundingBox.from_corners(min(vx), min(vy), max(vx), max(vy))


@dataclass
class SceneScript:
    geometry: SensorGeometry = SensorGeometry()
    duration: float = 1.0
    shapes: list[Shape] = field(default_factory=list)
    noise_rate: float = 0.0
    seed: int = 0
    gt_rate_hz: float = 1000.0

    def validate(self) -> None:
        if not self.duration > 0:
            raise ScriptError("duration must be positive")
        if self.noise_rate < 0:
            raise ScriptError("noise rate must be non-negative")
        for sh in self.shapes:
            if sh.edge_density < 0:
                raise ScriptError(f"shape {sh.object_id}: edge density must be non-negative")
            if len(sh.vertices) < 3:
                raise ScriptError(f"shape {sh.object_id}: need at least 3 vertices")
            if not sh.waypoints:
                raise ScriptError(f"shape {sh.object_id}: no waypoints")
            times = [w[0] for w in sh.waypoints]
            if any(b <= a for a, b in zip(times, times[1:])):
                raise ScriptError(f"shape {sh.object_id}: waypoint times must increase")
            # overlap with the sensor is convex in the center position, so checking
            # the waypoints covers the segments between them
            for t, _, _ in sh.waypoints:
                if sh.box_at(t).clip(self.geometry) is None:
                    raise ScriptError(f"shape {sh.object_id} leaves the sensor at t={t}")


def _outward_normals(verts: np.ndarray) -> np.ndarray:
    a = verts
    b = np.roll(verts, -1, axis=0)
    d = b - a
    area2 = np.sum(a[:, 0] * b[:, 1] - b[:, 0] * a[:, 1])
    n = np.stack([d[:, 1], -d[:, 0]], axis=1)
    if area2 < 0:
        n = -n
    return n / np.linalg.norm(d, axis=1, keepdims=True)


def _shape_events(sh: Shape, script: SceneScript, rng: np.random.Generator) -> list[tuple]:
    verts = np.asarray(sh.vertices, dtype=float)
    normals = _outward_normals(verts)
    starts = verts
    ends = np.roll(verts, -1, axis=0)
    lengths = np.linalg.norm(ends - starts, axis=1)
    out = []
    wp = sh.waypoints
    for (t0, x0, y0), (t1, x1, y1) in zip(wp, wp[1:]):
        ta, tb = max(t0, 0.0), min(t1, script.duration)
        if tb <= ta:
            continue
        vel = np.array([(x1 - x0) / (t1 - t0), (y1 - y0) / (t1 - t0)])
        for k in range(len(verts)):
            vn = float(normals[k] @ vel)
            rate = sh.edge_density * lengths[k] * abs(vn)
            if rate <= 0:
                continue
            dt = KEEP_PROB / rate
            j0 = np.ceil((ta - t0) / dt - 0.5)
            times = t0 + (np.arange(j0, np.ceil((tb - t0) / dt - 0.5)) + 0.5) * dt
            times = times[(times >= ta) & (times < tb)]
            keep = rng.random(times.size) < KEEP_PROB
            s = rng.random(times.size)
            times, s = times[keep], s[keep]
            frac = (times - t0) / (t1 - t0)
            cx = x0 + frac * (x1 - x0)
            cy = y0 + frac * (y1 - y0)
            px = cx + starts[k, 0] + s * (ends[k, 0] - starts[k, 0])
            py = cy + starts[k, 1] + s * (ends[k, 1] - starts[k, 1])
            pol = int(sh.leading_polarity) if vn > 0 else 1 - int(sh.leading_polarity)
            out.append((times, np.floor(px), np.floor(py), np.full(times.size, pol)))
    return out


def generate(script: SceneScript) -> tuple[EventArray, list[GroundTruthTrack]]:
    """Time-sorted events plus analytic per-object boxes sampled at ``gt_rate_hz``."""
    script.validate()
    geo = script.geometry
    seeds = np.random.SeedSequence(script.seed).spawn(len(script.shapes) + 1)
    parts = []
    for sh, ss in zip(script.shapes, seeds):
        for times, px, py, pol in _shape_events(sh, script, np.random.default_rng(ss)):
            mask = (px >= 0) & (px < geo.w) & (py >= 0) & (py < geo.h)
            for a, b in sh.hidden:
                mask &= ~((times >= a) & (times < b))
            parts.append((times[mask], px[mask], py[mask], pol[mask]))
    if script.noise_rate > 0:
        rng = np.random.default_rng(seeds[-1])
        n = rng.poisson(script.noise_rate * script.duration)
        parts.append(
            (
                rng.random(n) * script.duration,
                rng.integers(0, geo.w, n).astype(float),
                rng.integers(0, geo.h, n).astype(float),
                rng.integers(0, 2, n),
            )
        )
    if parts:
        t = np.rint(np.concatenate([p[0] for p in parts]) * 1e6).astype(np.int64)
        order = np.argsort(t, kind="stable")
        events = EventArray(
            t[order],
            np.concatenate([p[1] for p in parts])[order],
            np.concatenate([p[2] for p in parts])[order],
            np.concatenate([p[3] for p in parts])[order],
        )
    else:
        events = EventArray.empty()

    gt_times = np.arange(0.0, script.duration + 0.5 / script.gt_rate_hz, 1.0 / script.gt_rate_hz)
    tracks = []
    for sh in script.shapes:
        tr = GroundTruthTrack(sh.object_id)
        for t in gt_times.tolist():
            b = sh.box_at(t).clip(geo)
            if b is not None:
                tr.times.append(round(t, 6))
                tr.boxes.append(b)
        tracks.append(tr)
    return events, tracks


def square_scene(
    speed: float = 60.0,
    size: float = 30.0,
    duration: float = 1.0,
    direction: tuple[float, float] = (0.8, 0.6),
    start: tuple[float, float] = (60.0, 50.0),
    edge_density: float = 1.0,
    hidden: list[tuple[float, float]] | None = None,
    seed: int = 0,
    noise_rate: float = 0.0,
    geometry: SensorGeometry = SensorGeometry(),
) -> SceneScript:
    """A square translating at constant velocity ``speed * direction`` px/s."""
    dx, dy = direction
    norm = float(np.hypot(dx, dy))
    vx, vy = speed * dx / norm, speed * dy / norm
    sx, sy = start
    sh = Shape.rect(
        size, size, [(0.0, sx, sy), (duration, sx + vx * duration, sy + vy * duration)],
        edge_density=edge_density, hidden=list(hidden or []),
    )
    return SceneScript(geometry, duration, [sh], noise_rate, seed)


# ---------------------------------------------------------------------------
# script files


def script_to_dict(script: SceneScript) -> dict:
    return {
        "width": script.geometry.w,
        "height": script.geometry.h,
        "duration": script.duration,
        "noise_rate": script.noise_rate,
        "seed": script.seed,
        "gt_rate_hz": script.gt_rate_hz,
        "shapes": [
            {
                "id": sh.object_id,
                "vertices": [list(v) for v in sh.vertices],
                "waypoints": [list(w) for w in sh.waypoints],
                "edge_density": sh.edge_density,
                "leading_polarity": "on" if sh.leading_polarity == Polarity.ON else "off",
                "hidden": [list(h) for h in sh.hidden],
            }
            for sh in script.shapes
        ],
    }


def script_from_dict(doc: dict) -> SceneScript:
    shapes = []
    for i, s in enumerate(doc.get("shapes", [])):
        kw = dict(
            edge_density=float(s.get("edge_density", 1.0)),
            object_id=int(s.get("id", i)),
            leading_polarity=Polarity.OFF if s.get("leading_polarity", "on") == "off" else Polarity.ON,
            hidden=[tuple(h) for h in s.get("hidden", [])],
        )
        waypoints = [tuple(w) for w in s["waypoints"]]
        if "vertices" in s:
            shapes.append(Shape([tuple(v) for v in s["vertices"]], waypoints, **kw))
        elif "size" in s:
            shapes.append(Shape.rect(s["size"][0], s["size"][1], waypoints, **kw))
        else:
            raise ScriptError(f"shape {i}: needs 'vertices' or 'size'")
    return SceneScript(
        SensorGeometry(int(doc.get("width", 240)), int(doc.get("height", 180))),
        float(doc["duration"]),
        shapes,
        float(doc.get("noise_rate", 0.0)),
        int(doc.get("seed", 0)),
        float(doc.get("gt_rate_hz", 1000.0)),
    )


def load_script(path: str | os.PathLike) -> SceneScript:
    with open(path, encoding="utf-8") as fh:
        return script_from_dict(json.load(fh))


def save_script(script: SceneScript, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(script_to_dict(script), fh, indent=2)
        fh.write("\n")
