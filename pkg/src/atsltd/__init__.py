"""Adaptive time-surface event-to-frame conversion and event-based object tracking."""

from types import ModuleType as _ModuleType

from .boxes import BoundingBox, SensorGeometry
from .detect import DetectorConfig, Proposal, SearchRegion, phi, propose, refine, refine_score
from .eval import EvalConfig, EvalReport, average_precision, average_robustness, evaluate_results, run_protocol
from .events import (
    Event, EventArray, GroundTruthTrack, Polarity, iter_event_chunks, parse_event_stream, parse_ground_truth,
    read_events, write_events, write_ground_truth,
)
from .nzge import (
    DEFAULT_INTERVAL, CalibrationSet, ConfidenceInterval, EntropyMap, GridSpec, calibrate_interval, entropy_map,
    interval_from_stats, nzge, patch_entropy,
)
from .surface import (
    AdaptiveConverter, AtslTdFrame, Surface, calibrate_from_stream, convert_atsltd, convert_fixed_time_window,
)
from .synth import SceneScript, Shape, generate, square_scene
from .track import PipelineConfig, TrackerConfig, TrackState, iou, track_frames, track_stream

__version__ = "0.1.0"

__all__ = sorted(
    name for name, value in globals().items()
    if not name.startswith("_") and not isinstance(value, _ModuleType)
)
