import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from atsltd.boxes import BoundingBox
from atsltd.eval import (
    EvalConfig, EvaluationError, average_precision, average_robustness, evaluate_results, is_success, run_protocol,
)
from atsltd.events import GroundTruthTrack
from atsltd.synth import Shape, generate, square_scene
from atsltd.track import Mode, ResultRow, iou

from oracles import raster_iou

A = BoundingBox(10, 10, 20, 20)
FAR = BoundingBox(100, 100, 20, 20)


def test_ap_examples():
    assert average_precision([A] * 6, [A] * 6) == 1.0
    assert average_precision([FAR] * 6, [A] * 6) == 0.0
    assert average_precision([A, FAR, A, FAR], [A] * 4) == 0.5


def test_ap_mixed_against_raster(rng):
    gt = [(int(x), int(y), 12, 9) for x, y in rng.integers(0, 20, (8, 2))]
    est = [(x + int(d), y, 10, 10) for (x, y, _, _), d in zip(gt, rng.integers(-6, 7, 8))]
    expected = np.mean([raster_iou(e, g) for e, g in zip(est, gt)])
    got = average_precision([BoundingBox(*e) for e in est], [BoundingBox(*g) for g in gt])
    assert got == pytest.approx(expected, abs=1e-12)


def test_ap_skips_unlabelled_frames():
    assert average_precision([A, FAR], [A, None]) == 1.0
    with pytest.raises(EvaluationError):
        average_precision([A], [None])
    with pytest.raises(EvaluationError):
        average_precision([A], [A, A])


def test_ar_examples():
    assert average_robustness([True, True]) == 1.0
    assert average_robustness([True, False]) == 0.5
    assert is_success(0.5) and not is_success(0.4999)
    with pytest.raises(EvaluationError):
        average_robustness([])


@given(st.lists(st.floats(0, 1), min_size=1, max_size=6), st.integers(0, 5), st.floats(0, 1))
def test_ar_monotone_in_ap(aps, k, bump):
    k %= len(aps)
    raised = list(aps)
    raised[k] = max(raised[k], bump)
    assert average_robustness([is_success(a) for a in raised]) >= average_robustness([is_success(a) for a in aps])


def _rows(boxes, oid=0, t0=0.0):
    return [ResultRow(i, t0 + i * 0.01, t0 + (i + 1) * 0.01, oid, b, 1.0, Mode.TRACKING) for i, b in enumerate(boxes)]


def test_evaluate_results_and_time_shift():
    gt_boxes = [BoundingBox(10 + i, 10, 20, 20) for i in range(11)]
    tr = GroundTruthTrack(0, [i * 0.01 for i in range(11)], gt_boxes)
    est = [BoundingBox(10 + i + (i % 3), 10, 20, 20) for i in range(1, 11)]
    rep = evaluate_results(_rows(est), [tr])
    shifted = GroundTruthTrack(0, [5.0 + i * 0.01 for i in range(11)], gt_boxes)
    rep2 = evaluate_results(_rows(est, t0=5.0), [shifted])
    assert rep.ap == pytest.approx(rep2.ap, abs=1e-9)
    assert rep.ar == 1.0 and rep.per_object[0].success
    with pytest.raises(EvaluationError):
        evaluate_results(_rows(est, oid=3), [tr])


def test_report_files(tmp_path):
    tr = GroundTruthTrack(0, [0.0, 1.0], [A, A])
    rep = evaluate_results(_rows([A, FAR]), [tr])
    rep.write_json(tmp_path / "r.json")
    doc = json.loads((tmp_path / "r.json").read_text())
    assert doc["ap"] == 0.5 and doc["ar"] == 1.0
    assert doc["per_object"] == [{"id": 0, "ap": 0.5, "success": True}]
    rep.write_frames_csv(tmp_path / "f.csv")
    assert len((tmp_path / "f.csv").read_text().splitlines()) == 3


# ---------------------------------------------------------------------------
# protocol


@pytest.fixture(scope="module")
def square():
    return generate(square_scene(speed=60, edge_density=1.0, seed=1))


def test_repeats_are_identical(square):
    ev, tracks = square
    rep = run_protocol(ev, tracks, EvalConfig(n_rep=5))
    runs = [f for f in rep.frames]
    per_rep = [[f.iou for f in runs if f.rep == r] for r in range(5)]
    assert all(p == per_rep[0] for p in per_rep)
    assert rep.ar == 1.0 and rep.ap >= 0.7


@pytest.fixture(scope="module")
def occluded():
    # a second shape keeps frames coming while the square is hidden, so the
    # held box drifts off the ground truth for several frames
    sc = square_scene(speed=60, edge_density=1.0, seed=3, hidden=[(0.3, 0.6)], start=(40.0, 40.0))
    sc.shapes.append(Shape.rect(24, 24, [(0.0, 200.0, 40.0), (1.0, 200.0, 150.0)], object_id=1))
    ev, tracks = generate(sc)
    return ev, tracks[:1]


def test_occlusion_reinit_logged_once(occluded):
    ev, tracks = occluded
    with_reinit = run_protocol(ev, tracks, EvalConfig())
    assert len(with_reinit.reinits) == 1
    r = with_reinit.reinits[0]
    assert 0.3 <= r.t <= 0.6
    without = run_protocol(ev, tracks, EvalConfig(reinit_on_failure=False))
    assert without.reinits == []
    assert without.ap <= with_reinit.ap
    assert with_reinit.per_object[0].ap >= without.per_object[0].ap


def test_protocol_errors(square):
    ev, tracks = square
    with pytest.raises(EvaluationError):
        run_protocol(ev, [])
    with pytest.raises(ValueError):
        EvalConfig(n_rep=0)
