import io
import json
import subprocess
import sys

import numpy as np
import pytest

from atsltd.cli import main
from atsltd.dump import read_ppm
from atsltd.events import GroundTruthTrack, parse_ground_truth, write_events, write_ground_truth
from atsltd.boxes import BoundingBox
from atsltd.track import iou, read_results

from test_surface import _even_stream


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth")
    assert run("synth", "--out", out, "--speed", 60, "--seed", 5) == 0
    return out


def test_help_lists_defaults(capsys):
    for cmd in ("calibrate", "track", "eval", "render", "synth", "convert", "benchmark"):
        with pytest.raises(SystemExit) as exc:
            main([cmd, "--help"])
        assert exc.value.code == 0
        text = " ".join(capsys.readouterr().out.split())
        for fragment in ("[0.0832, 0.0927]", "tau 1.5", "lambda 0.7", "mu 0.3", "max_boxes 1000",
                         "min_box_area 100", "45x60"):
            assert fragment in text, (cmd, fragment)


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "atsltd", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "track" in res.stdout


def test_synth_outputs(synth_dir):
    assert {p.name for p in synth_dir.iterdir()} == {"events.txt", "gt.csv", "script.json"}
    assert not [p for p in synth_dir.parent.iterdir() if ".staging-" in p.name]


# ---------------------------------------------------------------------------
# calibrate


def test_calibrate_from_stdin_stats(tmp_path, monkeypatch, capsys):
    monkeypatch.setattr(sys, "stdin", io.StringIO("100 0.08795 0.02394\n"))
    assert run("calibrate", "--stats", "-", "--out", tmp_path) == 0
    doc = json.loads((tmp_path / "calibration.json").read_text())
    assert (round(doc["alpha"], 4), round(doc["beta"], 4)) == (0.0832, 0.0927)
    assert "alpha=0.083200" in capsys.readouterr().out


def test_calibrate_single_sample_fails(tmp_path):
    (tmp_path / "s.txt").write_text("0.1\n")
    assert run("calibrate", "--samples", tmp_path / "s.txt", "--out", tmp_path / "o") != 0
    assert not (tmp_path / "o").exists()


def test_calibrate_smaller_omega_is_wider(tmp_path):
    stats = "100 0.08795 0.02394"
    assert run("calibrate", "--stats", stats, "--out", tmp_path / "a") == 0
    assert run("calibrate", "--stats", stats, "--omega", 0.01, "--out", tmp_path / "b") == 0
    a = json.loads((tmp_path / "a" / "calibration.json").read_text())
    b = json.loads((tmp_path / "b" / "calibration.json").read_text())
    assert b["alpha"] < a["alpha"] and b["beta"] > a["beta"]


def test_calibrate_needs_one_source(tmp_path):
    assert run("calibrate", "--out", tmp_path) == 2


def test_calibrate_from_events(synth_dir, tmp_path):
    assert run("calibrate", "--events", synth_dir / "events.txt", "--window-ms", 66, "--out", tmp_path) == 0
    doc = json.loads((tmp_path / "calibration.json").read_text())
    assert 0 < doc["alpha"] < doc["beta"]


# ---------------------------------------------------------------------------
# convert


def test_ftw_27ms_gives_three_pairs(tmp_path):
    path = tmp_path / "ev.txt"
    write_events(_even_stream(27_000), path)
    assert run("convert", "--events", path, "--mode", "ftw", "--window-ms", 9, "--out", tmp_path / "o") == 0
    names = sorted(p.name for p in (tmp_path / "o").iterdir())
    assert len([n for n in names if n.endswith("_on.pgm")]) == 3
    assert len([n for n in names if n.endswith("_off.pgm")]) == 3


def test_fast_stream_gives_more_frames(tmp_path):
    counts = {}
    for speed in (40, 80):
        d = tmp_path / f"s{speed}"
        assert run("synth", "--out", d, "--speed", speed, "--seed", 1) == 0
        assert run("convert", "--events", d / "events.txt", "--out", d / "frames",
                   "--set", "interval.source=calibrate", "--set", "interval.window_ms=66") == 0
        counts[speed] = len(list((d / "frames").glob("*.json")))
    assert counts[80] > counts[40] > 0


def test_invalid_mode_is_usage_error(tmp_path, synth_dir):
    assert run("convert", "--events", synth_dir / "events.txt", "--mode", "movie", "--out", tmp_path) == 2


# ---------------------------------------------------------------------------
# track / eval / render


@pytest.fixture(scope="module")
def tracked(synth_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("track")
    assert run("track", "--events", synth_dir / "events.txt", "--gt", synth_dir / "gt.csv", "--out", out,
               "--dump-frames") == 0
    return out


def test_track_follows_square(synth_dir, tracked):
    rows = read_results(tracked / "results.csv")
    (gt,) = parse_ground_truth(synth_dir / "gt.csv")
    assert np.mean([iou(r.box, gt.box_at(r.t_end)) for r in rows]) >= 0.7


def test_dump_frames_one_pair_per_frame(tracked):
    rows = read_results(tracked / "results.csv")
    frames = tracked / "frames"
    assert len(list(frames.glob("*_on.pgm"))) == len(list(frames.glob("*_off.pgm"))) == len(rows)
    assert len(list(frames.glob("frame_*.json"))) == len(rows)


def test_track_with_explicit_box(synth_dir, tmp_path):
    assert run("track", "--events", synth_dir / "events.txt", "--box", "45,41,30,30", "--out", tmp_path) == 0
    assert read_results(tmp_path / "results.csv")
    assert run("track", "--events", synth_dir / "events.txt", "--box", "1,2,3", "--out", tmp_path / "x") == 2


def test_missing_events_leaves_nothing(tmp_path):
    out = tmp_path / "out"
    assert run("track", "--events", tmp_path / "nope.txt", "--box", "1,1,20,20", "--out", out) == 1
    assert list(tmp_path.iterdir()) == []


def _results_csv(path, boxes, t_end):
    lines = ["frame_index,t_start,t_end,object_id,x,y,w,h,iou_prev,mode"]
    for i, (b, t) in enumerate(zip(boxes, t_end)):
        lines.append(f"{i},{t - 0.01:.6f},{t:.6f},0,{b.x},{b.y},{b.w},{b.h},1.0,tracking")
    path.write_text("\n".join(lines) + "\n")


@pytest.mark.parametrize("boxes,expected", [
    ([BoundingBox(10, 10, 20, 20)] * 4, 1.0),
    ([BoundingBox(100, 100, 20, 20)] * 4, 0.0),
    ([BoundingBox(10, 10, 20, 20), BoundingBox(100, 100, 20, 20)] * 2, 0.5),
])
def test_eval_examples(tmp_path, capsys, boxes, expected):
    gt = GroundTruthTrack(0, [0.0, 1.0], [BoundingBox(10, 10, 20, 20)] * 2)
    write_ground_truth([gt], tmp_path / "gt.csv")
    _results_csv(tmp_path / "r.csv", boxes, [0.1, 0.2, 0.3, 0.4])
    assert run("eval", "--results", tmp_path / "r.csv", "--gt", tmp_path / "gt.csv", "--out", tmp_path / "o") == 0
    doc = json.loads((tmp_path / "o" / "report.json").read_text())
    assert doc["ap"] == pytest.approx(expected)
    assert f"AP={expected:.4f}" in capsys.readouterr().out


def test_eval_protocol_on_events(synth_dir, tmp_path):
    assert run("eval", "--events", synth_dir / "events.txt", "--gt", synth_dir / "gt.csv", "--out", tmp_path,
               "--n-rep", 2) == 0
    doc = json.loads((tmp_path / "report.json").read_text())
    assert doc["ar"] == 1.0 and doc["ap"] >= 0.7


def test_render_box_position(tmp_path):
    _results_csv(tmp_path / "r.csv", [BoundingBox(10, 20, 30, 40)], [0.1])
    assert run("render", "--results", tmp_path / "r.csv", "--out", tmp_path / "o") == 0
    img = read_ppm(tmp_path / "o" / "render_000000.ppm")
    ys, xs = np.nonzero(img.any(axis=2))
    assert (xs.min(), ys.min(), xs.max() - xs.min() + 1, ys.max() - ys.min() + 1) == (10, 20, 30, 40)


def test_render_recovery_style_differs(tmp_path):
    path = tmp_path / "r.csv"
    _results_csv(path, [BoundingBox(10, 20, 30, 40)] * 2, [0.1, 0.2])
    lines = path.read_text().splitlines()
    lines[2] = lines[2].replace("tracking", "recovering")
    path.write_text("\n".join(lines) + "\n")
    assert run("render", "--results", path, "--out", tmp_path / "o") == 0
    a = read_ppm(tmp_path / "o" / "render_000000.ppm").any(axis=2).sum()
    b = read_ppm(tmp_path / "o" / "render_000001.ppm").any(axis=2).sum()
    assert 0 < b < a


def test_render_with_frames(tracked, tmp_path):
    common = ("render", "--results", tracked / "results.csv", "--frames", tracked / "frames")
    assert run(*common, "--out", tmp_path / "a") == 0
    assert run(*common, "--workers", 3, "--out", tmp_path / "b") == 0
    a = sorted((tmp_path / "a").glob("render_*.ppm"))
    assert len(a) == len(read_results(tracked / "results.csv"))
    assert [p.read_bytes() for p in a] == [p.read_bytes() for p in sorted((tmp_path / "b").glob("render_*.ppm"))]


def test_render_empty_results(tmp_path):
    _results_csv(tmp_path / "r.csv", [], [])
    assert run("render", "--results", tmp_path / "r.csv", "--out", tmp_path / "o") == 0
    assert list((tmp_path / "o").iterdir()) == []


def test_config_file_and_bad_key(tmp_path, synth_dir):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("tracker.mu = 0.25\n")
    assert run("track", "--config", cfg, "--events", synth_dir / "events.txt", "--gt", synth_dir / "gt.csv",
               "--out", tmp_path / "o") == 0
    cfg.write_text("tracker.nope = 1\n")
    assert run("track", "--config", cfg, "--events", synth_dir / "events.txt", "--gt", synth_dir / "gt.csv",
               "--out", tmp_path / "p") == 1
    assert not (tmp_path / "p").exists()
