import json

import numpy as np
import pytest

from atsltd.boxes import BoundingBox
from atsltd.dump import (
    DumpFormatError, draw_box, dump_frames, load_frames, read_pgm, read_ppm, render_results, write_pgm, write_ppm,
)
from atsltd.surface import AtslTdFrame
from atsltd.track import Mode, ResultRow


def _frame(index, rng):
    planes = rng.integers(0, 256, (2, 12, 16), dtype=np.uint8)
    return AtslTdFrame(planes, 1000 * index, 1000 * index + 700, 42, 0.0875, index)


def test_netpbm_round_trip(tmp_path, rng):
    g = rng.integers(0, 256, (5, 7), dtype=np.uint8)
    write_pgm(tmp_path / "g.pgm", g)
    assert np.array_equal(read_pgm(tmp_path / "g.pgm"), g)
    c = rng.integers(0, 256, (5, 7, 3), dtype=np.uint8)
    write_ppm(tmp_path / "c.ppm", c)
    assert np.array_equal(read_ppm(tmp_path / "c.ppm"), c)


def test_header_with_comment(tmp_path):
    (tmp_path / "a.pgm").write_bytes(b"P5\n# made by hand\n2 1\n255\n\x01\x02")
    assert read_pgm(tmp_path / "a.pgm").tolist() == [[1, 2]]


@pytest.mark.parametrize("data", [b"P6\n2 1\n255\n\x01\x02", b"P5\n2 1\n65535\n\x01\x02", b"P5\n2 2\n255\n\x01", b"P5\n2"])
def test_bad_images(tmp_path, data):
    (tmp_path / "bad.pgm").write_bytes(data)
    with pytest.raises(DumpFormatError):
        read_pgm(tmp_path / "bad.pgm")


def test_frame_dump_round_trip(tmp_path, rng):
    frames = [_frame(i, rng) for i in range(3)]
    assert dump_frames(frames, tmp_path / "d") == 3
    names = sorted(p.name for p in (tmp_path / "d").iterdir())
    assert names[:3] == ["frame_000000.json", "frame_000000_off.pgm", "frame_000000_on.pgm"]
    assert len(names) == 9
    meta = json.loads((tmp_path / "d" / "frame_000001.json").read_text())
    assert meta == {"index": 1, "start_us": 1000, "end_us": 1700, "event_count": 42, "nzge_at_cut": 0.0875}
    back = load_frames(tmp_path / "d")
    assert [f.index for f in back] == [0, 1, 2]
    assert all(a.same_as(b) for a, b in zip(frames, back))
    with pytest.raises(DumpFormatError):
        load_frames(tmp_path / "missing")


def test_box_pixels():
    img = np.zeros((60, 60, 3), np.uint8)
    draw_box(img, BoundingBox(10, 20, 30, 40), (255, 0, 0))
    ys, xs = np.nonzero(img[..., 0])
    assert (xs.min(), xs.max(), ys.min(), ys.max()) == (10, 39, 20, 59)
    # outline only
    assert img[30, 20, 0] == 0
    assert np.count_nonzero(img[..., 0]) == 2 * 30 + 2 * 40 - 4


def test_dashed_box_has_gaps():
    solid = np.zeros((60, 60, 3), np.uint8)
    dashed = solid.copy()
    draw_box(solid, BoundingBox(5, 5, 30, 30), (0, 255, 0))
    draw_box(dashed, BoundingBox(5, 5, 30, 30), (0, 255, 0), dashed=True)
    n_solid, n_dashed = np.count_nonzero(solid[..., 1]), np.count_nonzero(dashed[..., 1])
    assert 0 < n_dashed < n_solid


def test_box_clipped_at_border():
    img = np.zeros((10, 10, 3), np.uint8)
    draw_box(img, BoundingBox(-5, -5, 30, 30), (9, 9, 9))
    assert not img.any()
    draw_box(img, BoundingBox(5, 5, 30, 30), (9, 9, 9))
    assert img[5, 9, 0] == 9 and img[9, 5, 0] == 9


def test_render_results(tmp_path, rng):
    rows = [
        ResultRow(0, 0.0, 0.001, 0, BoundingBox(2, 2, 6, 6), 1.0, Mode.TRACKING),
        ResultRow(1, 0.001, 0.002, 0, BoundingBox(2, 2, 6, 6), 0.0, Mode.RECOVERING),
    ]
    paths = render_results(rows, {0: _frame(0, rng)}, (12, 16), tmp_path)
    assert [p.name for p in paths] == ["render_000000.ppm", "render_000001.ppm"]
    img = read_ppm(paths[1])
    assert img.shape == (12, 16, 3)
    assert render_results([], {}, (12, 16), tmp_path) == []
