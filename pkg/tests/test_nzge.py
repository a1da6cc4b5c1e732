import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from atsltd._kernels import SHARE_BITS
from atsltd._ttable import T_CRIT_01, T_CRIT_05
from atsltd.boxes import SensorGeometry
from atsltd.nzge import (
    DEFAULT_INTERVAL, CalibrationError, CalibrationSet, ConfidenceInterval, DegenerateIntervalError, EntropyMap,
    GridSpec, GridSpecError, calibrate_interval, channel_entropy_map, entropy_map, entropy_shares, frame_samples,
    interval_from_stats, load_calibration, nzge, patch_entropy, reaches, save_calibration, should_finalize,
    t_critical,
)

from oracles import counter_entropy, grid_nzge

patches = st.lists(st.integers(0, 255), min_size=16, max_size=16).map(lambda v: np.array(v).reshape(4, 4))


def test_constant_patch():
    assert patch_entropy(np.zeros((4, 4))) == 0.0
    assert patch_entropy(np.full((4, 4), 200)) == 0.0


def test_two_equiprobable_levels_is_one_bit():
    p = np.array([0] * 8 + [255] * 8).reshape(4, 4)
    assert patch_entropy(p) == 1.0


def test_fifteen_to_one():
    p = np.array([0] * 15 + [255]).reshape(4, 4)
    expected = counter_entropy([0] * 15 + [255])
    assert patch_entropy(p) == pytest.approx(expected, abs=1e-12)
    assert round(patch_entropy(p), 4) == 0.3373


@given(patches)
def test_patch_entropy_matches_counter(p):
    assert patch_entropy(p) == pytest.approx(counter_entropy(p.ravel().tolist()), abs=1e-12)


@given(patches, st.randoms(use_true_random=False))
def test_bounds_and_permutation_invariance(p, rnd):
    h = patch_entropy(p)
    assert 0 <= h <= math.log2(16) + 1e-12
    flat = p.ravel().tolist()
    rnd.shuffle(flat)
    # exact: the fixed-point sum does not depend on order
    assert patch_entropy(np.array(flat).reshape(4, 4)) == h


def test_other_log_base():
    p = np.array([0] * 8 + [255] * 8).reshape(4, 4)
    assert patch_entropy(p, base=10) == pytest.approx(math.log10(2), abs=1e-12)


def test_shares_table():
    sh = entropy_shares(16)
    assert sh.dtype == np.int64 and not sh.flags.writeable
    # a level seen 8 of 16 times contributes half a bit
    assert 8 * int(sh[8]) == 1 << (SHARE_BITS - 1)
    with pytest.raises(ValueError):
        entropy_shares(16, 1.0)


# ---------------------------------------------------------------------------
# maps


def test_blank_frame():
    em = entropy_map(np.zeros((2, 180, 240), np.uint8), GridSpec())
    assert em.n_grid == 0 and not em.values.any()
    assert nzge(em) is None


def test_single_mixed_cell():
    planes = np.zeros((2, 180, 240), np.uint8)
    planes[1, 8:12, 20:24] = np.array([0] * 8 + [255] * 8).reshape(4, 4)
    em = entropy_map(planes, GridSpec())
    assert em.n_grid == 1
    # On channel 1 bit, Off channel 0 bits: the cell holds their mean
    assert em.values[2, 5] == 0.5
    assert nzge(em) == 0.5


def test_nzge_single_cell_and_mean():
    scale = 1 << SHARE_BITS
    # fixed holds the per-cell channel sum, so a 2-channel map value v is stored as 2v
    one = np.zeros((45, 60), np.int64)
    v = patch_entropy(np.array([0] * 15 + [255]).reshape(4, 4))
    one[3, 3] = round(2 * v * scale)
    assert nzge(EntropyMap(one)) == pytest.approx(v, abs=1e-12)
    two = np.zeros((45, 60), np.int64)
    two[0, 0], two[1, 1] = round(0.4 * scale), round(0.8 * scale)
    assert nzge(EntropyMap(two)) == pytest.approx(0.3, abs=1e-12)


def test_grid_spec_checks():
    assert GridSpec.for_geometry(SensorGeometry(243, 182)) == GridSpec(45, 60, 4)
    with pytest.raises(GridSpecError):
        GridSpec(0, 1, 1)
    with pytest.raises(GridSpecError):
        entropy_map(np.zeros((2, 100, 100), np.uint8), GridSpec())
    with pytest.raises(ValueError):
        channel_entropy_map(np.full((4, 4), 300), GridSpec(1, 1, 4))


def test_map_against_oracle(rng):
    planes = np.zeros((2, 24, 32), np.uint8)
    mask = rng.random(planes.shape) < 0.3
    planes[mask] = rng.integers(1, 256, mask.sum())
    spec = GridSpec(6, 8, 4)
    value, cells = grid_nzge(planes, 6, 8, 4)
    em = entropy_map(planes, spec)
    assert em.values.ravel() == pytest.approx(cells, abs=1e-12)
    assert nzge(em) == pytest.approx(value, abs=1e-12)


@given(st.integers(0, 2**32 - 1), st.integers(-3, 3), st.integers(-3, 3))
def test_grid_shift_invariance(seed, di, dj):
    rng = np.random.default_rng(seed)
    planes = np.zeros((2, 40, 48), np.uint8)
    # content kept 3 cells away from every border so whole-cell shifts never clip it
    inner = planes[:, 12:28, 12:36]
    inner[...] = rng.integers(0, 256, inner.shape) * (rng.random(inner.shape) < 0.4)
    spec = GridSpec(10, 12, 4)
    shifted = np.roll(planes, (4 * di, 4 * dj), axis=(1, 2))
    assert nzge(entropy_map(shifted, spec)) == nzge(entropy_map(planes, spec))


def test_frame_samples_skip_blank():
    blank = np.zeros((2, 8, 8), np.uint8)
    mixed = blank.copy()
    mixed[0, :4, :4] = np.array([0] * 8 + [9] * 8).reshape(4, 4)
    assert frame_samples([blank, mixed], GridSpec(2, 2, 4)) == [0.5]


# ---------------------------------------------------------------------------
# interval


def test_default_interval():
    iv = interval_from_stats(100, 0.08795, 0.02394, 0.05)
    assert (round(iv.alpha, 4), round(iv.beta, 4)) == (0.0832, 0.0927)
    assert round(t_critical(99), 3) == 1.984
    assert (round(DEFAULT_INTERVAL.alpha, 4), round(DEFAULT_INTERVAL.beta, 4)) == (0.0832, 0.0927)


def test_calibrate_from_samples_matches_stats(rng):
    z = rng.standard_normal(100)
    z = (z - z.mean()) / z.std(ddof=1)
    iv = calibrate_interval(CalibrationSet(list(0.08795 + 0.02394 * z)))
    assert (round(iv.alpha, 4), round(iv.beta, 4)) == (0.0832, 0.0927)


def test_calibration_errors():
    with pytest.raises(CalibrationError):
        calibrate_interval(CalibrationSet([0.1]))
    with pytest.raises(DegenerateIntervalError):
        calibrate_interval(CalibrationSet([0.1, 0.1]))
    with pytest.raises(DegenerateIntervalError):
        interval_from_stats(100, 0.08795, 0.0)
    with pytest.raises(CalibrationError):
        interval_from_stats(100, 0.08795, 0.02, omega=1.5)
    with pytest.raises(CalibrationError):
        interval_from_stats(100, 0.08795, 0.02, omega=0.1)
    with pytest.raises(DegenerateIntervalError):
        ConfidenceInterval(0.2, 0.1)


def test_calibration_set_is_live():
    cs = CalibrationSet([1.0, 3.0])
    assert cs.mean == 2.0
    cs.samples.append(5.0)
    assert (cs.n, cs.mean) == (3, 3.0)


@pytest.mark.parametrize("omega,table", [(0.05, T_CRIT_05), (0.01, T_CRIT_01)])
def test_t_table_against_scipy(omega, table):
    assert len(table) == 200
    for df in range(1, 201):
        assert table[df - 1] == pytest.approx(stats.t.ppf(1 - omega / 2, df), abs=5e-6)
    assert t_critical(500, omega) == pytest.approx(stats.norm.ppf(1 - omega / 2), abs=1e-9)


def test_smaller_omega_widens():
    a = interval_from_stats(100, 0.08795, 0.02394, 0.05)
    b = interval_from_stats(100, 0.08795, 0.02394, 0.01)
    assert b.alpha < a.alpha and b.beta > a.beta
    assert b.width / a.width == pytest.approx(T_CRIT_01[98] / T_CRIT_05[98])


@given(st.integers(2, 200))
def test_width_scales_with_root_n(n):
    iv = interval_from_stats(n, 1.0, 0.05)
    assert iv.width * math.sqrt(n) / t_critical(n - 1) == pytest.approx(2 * 0.05)


def test_decision():
    iv = DEFAULT_INTERVAL
    assert reaches(0.085, iv)
    assert not reaches(0.05, iv)
    assert not reaches(None, iv)
    # a check sequence that jumps over the interval cuts on the first value past alpha
    seq = [0.05, 0.080, 0.095]
    assert [reaches(v, iv) for v in seq] == [False, False, True]


def test_should_finalize_on_frames():
    iv = ConfidenceInterval(0.4, 0.6)
    planes = np.zeros((2, 8, 8), np.uint8)
    assert not should_finalize(planes, GridSpec(2, 2, 4), iv)
    planes[0, :4, :4] = np.array([0] * 8 + [9] * 8).reshape(4, 4)
    assert should_finalize(planes, GridSpec(2, 2, 4), iv)


def test_calibration_file_round_trip(tmp_path):
    path = tmp_path / "cal.json"
    save_calibration(path, DEFAULT_INTERVAL, GridSpec(), [0.1, 0.2])
    iv, spec = load_calibration(path)
    assert iv == DEFAULT_INTERVAL and spec == GridSpec()
