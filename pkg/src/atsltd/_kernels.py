"""Compiled inner loops for surface accumulation and incremental grid entropy.

Surface layout: ``set_time[channel, row, col]`` int64 microseconds, ``EMPTY`` when
the pixel has not fired in the current frame. ``touched`` lists flat indices
``(channel * h + row) * w + col`` of pixels set in the current frame, so render
and reset cost is proportional to them.

Grid cells are addressed as ``g = channel * n_cells + cell``. Two lookup tables
replace divisions by runtime sizes, which are slow on the hot path:
``cell_of[row * w + col]`` is the cell containing a pixel (-1 outside the grid)
and ``cell_origin[cell]`` is the flat index of its top-left pixel.

Cell entropies are int64 fixed point (``2**-SHARE_BITS`` units) so running
totals are exact under any update order.

``sstate`` (int64): [frame_start, last_t, event_count, n_touched, eps]
``gparams`` (int64): [r, cadence, max_open_us]
``gstate`` (int64): [n_dirty, since_check, n_grid, n_confirmations, total]
``fstate`` (float64): [alpha, nzge_at_cut]
"""

import numpy as np
from numba import njit

EMPTY = np.int64(-(1 << 62))

S_FRAME_START = 0
S_LAST_T = 1
S_COUNT = 2
S_TOUCHED = 3
S_EPS = 4

G_DIRTY = 0
G_SINCE = 1
G_NGRID = 2
G_CONFIRMS = 3
G_TOTAL = 4

RUN_DONE = 0
RUN_CUT = 1
RUN_TIMEOUT = 2
RUN_ORDER = 3

# fixed-point scale of entropies: value = integer * 2**-SHARE_BITS
SHARE_BITS = 44


@njit(cache=True, inline="always")
def level(st, now, t0, eps):
    """round_half_up(255 * (st - t0 + eps) / (now - t0 + eps)), exact in integers."""
    a = st - t0 + eps
    b = now - t0 + eps
    return (510 * a + b) // (2 * b)


@njit(cache=True, inline="always")
def _level_fast(st, base, b, den, inv):
    # level() with the division replaced by a reciprocal multiply; the integer
    # fix-up makes the quotient exact (the float estimate is off by at most one).
    # base = t0 - eps, b = now - base, den = 2 * b, inv = 1 / den.
    num = 510 * (st - base) + b
    q = np.int64(num * inv)
    if q * den > num:
        q -= 1
    elif (q + 1) * den <= num:
        q += 1
    return q


@njit(cache=True)
def apply_events(t, x, y, p, i0, i1, set_time, touched, sstate):
    """Accumulate events ``[i0, i1)``; returns the index of a regressing event or -1."""
    h = set_time.shape[1]
    w = set_time.shape[2]
    st = set_time.reshape(-1)
    last = sstate[S_LAST_T]
    nt = sstate[S_TOUCHED]
    for i in range(i0, i1):
        ti = t[i]
        if ti < last:
            sstate[S_LAST_T] = last
            sstate[S_TOUCHED] = nt
            sstate[S_COUNT] += i - i0
            return i
        f = (p[i] * h + y[i]) * w + x[i]
        if st[f] == EMPTY:
            touched[nt] = f
            nt += 1
        st[f] = ti
        last = ti
    sstate[S_LAST_T] = last
    sstate[S_TOUCHED] = nt
    sstate[S_COUNT] += i1 - i0
    return -1


@njit(cache=True)
def render(set_time, touched, sstate, out):
    """Write 8-bit intensities of both channels into ``out`` (zeroed here)."""
    out[:] = 0
    st = set_time.reshape(-1)
    flat = out.reshape(-1)
    base = sstate[S_FRAME_START] - sstate[S_EPS]
    b = sstate[S_LAST_T] - base
    den = 2 * b
    inv = 1.0 / den
    for k in range(sstate[S_TOUCHED]):
        f = touched[k]
        flat[f] = _level_fast(st[f], base, b, den, inv)


@njit(cache=True)
def reset(set_time, touched, sstate, new_start):
    st = set_time.reshape(-1)
    for k in range(sstate[S_TOUCHED]):
        st[touched[k]] = EMPTY
    sstate[S_TOUCHED] = 0
    sstate[S_COUNT] = 0
    sstate[S_FRAME_START] = new_start
    if sstate[S_LAST_T] < new_start:
        sstate[S_LAST_T] = new_start


def make_scratch(n: int):
    """Work arrays for the entropy kernels on ``n``-pixel cells: (levels, histogram, set times)."""
    return np.zeros(n, np.uint8), np.zeros(256, np.int32), np.zeros(n, np.int64)


@njit(cache=True, inline="always")
def levels_entropy(levels, n, shares, hist):
    """Fixed-point entropy of the 8-bit ``levels[:n]``; ``hist`` is zero on entry and exit.

    Each pixel adds ``shares[count of its level]``. Integer addition is
    associative, so the result does not depend on pixel order.
    """
    for i in range(n):
        hist[levels[i]] += 1
    s = np.int64(0)
    for i in range(n):
        s += shares[hist[levels[i]]]
    for i in range(n):
        hist[levels[i]] = 0
    return s


@njit(cache=True, inline="always")
def cell_entropy(st, origin, r, w, sstate, shares, scratch):
    """Fixed-point entropy of the ``r x r`` cell whose top-left flat index is ``origin``.

    Set pixels are compacted first and empty ones are counted as level 0 in one
    step: cells in a young frame hold few events, and repeated increments of
    the same histogram bin serialize.
    """
    levels, hist, vals = scratch
    base = sstate[S_FRAME_START] - sstate[S_EPS]
    b = sstate[S_LAST_T] - base
    den = 2 * b
    inv = 1.0 / den
    k = 0
    for dy in range(r):
        row = origin + dy * w
        for dx in range(r):
            v = st[row + dx]
            vals[k] = v
            k += v != EMPTY
    for i in range(k):
        levels[i] = _level_fast(vals[i], base, b, den, inv)
    for i in range(k):
        hist[levels[i]] += 1
    n_empty = r * r - k
    hist[0] += n_empty
    s = n_empty * shares[hist[0]]
    for i in range(k):
        s += shares[hist[levels[i]]]
    for i in range(k):
        hist[levels[i]] = 0
    hist[0] = 0
    return s


@njit(cache=True)
def image_entropy_map(img, rows, cols, r, shares, out):
    """Fixed-point per-cell entropy of a 2-D 8-bit image over a ``rows x cols`` grid of ``r x r`` cells."""
    levels = np.zeros(r * r, np.uint8)
    hist = np.zeros(256, np.int32)
    for cy in range(rows):
        for cx in range(cols):
            k = 0
            for dy in range(r):
                for dx in range(r):
                    levels[k] = img[cy * r + dy, cx * r + dx]
                    k += 1
            out[cy, cx] = levels_entropy(levels, r * r, shares, hist)


@njit(cache=True, inline="always")
def _update_cell(g, st, cell_origin, r, w, sstate, gstate, ent, shares, scratch):
    pq = cell_origin.shape[0]
    hi = np.int64(g >= pq)
    c = g - hi * pq
    pair = ent[c] + ent[c + pq]
    e = cell_entropy(st, hi * (st.shape[0] >> 1) + cell_origin[c], r, w, sstate, shares, scratch)
    new = pair - ent[g] + e
    ent[g] = e
    gstate[G_TOTAL] += new - pair
    gstate[G_NGRID] += np.int64(new > 0) - np.int64(pair > 0)


@njit(cache=True, inline="always")
def _nzge(gstate):
    n = gstate[G_NGRID]
    if n == 0:
        return np.nan
    # cells hold the sum over both channels; the mean halves it
    return gstate[G_TOTAL] * 2.0**-SHARE_BITS * 0.5 / n


@njit(cache=True, inline="always")
def _cell_index(f, hw, cell_of, pq):
    hi = np.int64(f >= hw)
    c = cell_of[f - hi * hw]
    return c + hi * pq if c >= 0 else np.int64(-1)


@njit(cache=True)
def exact_nzge(set_time, touched, sstate, gparams, gstate, ent, dirty, dirty_list, n_fresh,
               cell_of, cell_origin, shares, scratch):
    """Bring every occupied cell up to date and return NZGE (NaN if undefined).

    The first ``n_fresh`` cells of ``dirty_list`` were already evaluated at the
    current time and are reused.
    """
    st = set_time.reshape(-1)
    hw = st.shape[0] >> 1
    w = set_time.shape[2]
    r = gparams[0]
    pq = cell_origin.shape[0]
    for k in range(n_fresh):
        dirty[dirty_list[k]] = 2
    for k in range(sstate[S_TOUCHED]):
        g = _cell_index(touched[k], hw, cell_of, pq)
        if g >= 0 and dirty[g] != 2:
            dirty[g] = 2
            _update_cell(g, st, cell_origin, r, w, sstate, gstate, ent, shares, scratch)
    for k in range(sstate[S_TOUCHED]):
        g = _cell_index(touched[k], hw, cell_of, pq)
        if g >= 0:
            dirty[g] = 0
    gstate[G_DIRTY] = 0
    return _nzge(gstate)


@njit(cache=True)
def reset_grid(set_time, touched, sstate, gstate, ent, dirty, cell_of, pq):
    hw = set_time.shape[1] * set_time.shape[2]
    for k in range(sstate[S_TOUCHED]):
        g = _cell_index(touched[k], hw, cell_of, pq)
        if g >= 0:
            ent[g] = 0
            dirty[g] = 0
    gstate[G_DIRTY] = 0
    gstate[G_SINCE] = 0
    gstate[G_NGRID] = 0
    gstate[G_TOTAL] = 0


@njit(cache=True)
def run_adaptive(
    t, x, y, p, i0, i1, set_time, touched, sstate,
    gparams, gstate, fstate, ent, dirty, dirty_list, cell_of, cell_origin, shares, scratch,
):
    """Feed events until a cut is due or the batch is exhausted.

    Returns ``(next_index, status)``. On ``RUN_CUT``/``RUN_TIMEOUT`` the events
    before ``next_index`` belong to the frame being cut and ``fstate[1]`` holds
    its exact NZGE (NaN when undefined).
    """
    h = set_time.shape[1]
    w = set_time.shape[2]
    st = set_time.reshape(-1)
    r = gparams[0]
    cadence = gparams[1]
    max_open = gparams[2]
    pq = cell_origin.shape[0]
    alpha = fstate[0]
    # hot counters live in locals and are synced to the state arrays around checks
    t0 = sstate[S_FRAME_START]
    last = sstate[S_LAST_T]
    count = sstate[S_COUNT]
    nt = sstate[S_TOUCHED]
    nd = gstate[G_DIRTY]
    since = gstate[G_SINCE]
    for i in range(i0, i1):
        ti = t[i]
        if ti < last or (max_open >= 0 and count > 0 and ti - t0 > max_open):
            sstate[S_LAST_T] = last
            sstate[S_COUNT] = count
            sstate[S_TOUCHED] = nt
            gstate[G_DIRTY] = nd
            gstate[G_SINCE] = since
            if ti < last:
                return i, RUN_ORDER
            fstate[1] = exact_nzge(
                set_time, touched, sstate, gparams, gstate, ent, dirty, dirty_list, 0,
                cell_of, cell_origin, shares, scratch,
            )
            return i, RUN_TIMEOUT
        pix = y[i] * w + x[i]
        ch = np.int64(p[i])
        f = ch * (h * w) + pix
        # branch-free appends: the slot past the end is scratch, hence the +1 capacity
        touched[nt] = f
        nt += st[f] == EMPTY
        st[f] = ti
        last = ti
        count += 1
        c = cell_of[pix]
        if c >= 0:
            g = c + ch * pq
            dirty_list[nd] = g
            nd += dirty[g] == 0
            dirty[g] = 1
        since += 1
        if since >= cadence:
            since = 0
            sstate[S_LAST_T] = last
            sstate[S_COUNT] = count
            sstate[S_TOUCHED] = nt
            for k in range(nd):
                g = dirty_list[k]
                dirty[g] = 0
                _update_cell(g, st, cell_origin, r, w, sstate, gstate, ent, shares, scratch)
            n_fresh = nd
            nd = 0
            gstate[G_DIRTY] = 0
            gstate[G_SINCE] = 0
            if gstate[G_NGRID] > 0 and ti > t0 and _nzge(gstate) >= alpha:
                gstate[G_CONFIRMS] += 1
                val = exact_nzge(
                    set_time, touched, sstate, gparams, gstate, ent, dirty, dirty_list, n_fresh,
                    cell_of, cell_origin, shares, scratch,
                )
                if val >= alpha:
                    fstate[1] = val
                    return i + 1, RUN_CUT
    sstate[S_LAST_T] = last
    sstate[S_COUNT] = count
    sstate[S_TOUCHED] = nt
    gstate[G_DIRTY] = nd
    gstate[G_SINCE] = since
    return i1, RUN_DONE


@njit(cache=True)
def collect(set_time, touched, sstate, out_pix, out_lev, offset):
    """Append the flat index and level of every set pixel; returns the new offset."""
    st = set_time.reshape(-1)
    base = sstate[S_FRAME_START] - sstate[S_EPS]
    b = sstate[S_LAST_T] - base
    den = 2 * b
    inv = 1.0 / den
    for k in range(sstate[S_TOUCHED]):
        f = touched[k]
        out_pix[offset + k] = f
        out_lev[offset + k] = _level_fast(st[f], base, b, den, inv)
    return offset + sstate[S_TOUCHED]


@njit(cache=True)
def convert_batch(
    t, x, y, p, i0, i1, set_time, touched, sstate,
    gparams, gstate, fstate, ent, dirty, dirty_list, cell_of, cell_origin, shares, scratch,
    out_pix, out_lev, out_meta, out_nzge,
):
    """Run the adaptive cutter over ``[i0, i1)``, finalizing frames in place.

    Frame ``k`` stores its set pixels in ``out_pix/out_lev[meta[k, 3]:meta[k, 4]]``,
    ``(start, end, count)`` in ``out_meta[k, :3]`` and its exact NZGE in
    ``out_nzge[k]``; the surface then restarts at the frame's end. Stops early
    when the output buffers might not hold another frame.
    Returns ``(next_index, n_frames, status)`` with status ``RUN_DONE`` or
    ``RUN_ORDER``.
    """
    nf = 0
    i = i0
    used = 0
    room = out_pix.shape[0] - set_time.size
    cap = out_meta.shape[0]
    pq = cell_origin.shape[0]
    while i < i1 and nf < cap and used <= room:
        i, status = run_adaptive(
            t, x, y, p, i, i1, set_time, touched, sstate,
            gparams, gstate, fstate, ent, dirty, dirty_list, cell_of, cell_origin, shares, scratch,
        )
        if status == RUN_ORDER:
            return i, nf, status
        if status == RUN_CUT or status == RUN_TIMEOUT:
            out_meta[nf, 0] = sstate[S_FRAME_START]
            out_meta[nf, 1] = sstate[S_LAST_T]
            out_meta[nf, 2] = sstate[S_COUNT]
            out_meta[nf, 3] = used
            used = collect(set_time, touched, sstate, out_pix, out_lev, used)
            out_meta[nf, 4] = used
            out_nzge[nf] = fstate[1]
            reset_grid(set_time, touched, sstate, gstate, ent, dirty, cell_of, pq)
            reset(set_time, touched, sstate, sstate[S_LAST_T])
            nf += 1
    return i, nf, RUN_DONE
