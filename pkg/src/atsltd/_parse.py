"""Compiled text parser for ``t x y p`` event lines.

Blocks handed to :func:`parse_block` must end with a newline. That byte acts as
a sentinel: every scanning loop stops on it, so the loops need no length checks.
"""

import numpy as np
from numba import njit

OK = 0
ERR_MALFORMED = 1
ERR_BOUNDS = 2
ERR_ORDER = 3

_SPACE = 32
_TAB = 9
_CR = 13
_LF = 10
_DOT = 46
_MINUS = 45
_ZERO = 48


@njit(cache=True, inline="always")
def _is_blank(c):
    return c == _SPACE or c == _TAB or c == _CR


@njit(cache=True, inline="always")
def _is_digit(c):
    return np.uint8(c - _ZERO) < 10


@njit(cache=True, inline="always")
def _skip_blanks(buf, i):
    while _is_blank(buf[i]):
        i += 1
    return i


@njit(cache=True, inline="always")
def _parse_int(buf, i):
    i = _skip_blanks(buf, i)
    neg = buf[i] == _MINUS
    if neg:
        i += 1
    start = i
    val = np.int64(0)
    if i + 4 < buf.shape[0]:
        # up to three digits without data-dependent branches: coordinate
        # lengths vary from event to event and would mispredict
        d0 = np.int64(buf[i]) - _ZERO
        d1 = np.int64(buf[i + 1]) - _ZERO
        d2 = np.int64(buf[i + 2]) - _ZERO
        m0 = np.int64(np.uint64(d0) < 10)
        m1 = m0 & np.int64(np.uint64(d1) < 10)
        m2 = m1 & np.int64(np.uint64(d2) < 10)
        val = m0 * d0
        val += m1 * (9 * val + d1)
        val += m2 * (9 * val + d2)
        i += m0 + m1 + m2
    while _is_digit(buf[i]):
        val = val * 10 + (buf[i] - _ZERO)
        i += 1
    ok = i > start and _is_blank(buf[i])
    return (-val if neg else val), i, ok


@njit(cache=True)
def parse_block(buf, w, h, last_t, slack_us, t_out, x_out, y_out, p_out):
    """Parse every line of ``buf`` (which must end with a newline).

    Returns ``(n_events, n_lines, status, bad_line, last_t)``; ``bad_line`` is the
    zero-based line index within the block when ``status != OK``.
    """
    n = buf.shape[0]
    k = 0
    line = 0
    if n == 0:
        return k, line, OK, -1, last_t
    if buf[n - 1] != _LF:
        return k, line, ERR_MALFORMED, 0, last_t
    i = 0
    while i < n:
        i = _skip_blanks(buf, i)
        if buf[i] == _LF:
            i += 1
            line += 1
            continue

        # timestamp: digits [. digits] -> microseconds, half-up at the 7th fraction digit
        ip = np.int64(0)
        start = i
        while _is_digit(buf[i]):
            ip = ip * 10 + (buf[i] - _ZERO)
            i += 1
        ndig = i - start
        frac = np.int64(0)
        nfrac = 0
        round_up = False
        if buf[i] == _DOT:
            i += 1
            if i + 7 < n:
                # the common case, exactly microsecond precision, unrolled
                m = np.int64(1)
                f6 = np.int64(0)
                for j in range(6):
                    d = np.int64(buf[i + j]) - _ZERO
                    m &= np.int64(np.uint64(d) < 10)
                    f6 = f6 * 10 + d
                if m:
                    frac = f6
                    nfrac = 6
                    i += 6
            while nfrac < 6 and _is_digit(buf[i]):
                frac = frac * 10 + (buf[i] - _ZERO)
                nfrac += 1
                i += 1
            ndig += nfrac
            if _is_digit(buf[i]):
                round_up = buf[i] >= _ZERO + 5
                ndig += 1
                i += 1
                while _is_digit(buf[i]):
                    i += 1
        if ndig == 0 or not _is_blank(buf[i]):
            return k, line, ERR_MALFORMED, line, last_t
        while nfrac < 6:
            frac *= 10
            nfrac += 1
        t = ip * 1000000 + frac
        if round_up:
            t += 1

        # x, y: optionally signed integers
        x, i, ok = _parse_int(buf, i)
        if not ok:
            return k, line, ERR_MALFORMED, line, last_t
        y, i, ok = _parse_int(buf, i)
        if not ok:
            return k, line, ERR_MALFORMED, line, last_t

        i = _skip_blanks(buf, i)
        c = buf[i]
        if c != _ZERO and c != _ZERO + 1:
            return k, line, ERR_MALFORMED, line, last_t
        pol = c - _ZERO
        i = _skip_blanks(buf, i + 1)
        if buf[i] != _LF:
            return k, line, ERR_MALFORMED, line, last_t

        if x < 0 or x >= w or y < 0 or y >= h:
            return k, line, ERR_BOUNDS, line, last_t
        if t < last_t:
            if last_t - t > slack_us:
                return k, line, ERR_ORDER, line, last_t
            t = last_t
        last_t = t

        t_out[k] = t
        x_out[k] = x
        y_out[k] = y
        p_out[k] = pol
        k += 1
        i += 1
        line += 1
    return k, line, OK, -1, last_t
