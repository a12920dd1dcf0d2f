"""Compiled float64 kernels for the backward recursion.

Storage is one flat array; row ``n`` starts at ``off[n]`` and holds columns
``m >= 2^(n+1) - 1`` contiguously, so entry ``(n, m)`` lives at
``off[n] + m - (2^(n+1) - 1)``.  All kernels release the GIL so column tasks
can run on Python threads.
"""

from __future__ import annotations

from numba import njit

BAND_IDENTITY = 0
BAND_RECURSION = 1
BAND_VERIFY = 2


@njit(cache=True, nogil=True)
def deepest_row(m):
    # floor(log2(m + 1)) - 1
    r = -1
    v = m + 1
    while v > 1:
        v >>= 1
        r += 1
    return r


@njit(cache=True, nogil=True)
def convolution(data, off, n, m):
    s = (1 << (n + 1)) - 1
    if m < 2 * s:
        return 0.0
    base = off[n] - s
    if m & 1:
        hi = (m - 1) // 2
    else:
        hi = m // 2 - 1
    acc = 0.0
    for k in range(s, hi + 1):
        acc += data[base + k] * data[base + m - k]
    acc = 2.0 * acc
    if (m & 1) == 0:
        x = data[base + m // 2]
        acc += x * x
    return acc


@njit(cache=True, nogil=True)
def entry(data, off, nrows, n, m):
    s = (1 << (n + 1)) - 1
    j = m - s
    if j == 0:
        b0 = 1.0
    else:
        b0 = data[off[0] - 1 + j]
    up = 0.0
    if n + 1 < nrows:
        s1 = 2 * s + 1
        if m >= s1:
            up = data[off[n + 1] - s1 + m]
    return 0.5 * ((up - convolution(data, off, n, m)) - b0)


@njit(cache=True, nogil=True)
def band_entry(data, off, n, m):
    # same rounding as entry() with up = conv = 0
    j = m - ((1 << (n + 1)) - 1)
    if j == 0:
        b0 = 1.0
    else:
        b0 = data[off[0] - 1 + j]
    return 0.5 * (0.0 - b0)


@njit(cache=True, nogil=True)
def fill_column(data, off, nrows, m, n_hi, n_lo, band):
    """Fill rows n_hi..n_lo (descending) of column m; returns band mismatches."""
    bad = 0
    for n in range(n_hi, n_lo - 1, -1):
        s = (1 << (n + 1)) - 1
        if m <= 2 * s - 1:
            if band == BAND_IDENTITY:
                v = band_entry(data, off, n, m)
            elif band == BAND_RECURSION:
                v = entry(data, off, nrows, n, m)
            else:
                v = entry(data, off, nrows, n, m)
                if v != band_entry(data, off, n, m):
                    bad += 1
        else:
            v = entry(data, off, nrows, n, m)
        data[off[n] - s + m] = v
    return bad


@njit(cache=True, nogil=True)
def fill_columns(data, off, nrows, m0, m1, n_cap, band):
    """Columns m0..m1 left to right, each from min(deepest, n_cap) down to row 0."""
    bad = 0
    for m in range(m0, m1 + 1):
        top = deepest_row(m)
        if top > n_cap:
            top = n_cap
        bad += fill_column(data, off, nrows, m, top, 0, band)
    return bad
