"""Compiled counting kernel used by the hot paths (solver, property suites).

Mirrors the reference counter in :mod:`rfdispatch.rainflow` but skips the
per-interval band bookkeeping: it returns cycle depths, directions, kinds,
extreme sample positions, and the junction close events needed by the
dispatch solver.  Equivalence with the reference implementation is covered
by the test suite.
"""

from __future__ import annotations

import numpy as np
from numba import njit

__all__ = ["rainflow_core", "rainflow_depths"]


@njit(cache=True)
def _turning_indices_nb(values):
    n = values.size
    comp = np.empty(n, np.int64)
    c = 1
    comp[0] = 0
    for i in range(1, n):
        if values[i] != values[i - 1]:
            comp[c] = i
            c += 1
    out = np.empty(c, np.int64)
    if c == 1:
        out[0] = comp[0]
        return out
    m = 0
    out[m] = comp[0]
    m += 1
    for j in range(1, c - 1):
        a = values[comp[j]] - values[comp[j - 1]]
        b = values[comp[j + 1]] - values[comp[j]]
        if (a > 0.0 and b < 0.0) or (a < 0.0 and b > 0.0):
            out[m] = comp[j]
            m += 1
    out[m] = comp[c - 1]
    m += 1
    return out[:m]


@njit(cache=True)
def _walk_nb(tv, rid, anchor, end_tp, close_seg, close_level, rising,
             eq_anchor, eq_close, eq_parent, eq_level, eq_rising, neq):
    level = tv[anchor]
    last_seg = close_seg if close_seg >= 0 else end_tp - 1
    exc_anchor = -1
    for k in range(anchor, last_seg + 1):
        if close_seg >= 0 and k == last_seg:
            cap = close_level
        else:
            cap = tv[k + 1]
        if rising:
            extends = cap >= level
        else:
            extends = cap <= level
        if extends:
            if exc_anchor >= 0:
                eq_anchor[neq] = exc_anchor
                eq_close[neq] = k
                eq_parent[neq] = rid
                eq_level[neq] = level
                eq_rising[neq] = 1 if rising else 0
                neq += 1
                exc_anchor = -1
            if cap != level:
                level = cap
        elif exc_anchor < 0:
            exc_anchor = k
    return neq


@njit(cache=True)
def _cross_interval(values, a, b, level, rising):
    if rising:
        for t in range(a, b):
            if values[t] < level < values[t + 1]:
                return t
    else:
        for t in range(a, b):
            if values[t] > level > values[t + 1]:
                return t
    return -1


@njit(cache=True)
def rainflow_core(values):
    """Count cycles of a sample series.

    Returns ``(depths, signs, kinds, peak_sample, valley_sample,
    close_interval, close_member, close_parent)`` where ``signs`` is +1 for
    charge and -1 for discharge, ``kinds`` is 0 for a plain half cycle and
    1 for a full-cycle member, and the ``close_*`` arrays describe junction
    intervals (interval index, closing member record, enclosing record;
    interval is -1 when the rejoin lands exactly on a sample).
    """
    ti = _turning_indices_nb(values)
    n = ti.size
    cap = 2 * n + 8
    depths = np.empty(cap, np.float64)
    signs = np.empty(cap, np.int64)
    kinds = np.empty(cap, np.int64)
    peaks = np.empty(cap, np.int64)
    valleys = np.empty(cap, np.int64)
    nrec = 0

    cl_interval = np.empty(cap, np.int64)
    cl_member = np.empty(cap, np.int64)
    cl_parent = np.empty(cap, np.int64)
    ncl = 0

    if n < 2:
        return (depths[:0], signs[:0], kinds[:0], peaks[:0], valleys[:0],
                cl_interval[:0], cl_member[:0], cl_parent[:0])

    tv = np.empty(n, np.float64)
    for i in range(n):
        tv[i] = values[ti[i]]

    eq_anchor = np.empty(cap, np.int64)
    eq_close = np.empty(cap, np.int64)
    eq_parent = np.empty(cap, np.int64)
    eq_level = np.empty(cap, np.float64)
    eq_rising = np.empty(cap, np.int64)
    neq = 0

    sp_lo = np.empty(n + 2, np.int64)
    sp_hi = np.empty(n + 2, np.int64)
    sp_lo[0] = 0
    sp_hi[0] = n - 1
    nsp = 1

    while nsp > 0:
        nsp -= 1
        lo = sp_lo[nsp]
        hi = sp_hi[nsp]
        if hi - lo < 1:
            continue
        im = lo
        jm = lo
        vmax = tv[lo]
        vmin = tv[lo]
        for k in range(lo + 1, hi + 1):
            v = tv[k]
            if v > vmax:
                vmax = v
                im = k
            if v < vmin:
                vmin = v
                jm = k
        if vmax == vmin:
            continue
        depths[nrec] = vmax - vmin
        kinds[nrec] = 0
        peaks[nrec] = ti[im]
        valleys[nrec] = ti[jm]
        if im < jm:
            signs[nrec] = -1
            neq = _walk_nb(tv, nrec, im, jm, -1, 0.0, False,
                           eq_anchor, eq_close, eq_parent, eq_level, eq_rising, neq)
            nrec += 1
            sp_lo[nsp] = lo
            sp_hi[nsp] = im
            nsp += 1
            sp_lo[nsp] = jm
            sp_hi[nsp] = hi
            nsp += 1
        else:
            signs[nrec] = 1
            neq = _walk_nb(tv, nrec, jm, im, -1, 0.0, True,
                           eq_anchor, eq_close, eq_parent, eq_level, eq_rising, neq)
            nrec += 1
            sp_lo[nsp] = lo
            sp_hi[nsp] = jm
            nsp += 1
            sp_lo[nsp] = im
            sp_hi[nsp] = hi
            nsp += 1

    while neq > 0:
        neq -= 1
        anchor = eq_anchor[neq]
        close_seg = eq_close[neq]
        parent = eq_parent[neq]
        level = eq_level[neq]
        parent_rising = eq_rising[neq] == 1
        first = anchor + 1
        ext = first
        vext = tv[first]
        if parent_rising:
            for k in range(first + 1, close_seg + 1):
                if tv[k] < vext:
                    vext = tv[k]
                    ext = k
            peak_s = ti[anchor]
            valley_s = ti[ext]
        else:
            for k in range(first + 1, close_seg + 1):
                if tv[k] > vext:
                    vext = tv[k]
                    ext = k
            peak_s = ti[ext]
            valley_s = ti[anchor]
        depth = level - vext if parent_rising else vext - level

        depths[nrec] = depth
        signs[nrec] = -1 if parent_rising else 1
        kinds[nrec] = 1
        peaks[nrec] = peak_s
        valleys[nrec] = valley_s
        neq = _walk_nb(tv, nrec, anchor, ext, -1, 0.0, not parent_rising,
                       eq_anchor, eq_close, eq_parent, eq_level, eq_rising, neq)
        nrec += 1

        depths[nrec] = depth
        signs[nrec] = 1 if parent_rising else -1
        kinds[nrec] = 1
        peaks[nrec] = peak_s
        valleys[nrec] = valley_s
        neq = _walk_nb(tv, nrec, ext, close_seg, close_seg, level, parent_rising,
                       eq_anchor, eq_close, eq_parent, eq_level, eq_rising, neq)
        cl_interval[ncl] = _cross_interval(values, ti[close_seg], ti[close_seg + 1],
                                           level, parent_rising)
        cl_member[ncl] = nrec
        cl_parent[ncl] = parent
        ncl += 1
        nrec += 1

    return (depths[:nrec], signs[:nrec], kinds[:nrec], peaks[:nrec], valleys[:nrec],
            cl_interval[:ncl], cl_member[:ncl], cl_parent[:ncl])


@njit(cache=True)
def rainflow_depths(values):
    """Depths and signs only (+1 charge, -1 discharge)."""
    depths, signs, _, _, _, _, _, _ = rainflow_core(values)
    return depths, signs
