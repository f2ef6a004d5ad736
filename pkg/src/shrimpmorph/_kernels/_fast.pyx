# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot raster kernels.

Same contracts as ``numpy_backend``; see that module for documentation.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log

cnp.import_array()


def render_gaussians(object centers_in, double sigma, int height, int width):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] centers = np.ascontiguousarray(
        centers_in, dtype=np.float64)
    cdef int n = centers.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=3] out = np.empty(
        (height, width, n), dtype=np.float64)
    cdef double inv = 1.0 / (2.0 * sigma * sigma)
    cdef int y, x, k
    cdef double cx, cy, dx, dy
    for k in range(n):
        cx = centers[k, 0]
        cy = centers[k, 1]
        for y in range(height):
            dy = y - cy
            for x in range(width):
                dx = x - cx
                out[y, x, k] = exp(-(dx * dx + dy * dy) * inv)
    return out


cdef double _axis_offset(double left, double center, double right,
                         bint has_l, bint has_r):
    cdef double ll, lc, lr, denom, off, lval, rval
    if has_l and has_r and left > 0.0 and center > 0.0 and right > 0.0:
        ll = log(left)
        lc = log(center)
        lr = log(right)
        denom = ll - 2.0 * lc + lr
        if denom < 0.0:
            off = 0.5 * (ll - lr) / denom
            if off > 0.5:
                off = 0.5
            elif off < -0.5:
                off = -0.5
            return off
    lval = left if has_l else -1e308
    rval = right if has_r else -1e308
    if rval > lval:
        return 0.25
    if lval > rval:
        return -0.25
    return 0.0


def decode_peaks(object maps_in):
    cdef cnp.ndarray[cnp.float64_t, ndim=3] maps = np.ascontiguousarray(
        maps_in, dtype=np.float64)
    cdef int h = maps.shape[0]
    cdef int w = maps.shape[1]
    cdef int n = maps.shape[2]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((n, 2), dtype=np.float64)
    cdef int k, y, x, ry, rx
    cdef double best, v
    for k in range(n):
        best = maps[0, 0, k]
        ry = 0
        rx = 0
        for y in range(h):
            for x in range(w):
                v = maps[y, x, k]
                if v > best:
                    best = v
                    ry = y
                    rx = x
        out[k, 0] = rx + _axis_offset(
            maps[ry, rx - 1, k] if rx > 0 else 0.0,
            maps[ry, rx, k],
            maps[ry, rx + 1, k] if rx + 1 < w else 0.0,
            rx > 0, rx + 1 < w)
        out[k, 1] = ry + _axis_offset(
            maps[ry - 1, rx, k] if ry > 0 else 0.0,
            maps[ry, rx, k],
            maps[ry + 1, rx, k] if ry + 1 < h else 0.0,
            ry > 0, ry + 1 < h)
    return out
