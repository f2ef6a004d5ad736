"""Vectorized numpy implementations of the hot raster kernels.

These are the reference implementations; the Cython build in ``_fast.pyx``
must agree with them to float64 rounding on the same inputs.
"""

from __future__ import annotations

import numpy as np


def render_gaussians(centers: np.ndarray, sigma: float, height: int, width: int) -> np.ndarray:
    """Stack of unnormalized Gaussians, one map per center.

    centers: (N, 2) array of (x, y) in map coordinates. Returns
    (height, width, N) float64 with peak value 1 at the exact center.
    """
    centers = np.asarray(centers, dtype=np.float64)
    ys = np.arange(height, dtype=np.float64)[:, None, None]
    xs = np.arange(width, dtype=np.float64)[None, :, None]
    dx = xs - centers[None, None, :, 0]
    dy = ys - centers[None, None, :, 1]
    return np.exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma))


def decode_peaks(maps: np.ndarray) -> np.ndarray:
    """Sub-cell peak locations for a (H, W, N) heatmap stack.

    Row-major argmax with log-parabolic refinement along each axis; falls
    back to a quarter-cell shift toward the larger neighbor when the
    three-point log fit is unusable (border cells, non-positive values,
    non-concave triples). Returns (N, 2) float64 (x, y) in map coordinates.
    """
    maps = np.asarray(maps, dtype=np.float64)
    h, w, n = maps.shape
    out = np.empty((n, 2), dtype=np.float64)
    for k in range(n):
        m = maps[:, :, k]
        flat = int(np.argmax(m))
        ry, rx = divmod(flat, w)
        out[k, 0] = rx + _axis_offset(m[ry, max(rx - 1, 0)] if rx > 0 else np.nan,
                                      m[ry, rx],
                                      m[ry, rx + 1] if rx + 1 < w else np.nan)
        out[k, 1] = ry + _axis_offset(m[ry - 1, rx] if ry > 0 else np.nan,
                                      m[ry, rx],
                                      m[ry + 1, rx] if ry + 1 < h else np.nan)
    return out


def _axis_offset(left: float, center: float, right: float) -> float:
    has_l = not np.isnan(left)
    has_r = not np.isnan(right)
    if has_l and has_r and left > 0.0 and center > 0.0 and right > 0.0:
        ll, lc, lr = np.log(left), np.log(center), np.log(right)
        denom = ll - 2.0 * lc + lr
        if denom < 0.0:
            off = 0.5 * (ll - lr) / denom
            return float(np.clip(off, -0.5, 0.5))
    lval = left if has_l else -np.inf
    rval = right if has_r else -np.inf
    if rval > lval:
        return 0.25
    if lval > rval:
        return -0.25
    return 0.0
