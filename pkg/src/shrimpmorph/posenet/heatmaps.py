"""Heatmap target rendering and keypoint decoding."""

from __future__ import annotations

import numpy as np

from .. import _kernels
from ..errors import OutOfBounds
from ..skeleton import Keypoint, RostrumState, View, VirtualSkeleton
from .config import HEATMAP_DOWNSCALE, PoseNetConfig


def gaussian_target(skel: VirtualSkeleton, config: PoseNetConfig) -> np.ndarray:
    """One Gaussian per keypoint, centered at coordinate/4, peak value 1.

    Returns (H/4, W/4, N_k) float64. Raises OutOfBounds for coordinates
    outside the input image.
    """
    kps = sorted(skel.keypoints, key=lambda k: k.index)
    if len(kps) != config.num_keypoints:
        raise OutOfBounds(
            f"skeleton has {len(kps)} keypoints, config expects {config.num_keypoints}"
        )
    centers = np.empty((len(kps), 2))
    for i, kp in enumerate(kps):
        if not (0.0 <= kp.x < config.input_width and 0.0 <= kp.y < config.input_height):
            raise OutOfBounds(f"keypoint {kp.index} at ({kp.x}, {kp.y}) outside image")
        centers[i] = (kp.x / HEATMAP_DOWNSCALE, kp.y / HEATMAP_DOWNSCALE)
    return _kernels.render_gaussians(
        centers, config.heatmap_sigma, config.heatmap_height, config.heatmap_width
    )


def extract_keypoints(
    heatmaps: np.ndarray, config: PoseNetConfig, view: View = View.LATERAL
) -> VirtualSkeleton:
    """Decode peak locations back to input-pixel coordinates.

    Argmax (row-major tie-break) with sub-cell refinement; see the kernel
    docstring for the refinement rule. All decoded keypoints are visible.
    """
    peaks = _kernels.decode_peaks(np.asarray(heatmaps, dtype=np.float64))
    n = peaks.shape[0]
    if n not in (22, 23):
        raise OutOfBounds(f"{n} heatmap channels do not form a skeleton variant")
    rostrum = RostrumState.INTACT if n == 23 else RostrumState.BROKEN
    start = 1 if n == 23 else 2
    kps = tuple(
        Keypoint(
            index=start + i,
            x=float(peaks[i, 0] * HEATMAP_DOWNSCALE),
            y=float(peaks[i, 1] * HEATMAP_DOWNSCALE),
            visible=True,
        )
        for i in range(n)
    )
    return VirtualSkeleton(view=view, rostrum=rostrum, keypoints=kps)
