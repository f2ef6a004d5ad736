"""Procedural shrimp-like RGB-D samples with exactly known ground truth.

Rendering is deliberately schematic: a curved spine with a smooth
half-thickness profile swept into a silhouette, a thin rostrum spike when the
rostrum is intact, and a depth plane carrying body thickness. Lateral and
dorsal views differ in spine curvature, slenderness and a dorsal mid-stripe,
which keeps the two classes separable without any attempt at realism.

Every sample is a pure function of ``(params, index)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data_io import RgbdRaster, SampleRecord
from .skeleton import (
    Keypoint,
    MeasurementSet,
    RostrumState,
    Unit,
    View,
    VirtualSkeleton,
    extract_pixel_measurements,
)

CAMERA_DISTANCE_MM = 300.0

# Spine stations as fractions of the body axis. Index 1 is the rostrum tip,
# 2 the back of the head, 3-8 segment boundaries, 9 the tail tip.
SPINE_FRACTIONS = (0.0, 0.35, 0.45, 0.55, 0.65, 0.74, 0.83, 0.91, 1.0)
HEAD_STATION = 0.21
BODY_START = 0.08  # silhouette front when the rostrum spike is excluded


@dataclass(frozen=True)
class LabelNoise:
    view_flip_prob: float = 0.0097
    rostrum_flip_prob: float = 0.1246


@dataclass(frozen=True)
class SynthParams:
    seed: int = 0
    image_width: int = 128
    image_height: int = 96
    scale_cm_per_px: float = 0.1
    body_length_range_cm: tuple[float, float] = (7.0, 10.0)
    curvature_range: float = 0.5
    rostrum_break_prob: float = 0.2
    view_mix: float = 0.6  # probability of a lateral sample
    label_noise: LabelNoise = field(default_factory=LabelNoise)
    keypoint_jitter_px: float = 0.0
    background: str = "black"  # "black" or "textured"
    background_seed: int = 0
    rotations: tuple[int, ...] = (0, 90, 180, 270)

    def validate(self) -> None:
        if self.scale_cm_per_px <= 0:
            raise ValueError("scale_cm_per_px must be > 0")
        lo, hi = self.body_length_range_cm
        if not lo < hi:
            raise ValueError("body_length_range_cm must be a nonempty range")
        for name in ("rostrum_break_prob", "view_mix"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        for name in ("view_flip_prob", "rostrum_flip_prob"):
            p = getattr(self.label_noise, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"label_noise.{name} must be in [0, 1]")
        if self.keypoint_jitter_px < 0:
            raise ValueError("keypoint_jitter_px must be >= 0")
        if self.background not in ("black", "textured"):
            raise ValueError(f"unknown background {self.background!r}")
        if any(r not in (0, 90, 180, 270) for r in self.rotations) or not self.rotations:
            raise ValueError("rotations must be a nonempty subset of (0, 90, 180, 270)")


def _half_profile(t: np.ndarray, view: View, length_px: float) -> np.ndarray:
    """Local silhouette half-extent (px) along the body axis."""
    # The front knot stays small enough that the silhouette never reaches past
    # the rostrum tip at t=0, and the tail ends in a blunt uropod fan rather
    # than a needle so only the rostrum forms a thin protrusion.
    if view is View.LATERAL:
        peak = 0.17 * length_px
        knots_t = (BODY_START, 0.20, 0.35, 0.60, 0.85, 1.0)
        knots_v = (0.32, 1.0, 0.88, 0.62, 0.48, 0.38)
    else:
        peak = 0.105 * length_px
        knots_t = (BODY_START, 0.20, 0.35, 0.60, 0.85, 1.0)
        knots_v = (0.45, 1.0, 0.84, 0.58, 0.44, 0.34)
    return peak * np.interp(t, knots_t, knots_v)


def _spine(t: np.ndarray, length_px: float, bend: float) -> tuple[np.ndarray, np.ndarray]:
    """Canonical spine points and unit normals for axis fractions ``t``."""
    x = t * length_px
    amp = bend * length_px / 4.0
    y = amp * np.sin(np.pi * t)
    dy = amp * np.pi * np.cos(np.pi * t)
    tang = np.stack([np.full_like(dy, length_px), dy], axis=-1)
    tang /= np.linalg.norm(tang, axis=-1, keepdims=True)
    normal = np.stack([-tang[:, 1], tang[:, 0]], axis=-1)
    return np.stack([x, y], axis=-1), normal


def _rotate(points: np.ndarray, deg: int) -> np.ndarray:
    if deg == 0:
        return points
    if deg == 90:
        return np.stack([-points[..., 1], points[..., 0]], axis=-1)
    if deg == 180:
        return -points
    return np.stack([points[..., 1], -points[..., 0]], axis=-1)


def generate_sample(params: SynthParams, index: int) -> SampleRecord:
    params.validate()
    rng = np.random.default_rng([params.seed, index])

    view = View.LATERAL if rng.random() < params.view_mix else View.DORSAL
    rostrum = RostrumState.BROKEN if rng.random() < params.rostrum_break_prob else RostrumState.INTACT
    rotation = int(params.rotations[rng.integers(len(params.rotations))])
    body_cm = rng.uniform(*params.body_length_range_cm)
    bend = rng.uniform(-params.curvature_range, params.curvature_range) if view is View.LATERAL else 0.0

    w, h = params.image_width, params.image_height
    axis_extent = w if rotation in (0, 180) else h
    length_px = min(body_cm / params.scale_cm_per_px, 0.80 * axis_extent)

    # Station fractions with a little per-sample wobble on interior points.
    fracs = np.array(SPINE_FRACTIONS)
    fracs[1:-1] += rng.uniform(-0.01, 0.01, size=len(fracs) - 2)

    # Dense samples for rendering, stations for keypoints.
    t_dense = np.linspace(0.0, 1.0, 170)
    body_sel = t_dense >= BODY_START
    spine_d, _ = _spine(t_dense, length_px, bend)
    half_d = _half_profile(t_dense, view, length_px)
    half_d[~body_sel] = 0.0
    if rostrum is RostrumState.INTACT:
        # Thin spike from the head front out to the rostrum tip.
        spike = t_dense < BODY_START + 0.04
        half_d[spike] = np.maximum(half_d[spike], 1.3)

    pair_ts = np.array([HEAD_STATION] + [(fracs[k] + fracs[k + 1]) / 2.0 for k in range(1, 7)])
    spine_kp, _ = _spine(fracs, length_px, bend)
    spine_pair, normal_pair = _spine(pair_ts, length_px, bend)
    half_pair = _half_profile(pair_ts, view, length_px)
    upper = spine_pair + normal_pair * half_pair[:, None]
    lower = spine_pair - normal_pair * half_pair[:, None]

    # Rotate everything and center it on the canvas.
    all_pts = np.concatenate([spine_d, spine_kp, upper, lower])
    all_pts = _rotate(all_pts, rotation)
    nd = len(spine_d)
    pad = np.concatenate([half_d, np.zeros(9 + 14)])
    lo = (all_pts - pad[:, None]).min(axis=0)
    hi = (all_pts + pad[:, None]).max(axis=0)
    center = np.array([w / 2.0, h / 2.0]) + rng.uniform(-4.0, 4.0, size=2)
    shift = center - (lo + hi) / 2.0
    margin = 2.0
    shift = np.maximum(shift, margin - lo)
    shift = np.minimum(shift, np.array([w - margin, h - margin]) - hi)
    all_pts = all_pts + shift

    spine_d = all_pts[:nd]
    spine_kp = all_pts[nd : nd + 9]
    upper = all_pts[nd + 9 : nd + 16]
    lower = all_pts[nd + 16 :]

    raster = _render(params, rng, view, spine_d, half_d, body_sel)

    # Keypoints: longitudinal chain, then transverse pairs (upper, lower).
    kps = []
    start = 0 if rostrum is RostrumState.INTACT else 1
    jitter = params.keypoint_jitter_px
    for i in range(start, 9):
        kps.append((i + 1, spine_kp[i]))
    for k in range(7):
        kps.append((10 + 2 * k, upper[k]))
        kps.append((11 + 2 * k, lower[k]))
    keypoints = []
    for idx, pt in kps:
        x, y = pt
        if jitter > 0:
            x += rng.normal(0.0, jitter)
            y += rng.normal(0.0, jitter)
        keypoints.append(Keypoint(index=idx, x=float(np.clip(x, 0.0, w - 1.0)), y=float(np.clip(y, 0.0, h - 1.0)), visible=True))
    skel = VirtualSkeleton(view=view, rostrum=rostrum, keypoints=tuple(sorted(keypoints, key=lambda k: k.index)))

    px = extract_pixel_measurements(skel)
    gt_cm = MeasurementSet(
        unit=Unit.CENTIMETERS,
        values={k: v * params.scale_cm_per_px for k, v in px.values.items()},
    )

    human_view = view
    if rng.random() < params.label_noise.view_flip_prob:
        human_view = View.DORSAL if view is View.LATERAL else View.LATERAL
    human_rostrum = rostrum
    if rng.random() < params.label_noise.rostrum_flip_prob:
        human_rostrum = (
            RostrumState.BROKEN if rostrum is RostrumState.INTACT else RostrumState.INTACT
        )

    return SampleRecord(
        sample_id=f"synth-{index:06d}",
        specimen_id=f"spec-{index // 12:05d}",
        rotation_deg=rotation,
        raster=raster,
        human_view=human_view,
        human_rostrum=human_rostrum,
        gt_view=view,
        gt_rostrum=rostrum,
        gt_skeleton=skel,
        gt_measurements_cm=gt_cm,
    )


def _render(
    params: SynthParams,
    rng: np.random.Generator,
    view: View,
    spine_d: np.ndarray,
    half_d: np.ndarray,
    body_sel: np.ndarray,
) -> RgbdRaster:
    w, h = params.image_width, params.image_height
    xs = np.arange(w, dtype=np.float64)[None, :, None]
    ys = np.arange(h, dtype=np.float64)[:, None, None]
    keep = half_d > 0
    px = spine_d[keep, 0][None, None, :]
    py = spine_d[keep, 1][None, None, :]
    hw = half_d[keep][None, None, :]
    d2 = (xs - px) ** 2 + (ys - py) ** 2
    # Elliptical cross-section: half-thickness above the image plane.
    thick = np.sqrt(np.maximum(hw * hw - d2, 0.0)).max(axis=2)
    mask = thick > 0.0

    if params.background == "textured":
        bg_rng = np.random.default_rng([params.background_seed, params.seed])
        coarse = bg_rng.uniform(30.0, 90.0, size=(h // 16 + 2, w // 16 + 2))
        yy = np.linspace(0, coarse.shape[0] - 1.001, h)
        xx = np.linspace(0, coarse.shape[1] - 1.001, w)
        gray = _bilerp(coarse, yy, xx)
        rgb = np.repeat(gray[:, :, None], 3, axis=2)
    else:
        rgb = np.zeros((h, w, 3), dtype=np.float64)

    peak = thick.max() if thick.max() > 0 else 1.0
    shade = 95.0 + 130.0 * (thick / peak)
    body = np.stack([shade, shade * 0.55, shade * 0.45], axis=2)
    if view is View.DORSAL:
        # Dark gut stripe along the spine ridge.
        stripe = thick > 0.82 * peak
        body[stripe] *= 0.55
    rgb = np.where(mask[:, :, None], body, rgb)

    depth = np.full((h, w), CAMERA_DISTANCE_MM, dtype=np.float64)
    depth[mask] = CAMERA_DISTANCE_MM - thick[mask] * params.scale_cm_per_px * 10.0

    return RgbdRaster(
        width=w,
        height=h,
        rgb=np.clip(rgb, 0, 255).astype(np.uint8),
        depth=depth.astype(np.float32),
    )


def _bilerp(grid: np.ndarray, yy: np.ndarray, xx: np.ndarray) -> np.ndarray:
    y0 = np.floor(yy).astype(int)
    x0 = np.floor(xx).astype(int)
    fy = (yy - y0)[:, None]
    fx = (xx - x0)[None, :]
    g = grid
    return (
        g[np.ix_(y0, x0)] * (1 - fy) * (1 - fx)
        + g[np.ix_(y0 + 1, x0)] * fy * (1 - fx)
        + g[np.ix_(y0, x0 + 1)] * (1 - fy) * fx
        + g[np.ix_(y0 + 1, x0 + 1)] * fy * fx
    )


def generate_corpus(params: SynthParams, n: int) -> list[SampleRecord]:
    if n < 1:
        raise ValueError("n must be >= 1")
    return [generate_sample(params, i) for i in range(n)]
