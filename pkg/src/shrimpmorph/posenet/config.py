"""Pose network configuration and presets."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import ShapeMismatch

HEATMAP_DOWNSCALE = 4  # heatmaps are always input/4 regardless of patch size


@dataclass(frozen=True)
class PoseNetConfig:
    input_height: int = 96
    input_width: int = 128
    in_channels: int = 4  # RGB + depth
    patch_size: int = 8
    embed_dim: int = 64
    num_layers: int = 4
    num_heads: int = 4
    mlp_ratio: float = 2.0
    num_keypoints: int = 23
    decoder_upscale: int = 2
    heatmap_sigma: float = 2.0
    seed: int = 0

    def validate(self) -> None:
        if self.input_height % self.patch_size or self.input_width % self.patch_size:
            raise ShapeMismatch(
                f"input {self.input_height}x{self.input_width} not divisible by "
                f"patch size {self.patch_size}"
            )
        if self.embed_dim % self.num_heads:
            raise ShapeMismatch(
                f"embed_dim {self.embed_dim} not divisible by {self.num_heads} heads"
            )
        if self.patch_size != HEATMAP_DOWNSCALE * self.decoder_upscale:
            raise ShapeMismatch(
                f"patch size {self.patch_size} with decoder upscale "
                f"{self.decoder_upscale} does not yield input/{HEATMAP_DOWNSCALE} heatmaps"
            )
        # Any head width is allowed here (the tiny preset uses 3 channels for
        # gradient checks); the 22/23 skeleton constraint is enforced where
        # heatmaps meet skeletons.
        if self.num_keypoints < 1:
            raise ShapeMismatch(f"num_keypoints must be >= 1, got {self.num_keypoints}")

    @property
    def grid_height(self) -> int:
        return self.input_height // self.patch_size

    @property
    def grid_width(self) -> int:
        return self.input_width // self.patch_size

    @property
    def num_tokens(self) -> int:
        return self.grid_height * self.grid_width

    @property
    def heatmap_height(self) -> int:
        return self.input_height // HEATMAP_DOWNSCALE

    @property
    def heatmap_width(self) -> int:
        return self.input_width // HEATMAP_DOWNSCALE


def tiny_config(num_keypoints: int = 3, seed: int = 0) -> PoseNetConfig:
    """Small enough for finite-difference gradient checks."""
    return PoseNetConfig(
        input_height=16,
        input_width=16,
        patch_size=4,
        embed_dim=8,
        num_layers=2,
        num_heads=2,
        mlp_ratio=2.0,
        num_keypoints=num_keypoints,
        decoder_upscale=1,
        heatmap_sigma=1.0,
        seed=seed,
    )


def desk_config(num_keypoints: int = 23, seed: int = 0) -> PoseNetConfig:
    """Default configuration; trains in minutes on a CPU."""
    return PoseNetConfig(num_keypoints=num_keypoints, seed=seed)


def full_scale_config(num_keypoints: int = 23, seed: int = 0) -> PoseNetConfig:
    """Production-scale preset (shape-checked only; too big to train here)."""
    return PoseNetConfig(
        input_height=192,
        input_width=256,
        patch_size=16,
        embed_dim=1280,
        num_layers=16,
        num_heads=16,
        mlp_ratio=4.0,
        num_keypoints=num_keypoints,
        decoder_upscale=4,
        heatmap_sigma=2.0,
        seed=seed,
    )
