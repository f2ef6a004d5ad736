"""Heatmap keypoint network: numpy ViT encoder + bilinear/ReLU decoder."""

from .config import PoseNetConfig, desk_config, full_scale_config, tiny_config
from .core import (
    bilinear_interpolate,
    bilinear_matrix,
    forward,
    init_params,
    loss_and_gradients,
    patch_embed,
    vit_block,
)
from .heatmaps import extract_keypoints, gaussian_target
from .checkpoint import load_checkpoint, save_checkpoint
from .model import (
    PoseModel,
    PoseRegistry,
    TrainHyper,
    new_model,
    predict_heatmaps,
    predict_skeleton,
    raster_to_array,
    route_and_predict,
    train,
)

__all__ = [
    "PoseNetConfig",
    "PoseModel",
    "PoseRegistry",
    "TrainHyper",
    "bilinear_interpolate",
    "bilinear_matrix",
    "desk_config",
    "extract_keypoints",
    "forward",
    "full_scale_config",
    "gaussian_target",
    "init_params",
    "load_checkpoint",
    "loss_and_gradients",
    "new_model",
    "patch_embed",
    "predict_heatmaps",
    "predict_skeleton",
    "raster_to_array",
    "route_and_predict",
    "save_checkpoint",
    "tiny_config",
    "train",
    "vit_block",
]
