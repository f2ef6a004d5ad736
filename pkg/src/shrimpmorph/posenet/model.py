"""Model wrapper: normalization, prediction, training and variant routing."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..data_io import RgbdRaster
from ..errors import MissingVariant, VariantMismatch
from ..skeleton import RostrumState, View, VirtualSkeleton
from .config import PoseNetConfig
from .core import Params, forward, init_params, loss_and_gradients
from .heatmaps import extract_keypoints, gaussian_target


@dataclass
class PoseModel:
    config: PoseNetConfig
    params: Params
    # per-channel statistics from the training split (r, g, b, depth)
    norm_mean: np.ndarray = field(default_factory=lambda: np.zeros(4))
    norm_std: np.ndarray = field(default_factory=lambda: np.ones(4))


def new_model(config: PoseNetConfig) -> PoseModel:
    return PoseModel(config=config, params=init_params(config))


def raster_to_array(raster: RgbdRaster) -> np.ndarray:
    """Stack RGB (scaled to [0,1]) and depth into an (H, W, 4) float64 array."""
    rgb = raster.rgb.astype(np.float64) / 255.0
    return np.concatenate([rgb, raster.depth.astype(np.float64)[:, :, None]], axis=2)


def normalize(model: PoseModel, arr: np.ndarray) -> np.ndarray:
    return (arr - model.norm_mean) / model.norm_std


def compute_norm_stats(arrays: list[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    stacked = np.stack(arrays)
    mean = stacked.mean(axis=(0, 1, 2))
    std = stacked.std(axis=(0, 1, 2))
    std[std < 1e-9] = 1.0
    return mean, std


def predict_heatmaps(model: PoseModel, raster: RgbdRaster) -> np.ndarray:
    x = normalize(model, raster_to_array(raster))[None]
    return forward(x, model.params, model.config)[0]


def predict_skeleton(
    model: PoseModel, raster: RgbdRaster, view: View = View.LATERAL
) -> VirtualSkeleton:
    return extract_keypoints(predict_heatmaps(model, raster), model.config, view)


@dataclass
class TrainHyper:
    lr: float = 0.5
    epochs: int = 40
    batch_size: int = 16
    seed: int = 0
    optimizer: str = "sgd"  # "sgd" or "adam"
    lr_schedule: str = "constant"  # "constant" or "cosine"


def train(
    model: PoseModel,
    corpus: list[tuple[RgbdRaster, VirtualSkeleton]],
    hyper: TrainHyper,
    progress=None,
) -> tuple[PoseModel, list[float]]:
    """Train in place on a single-variant corpus; returns per-epoch mean loss."""
    if not corpus:
        raise VariantMismatch("empty training corpus")
    variants = {skel.variant for _, skel in corpus}
    if len(variants) != 1:
        raise VariantMismatch(f"mixed skeleton variants in corpus: {sorted(variants)}")
    expected = 23 if next(iter(variants)).endswith("23") else 22
    if expected != model.config.num_keypoints:
        raise VariantMismatch(
            f"corpus variant has {expected} keypoints, model expects "
            f"{model.config.num_keypoints}"
        )

    arrays = [raster_to_array(r) for r, _ in corpus]
    model.norm_mean, model.norm_std = compute_norm_stats(arrays)
    xs = np.stack([normalize(model, a) for a in arrays])
    targets = np.stack([gaussian_target(skel, model.config) for _, skel in corpus])

    rng = np.random.default_rng(hyper.seed)
    n = len(corpus)
    state_m: Params = {}
    state_v: Params = {}
    step = 0
    curve: list[float] = []
    for epoch in range(hyper.epochs):
        if hyper.lr_schedule == "cosine":
            # anneal to a tenth of the initial rate over the run
            frac = epoch / max(hyper.epochs - 1, 1)
            lr = 0.1 * hyper.lr + 0.45 * hyper.lr * (1.0 + np.cos(np.pi * frac))
        else:
            lr = hyper.lr
        order = rng.permutation(n)
        losses = []
        for start in range(0, n, hyper.batch_size):
            idx = order[start : start + hyper.batch_size]
            loss, grads = loss_and_gradients(xs[idx], targets[idx], model.params, model.config)
            losses.append(loss)
            step += 1
            if hyper.optimizer == "adam":
                b1, b2, eps = 0.9, 0.999, 1e-8
                for name, g in grads.items():
                    m = state_m.setdefault(name, np.zeros_like(g))
                    v = state_v.setdefault(name, np.zeros_like(g))
                    m += (1 - b1) * (g - m)
                    v += (1 - b2) * (g * g - v)
                    mh = m / (1 - b1**step)
                    vh = v / (1 - b2**step)
                    model.params[name] -= lr * mh / (np.sqrt(vh) + eps)
            else:
                for name, g in grads.items():
                    model.params[name] -= lr * g
        curve.append(float(np.mean(losses)))
        if progress is not None:
            progress(epoch, curve[-1])
    return model, curve


PoseRegistry = dict[tuple[View, RostrumState], PoseModel]


def route_and_predict(
    registry: PoseRegistry, raster: RgbdRaster, view: View, rostrum: RostrumState
) -> VirtualSkeleton:
    """Select the model for (view, rostrum) and decode its skeleton."""
    key = (view, rostrum)
    if key not in registry:
        raise MissingVariant(f"no pose model registered for {view.value}/{rostrum.value}")
    model = registry[key]
    expected = 23 if rostrum is RostrumState.INTACT else 22
    if model.config.num_keypoints != expected:
        raise MissingVariant(
            f"registered model for {view.value}/{rostrum.value} predicts "
            f"{model.config.num_keypoints} keypoints"
        )
    return predict_skeleton(model, raster, view)
