"""Binary view/rostrum classifiers and the human-AI XOR fusion.

The classifier is engineered features + logistic regression behind a small
model type, so a heavier backbone can be swapped in without touching the
fusion protocol. An alert is raised exactly when the human and AI
assessments disagree; the only errors the fusion cannot flag are the ones
where both sides are wrong with the same value.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from .data_io import RgbdRaster, SampleRecord
from .errors import DegenerateData, KindMismatch, MissingLabel, ModelLoadError
from .skeleton import RostrumState, View


class Source(Enum):
    HUMAN = "human"
    AI = "ai"


class Kind(Enum):
    POSE = "pose"  # True = lateral
    ROSTRUM = "rostrum"  # True = intact


@dataclass(frozen=True)
class Assessment:
    source: Source
    kind: Kind
    value: bool
    confidence: float = 1.0


@dataclass(frozen=True)
class FusionDecision:
    kind: Kind
    alert: bool
    human_value: bool
    ai_value: bool


@dataclass
class BinaryClassifierModel:
    kind: Kind
    feature_spec: str
    weights: np.ndarray
    bias: float
    feat_mean: np.ndarray
    feat_std: np.ndarray
    threshold: float = 0.5


GRID_W, GRID_H = 16, 12
FEATURE_SPEC = f"gray{GRID_W}x{GRID_H}+colprofile{GRID_W}+rowprofile{GRID_H}+aspect+depthstats2+thickness{GRID_W}+spikereach"
FEATURE_DIM = GRID_W * GRID_H + GRID_W + GRID_H + 1 + 2 + GRID_W + 1

FOREGROUND_THRESHOLD = 0.12

# Thin-protrusion detection on the depth-derived thickness field.
SPIKE_FG_THICKNESS = 0.05  # px of body thickness that counts as foreground
SPIKE_CORE_FRAC = 0.25  # core = thicker than this fraction of the maximum
SPIKE_OVERHANG_PX = 2.0  # protrusion pixels are this far outside the core
SPIKE_FLAT_RATIO = 0.18  # a protrusion is "flat" below this thickness ratio


def _spike_reach(thickness: np.ndarray) -> float:
    """How far a thin, flat protrusion extends beyond the thick body core.

    The rostrum is a narrow spur whose thickness stays a small fraction of
    the body maximum, while every other appendage (tail fan, body flanks)
    carries substantial thickness near its attachment. Connected overhang
    regions that stay flat are measured by their maximum distance from the
    core; the largest such reach is the score. Broken-rostrum bodies have
    no flat far-reaching component and score near zero.
    """
    tmax = thickness.max()
    if tmax <= 0:
        return 0.0
    fg = thickness > SPIKE_FG_THICKNESS
    ys, xs = np.nonzero(fg)
    if len(ys) == 0:
        return 0.0
    pts = np.stack([xs, ys], axis=1).astype(np.float64)
    values = thickness[ys, xs]
    core = values > SPIKE_CORE_FRAC * tmax
    if not core.any():
        return 0.0
    dist, _ = cKDTree(pts[core]).query(pts)
    overhang = np.zeros_like(fg)
    far = dist > SPIKE_OVERHANG_PX
    overhang[ys[far], xs[far]] = True
    dist_map = np.zeros_like(thickness)
    dist_map[ys, xs] = dist
    labels, count = ndimage.label(overhang, structure=np.ones((3, 3)))
    reach = 0.0
    for c in range(1, count + 1):
        component = labels == c
        if thickness[component].max() <= SPIKE_FLAT_RATIO * tmax:
            reach = max(reach, float(dist_map[component].max()))
    return reach


def _block_reduce(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Mean-pool an image onto an out_h x out_w grid (bins may be ragged)."""
    h, w = img.shape
    ys = np.linspace(0, h, out_h + 1).astype(int)
    xs = np.linspace(0, w, out_w + 1).astype(int)
    out = np.empty((out_h, out_w))
    for i in range(out_h):
        for j in range(out_w):
            out[i, j] = img[ys[i] : ys[i + 1], xs[j] : xs[j + 1]].mean()
    return out


def extract_features(raster: RgbdRaster) -> np.ndarray:
    gray = raster.rgb.astype(np.float64).mean(axis=2) / 255.0
    grid = _block_reduce(gray, GRID_H, GRID_W)

    fg = gray > FOREGROUND_THRESHOLD
    col_profile = _block_reduce(fg.astype(np.float64), 1, GRID_W)[0]
    row_profile = _block_reduce(fg.astype(np.float64), GRID_H, 1)[:, 0]

    if fg.any():
        ys, xs = np.nonzero(fg)
        bbox_w = xs.max() - xs.min() + 1
        bbox_h = ys.max() - ys.min() + 1
        aspect = bbox_w / bbox_h
    else:
        aspect = 0.0  # degenerate input convention

    depth = raster.depth.astype(np.float64)
    plane = depth.max()
    thickness = np.maximum(plane - depth, 0.0)
    if fg.any():
        depth_mean = depth[fg].mean()
        depth_var = depth[fg].var()
    else:
        depth_mean = 0.0
        depth_var = 0.0
    thick_profile = _block_reduce(thickness, 1, GRID_W)[0]

    return np.concatenate(
        [
            grid.ravel(),
            col_profile,
            row_profile,
            [aspect, depth_mean, depth_var],
            thick_profile,
            [_spike_reach(thickness)],
        ]
    )


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _full_loss(X: np.ndarray, y: np.ndarray, w: np.ndarray, b: float) -> float:
    # cross-entropy written in the margin form, stable for large |z|
    z = X @ w + b
    m = z * (2 * y - 1)
    return float(np.mean(np.log1p(np.exp(-np.abs(m))) + np.maximum(-m, 0.0)))


def train_classifier(
    kind: Kind,
    labelled: list[tuple[RgbdRaster, bool]],
    hyper: dict | None = None,
    seed: int = 0,
) -> BinaryClassifierModel:
    """Logistic regression by minibatch SGD with an epoch-level safeguard.

    After each epoch the full-batch loss is evaluated; an epoch that
    increased it is rolled back and retried at half the learning rate, so
    the training-loss curve is non-increasing by construction.
    """
    hyper = {"learning_rate": 0.05, "epochs": 30, "batch_size": 64, **(hyper or {})}
    labels = np.array([bool(lab) for _, lab in labelled])
    if labels.all() or not labels.any():
        raise DegenerateData(f"{kind.value} training data contains a single class")

    X = np.stack([extract_features(r) for r, _ in labelled])
    y = labels.astype(np.float64)
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std[std < 1e-12] = 1.0
    Xn = (X - mean) / std

    rng = np.random.default_rng(seed)
    w = np.zeros(Xn.shape[1])
    b = 0.0
    lr = float(hyper["learning_rate"])
    bs = int(hyper["batch_size"])
    prev_loss = _full_loss(Xn, y, w, b)
    for _ in range(int(hyper["epochs"])):
        while True:
            order = rng.permutation(len(y))
            w_try, b_try = w.copy(), b
            for start in range(0, len(y), bs):
                idx = order[start : start + bs]
                p = _sigmoid(Xn[idx] @ w_try + b_try)
                g = p - y[idx]
                w_try -= lr * (Xn[idx].T @ g) / len(idx)
                b_try -= lr * g.mean()
            loss = _full_loss(Xn, y, w_try, b_try)
            if loss <= prev_loss or lr < 1e-8:
                w, b, prev_loss = w_try, b_try, loss
                break
            lr *= 0.5
    return BinaryClassifierModel(
        kind=kind,
        feature_spec=FEATURE_SPEC,
        weights=w,
        bias=b,
        feat_mean=mean,
        feat_std=std,
    )


def predict(model: BinaryClassifierModel, raster: RgbdRaster) -> Assessment:
    f = (extract_features(raster) - model.feat_mean) / model.feat_std
    p = float(_sigmoid(np.array([f @ model.weights + model.bias]))[0])
    value = p >= model.threshold  # ties resolve toward the positive class
    return Assessment(source=Source.AI, kind=model.kind, value=value, confidence=p if value else 1.0 - p)


def fuse(human: Assessment, ai: Assessment) -> FusionDecision:
    if human.kind is not ai.kind:
        raise KindMismatch(f"cannot fuse {human.kind.value} with {ai.kind.value}")
    if human.source is not Source.HUMAN or ai.source is not Source.AI:
        raise KindMismatch("fuse expects one human and one AI assessment")
    return FusionDecision(
        kind=human.kind,
        alert=human.value != ai.value,
        human_value=human.value,
        ai_value=ai.value,
    )


@dataclass
class DiscriminationReport:
    kind: Kind
    n: int
    human_error_pct: float
    ai_error_pct: float
    hybrid_undetected_error_pct: float
    human_errors: frozenset[str]
    ai_errors: frozenset[str]
    hybrid_undetected: frozenset[str]


def _labels_for(kind: Kind, rec: SampleRecord) -> tuple[bool, bool]:
    if kind is Kind.POSE:
        return rec.gt_view is View.LATERAL, rec.human_view is View.LATERAL
    return rec.gt_rostrum is RostrumState.INTACT, rec.human_rostrum is RostrumState.INTACT


def evaluate_discrimination(
    corpus: list[SampleRecord],
    model: BinaryClassifierModel,
    ai_values: dict[str, bool] | None = None,
) -> DiscriminationReport:
    """Human / AI / hybrid error rates over a corpus with ground truth.

    The hybrid undetected errors are the samples where human and AI are both
    wrong with the same value, i.e. the only case the XOR alert cannot flag.
    ``ai_values`` may supply precomputed predictions keyed by sample id.
    """
    human_err: set[str] = set()
    ai_err: set[str] = set()
    undetected: set[str] = set()
    for rec in corpus:
        gt, human = _labels_for(model.kind, rec)
        if rec.sample_id is None:
            raise MissingLabel("sample without id")
        if ai_values is not None:
            if rec.sample_id not in ai_values:
                raise MissingLabel(f"no AI prediction for {rec.sample_id}")
            ai = ai_values[rec.sample_id]
        else:
            ai = predict(model, rec.raster).value
        if human != gt:
            human_err.add(rec.sample_id)
        if ai != gt:
            ai_err.add(rec.sample_id)
        if human != gt and ai != gt and human == ai:
            undetected.add(rec.sample_id)
    n = len(corpus)
    if n == 0:
        raise MissingLabel("empty corpus")
    return DiscriminationReport(
        kind=model.kind,
        n=n,
        human_error_pct=100.0 * len(human_err) / n,
        ai_error_pct=100.0 * len(ai_err) / n,
        hybrid_undetected_error_pct=100.0 * len(undetected) / n,
        human_errors=frozenset(human_err),
        ai_errors=frozenset(ai_err),
        hybrid_undetected=frozenset(undetected),
    )


# --- model serialization ----------------------------------------------------

_DISC_MAGIC = b"SMDISC1\n"


def save_classifier(model: BinaryClassifierModel, path) -> None:
    spec = model.feature_spec.encode("utf-8")
    kind = model.kind.value.encode("utf-8")
    with open(path, "wb") as f:
        f.write(_DISC_MAGIC)
        f.write(struct.pack("<H", len(kind)))
        f.write(kind)
        f.write(struct.pack("<H", len(spec)))
        f.write(spec)
        f.write(struct.pack("<Id", len(model.weights), model.threshold))
        for arr in (model.weights, model.feat_mean, model.feat_std):
            f.write(np.asarray(arr, dtype="<f8").tobytes())
        f.write(struct.pack("<d", model.bias))


def load_classifier(path) -> BinaryClassifierModel:
    try:
        with open(path, "rb") as f:
            if f.read(len(_DISC_MAGIC)) != _DISC_MAGIC:
                raise ModelLoadError(f"{path}: not a classifier file")
            (klen,) = struct.unpack("<H", f.read(2))
            kind = Kind(f.read(klen).decode("utf-8"))
            (slen,) = struct.unpack("<H", f.read(2))
            spec = f.read(slen).decode("utf-8")
            dim, threshold = struct.unpack("<Id", f.read(12))
            arrs = [np.frombuffer(f.read(8 * dim), dtype="<f8").copy() for _ in range(3)]
            (bias,) = struct.unpack("<d", f.read(8))
    except (OSError, struct.error, ValueError) as e:
        raise ModelLoadError(f"{path}: {e}") from e
    return BinaryClassifierModel(
        kind=kind,
        feature_spec=spec,
        weights=arrs[0],
        bias=bias,
        feat_mean=arrs[1],
        feat_std=arrs[2],
        threshold=threshold,
    )
