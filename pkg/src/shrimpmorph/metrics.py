"""Evaluation suite: EPE, RMSE, MAPE, PCK, OKS and OKS-based mAP 50:95.

Single animal per image, so average precision at an OKS threshold
degenerates to the fraction of images whose prediction clears it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateArea, EmptyCorpus, VariantMismatch
from .skeleton import VirtualSkeleton

MAP_THRESHOLDS = tuple(t / 100.0 for t in range(50, 100, 5))


@dataclass(frozen=True)
class OksParams:
    per_keypoint_k: float = 0.05  # uniform falloff constant
    area_source: str = "gt_bbox_area"


@dataclass
class KeypointErrorRow:
    keypoint_index: int
    epe_mean: float
    epe_std: float
    rmse: float
    mape_pct: float


def _check_variant(pred: VirtualSkeleton, gt: VirtualSkeleton) -> None:
    if pred.variant != gt.variant:
        raise VariantMismatch(f"pred is {pred.variant}, gt is {gt.variant}")


def epe(pred: VirtualSkeleton, gt: VirtualSkeleton) -> dict[int, float]:
    """Per-keypoint Euclidean distance, keyed by keypoint index."""
    _check_variant(pred, gt)
    out = {}
    for kp in gt.keypoints:
        pkp = pred.keypoint(kp.index)
        out[kp.index] = math.hypot(pkp.x - kp.x, pkp.y - kp.y)
    return out


def _collect_epe(preds, gts) -> dict[int, list[float]]:
    per_index: dict[int, list[float]] = {}
    for pred, gt in zip(preds, gts, strict=True):
        for idx, d in epe(pred, gt).items():
            per_index.setdefault(idx, []).append(d)
    return per_index


def rmse(preds, gts) -> dict[int, float]:
    """Per-keypoint sqrt(mean(EPE^2)) over aligned corpora."""
    return {
        idx: float(np.sqrt(np.mean(np.square(ds))))
        for idx, ds in _collect_epe(preds, gts).items()
    }


def mape(preds, gts, normalizer: float) -> dict[int, float]:
    """Per-keypoint mean(EPE / normalizer) * 100.

    The normalizer is a reference length in pixels (the ground-truth image
    diagonal by convention here).
    """
    return {
        idx: float(np.mean(ds) / normalizer * 100.0)
        for idx, ds in _collect_epe(preds, gts).items()
    }


def keypoint_error_rows(preds, gts, normalizer: float) -> list[KeypointErrorRow]:
    rows = []
    for idx, ds in sorted(_collect_epe(preds, gts).items()):
        arr = np.array(ds)
        rows.append(
            KeypointErrorRow(
                keypoint_index=idx,
                epe_mean=float(arr.mean()),
                epe_std=float(arr.std()),
                rmse=float(np.sqrt(np.mean(arr**2))),
                mape_pct=float(arr.mean() / normalizer * 100.0),
            )
        )
    return rows


def pck(preds, gts, threshold_px: float) -> float:
    """Percentage of keypoints with EPE <= threshold."""
    total = 0
    hits = 0
    for pred, gt in zip(preds, gts, strict=True):
        for d in epe(pred, gt).values():
            total += 1
            if d <= threshold_px:
                hits += 1
    if total == 0:
        raise EmptyCorpus("no keypoints to evaluate")
    return 100.0 * hits / total


def oks(pred: VirtualSkeleton, gt: VirtualSkeleton, params: OksParams = OksParams()) -> float:
    """Mean Gaussian keypoint similarity, scale-normalized by gt bbox area."""
    _check_variant(pred, gt)
    visible = [kp for kp in gt.keypoints if kp.visible]
    if not visible:
        raise DegenerateArea("gt skeleton has no visible keypoints")
    xs = [kp.x for kp in visible]
    ys = [kp.y for kp in visible]
    area = (max(xs) - min(xs)) * (max(ys) - min(ys))
    if area <= 0:
        raise DegenerateArea("gt keypoint bounding box has zero area")
    k2 = params.per_keypoint_k**2
    sims = []
    for kp in visible:
        pkp = pred.keypoint(kp.index)
        d2 = (pkp.x - kp.x) ** 2 + (pkp.y - kp.y) ** 2
        sims.append(math.exp(-d2 / (2.0 * area * k2)))
    return float(np.mean(sims))


def map_50_95(preds, gts, params: OksParams = OksParams()) -> float:
    """Mean over OKS thresholds 0.50:0.05:0.95 of the per-threshold accuracy."""
    if not gts:
        raise EmptyCorpus("no images to evaluate")
    scores = [oks(p, g, params) for p, g in zip(preds, gts, strict=True)]
    precisions = [np.mean([s >= t for s in scores]) for t in MAP_THRESHOLDS]
    return 100.0 * float(np.mean(precisions))


# --- report emission ---------------------------------------------------------


@dataclass
class EvalTables:
    """Formatted report plus machine-readable rows (table, row, column, value)."""

    text: str
    rows: list[tuple[str, str, str, float]] = field(default_factory=list)


def report_tables(
    pose_by_variant: dict[str, tuple[list[VirtualSkeleton], list[VirtualSkeleton]]],
    keypoint_normalizer: float,
    pck_threshold_px: float = 10.0,
    conversion_report=None,
    discrimination_reports=None,
    oks_params: OksParams = OksParams(),
) -> EvalTables:
    """Emit the evaluation tables as text plus flat machine-readable rows.

    ``pose_by_variant`` maps variant name -> (predictions, ground truths).
    Empty groups are omitted with a note. Output is deterministic.
    """
    lines: list[str] = []
    rows: list[tuple[str, str, str, float]] = []

    if discrimination_reports:
        lines.append("== discrimination (error %) ==")
        lines.append(f"{'kind':<10} {'human':>8} {'ai':>8} {'hybrid-undetected':>18}")
        for rep in discrimination_reports:
            lines.append(
                f"{rep.kind.value:<10} {rep.human_error_pct:>8.2f} "
                f"{rep.ai_error_pct:>8.2f} {rep.hybrid_undetected_error_pct:>18.2f}"
            )
            for col, val in (
                ("human", rep.human_error_pct),
                ("ai", rep.ai_error_pct),
                ("hybrid_undetected", rep.hybrid_undetected_error_pct),
            ):
                rows.append(("discrimination", rep.kind.value, col, val))
        lines.append("")

    lines.append("== pose estimation per variant ==")
    lines.append(f"{'variant':<12} {'n':>5} {'mAP50:95%':>10} {'PCK@%.0fpx%%' % pck_threshold_px:>12}")
    all_preds: list[VirtualSkeleton] = []
    all_gts: list[VirtualSkeleton] = []
    for variant in sorted(pose_by_variant):
        preds, gts = pose_by_variant[variant]
        if not gts:
            lines.append(f"{variant:<12} (no samples)")
            continue
        m = map_50_95(preds, gts, oks_params)
        p = pck(preds, gts, pck_threshold_px)
        lines.append(f"{variant:<12} {len(gts):>5} {m:>10.2f} {p:>12.2f}")
        rows.append(("pose", variant, "map_50_95", m))
        rows.append(("pose", variant, "pck", p))
        all_preds.extend(preds)
        all_gts.extend(gts)
    if all_gts:
        m = map_50_95(all_preds, all_gts, oks_params)
        p = pck(all_preds, all_gts, pck_threshold_px)
        lines.append(f"{'General':<12} {len(all_gts):>5} {m:>10.2f} {p:>12.2f}")
        rows.append(("pose", "General", "map_50_95", m))
        rows.append(("pose", "General", "pck", p))
    lines.append("")

    lines.append("== per-keypoint errors ==")
    for view in ("lateral", "dorsal"):
        preds = []
        gts = []
        for variant, (ps, gs) in pose_by_variant.items():
            if variant.startswith(view):
                preds.extend(ps)
                gts.extend(gs)
        if not gts:
            lines.append(f"[{view}] (no samples)")
            continue
        lines.append(f"[{view}]")
        lines.append(f"{'point':>5} {'EPE(px)':>16} {'RMSE(px)':>9} {'MAPE(%)':>8}")
        for row in keypoint_error_rows(preds, gts, keypoint_normalizer):
            lines.append(
                f"{row.keypoint_index:>5} {row.epe_mean:>8.2f} ±{row.epe_std:<6.2f} "
                f"{row.rmse:>9.2f} {row.mape_pct:>8.3f}"
            )
            for col, val in (
                ("epe_mean", row.epe_mean),
                ("epe_std", row.epe_std),
                ("rmse", row.rmse),
                ("mape", row.mape_pct),
            ):
                rows.append((f"keypoints-{view}", str(row.keypoint_index), col, val))
    lines.append("")

    if conversion_report is not None:
        lines.append("== pixel-to-cm conversion (MAE cm) ==")
        lines.append(f"{'variable':<10} {'baseline':>16} {'regression':>16}")
        for name in sorted(conversion_report.per_variable):
            stats = conversion_report.per_variable[name]
            b, r = stats["baseline"], stats["regression"]
            lines.append(
                f"{name:<10} {b.mae:>8.3f} ±{b.mae_std:<6.3f} {r.mae:>8.3f} ±{r.mae_std:<6.3f}"
            )
            rows.append(("conversion", name, "baseline_mae", b.mae))
            rows.append(("conversion", name, "regression_mae", r.mae))
        for group in ("Lengths", "Heights", "Widths", "General"):
            if group not in conversion_report.groups:
                continue
            stats = conversion_report.groups[group]
            b, r = stats["baseline"], stats["regression"]
            lines.append(
                f"{group:<10} {b.mae:>8.3f} ±{b.mae_std:<6.3f} {r.mae:>8.3f} ±{r.mae_std:<6.3f}"
            )
            rows.append(("conversion", group, "baseline_mae", b.mae))
            rows.append(("conversion", group, "regression_mae", r.mae))
        lines.append("")

    return EvalTables(text="\n".join(lines) + "\n", rows=rows)


def rows_to_csv(rows: list[tuple[str, str, str, float]]) -> str:
    out = ["table,row,column,value"]
    for table, row, column, value in rows:
        out.append(f"{table},{row},{column},{value!r}")
    return "\n".join(out) + "\n"
