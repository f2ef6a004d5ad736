"""Pixel-to-centimeter conversion: scale-factor baseline and affine SVR.

Each morphological variable gets its own one-dimensional epsilon-insensitive
support vector regression ``cm = px * alpha + beta``:

    minimize  0.5 * alpha^2 + c * sum_i max(0, |y_i - (alpha x_i + beta)| - eps)

The problem is tiny and convex, so it is solved exactly: for a fixed slope
the optimal intercept is found from the sorted hinge breakpoints, and the
slope itself by bisection on the (monotone) subgradient of the partially
minimized objective. An ordinary-least-squares fit is kept alongside as the
independent cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateData, MissingModel, MissingVariable, UnitMismatch
from .skeleton import AxisClass, MEASUREMENT_TABLE, MeasurementSet, Unit


@dataclass(frozen=True)
class ScaleFactor:
    cm_per_px: float
    provenance: str = ""

    def __post_init__(self):
        if not (math.isfinite(self.cm_per_px) and self.cm_per_px > 0):
            raise ValueError(f"cm_per_px must be finite and > 0, got {self.cm_per_px}")


@dataclass(frozen=True)
class SvrHyper:
    epsilon: float = 0.05  # cm
    c: float = 10.0


@dataclass(frozen=True)
class RegressionModel:
    variable: str
    alpha: float
    beta: float
    hyper: SvrHyper
    n_train: int


def baseline_convert(m: MeasurementSet, s: ScaleFactor) -> MeasurementSet:
    if m.unit is not Unit.PIXELS:
        raise UnitMismatch(f"baseline_convert expects pixel values, got {m.unit.value}")
    return MeasurementSet(
        unit=Unit.CENTIMETERS,
        values={k: v * s.cm_per_px for k, v in m.values.items()},
    )


def _check_pairs(variable: str, pairs) -> tuple[np.ndarray, np.ndarray]:
    xs = np.array([p[0] for p in pairs], dtype=np.float64)
    ys = np.array([p[1] for p in pairs], dtype=np.float64)
    if len(xs) < 2 or np.ptp(xs) == 0.0:
        raise DegenerateData(f"{variable}: need at least two distinct pixel values")
    return xs, ys


def _best_intercept(resid: np.ndarray, eps: float) -> tuple[float, float, float]:
    """Minimize sum(max(0, |r_i - b| - eps)) over b.

    Returns (b, left_count, right_count) where the counts are the number of
    points strictly below / above the insensitive tube at the optimum (they
    feed the outer subgradient).
    """
    lo_pts = np.sort(resid - eps)
    hi_pts = np.sort(resid + eps)
    n = len(resid)
    bps = np.unique(np.concatenate([lo_pts, hi_pts]))
    # Piecewise-linear convex objective: the slope between consecutive
    # breakpoints is (#{b > r+eps} - #{b < r-eps}); find where it turns >= 0.
    if len(bps) == 1:
        b_opt = bps[0]
    else:
        mids = 0.5 * (bps[:-1] + bps[1:])
        slopes = np.searchsorted(hi_pts, mids) - (n - np.searchsorted(lo_pts, mids))
        nonneg = np.nonzero(slopes >= 0)[0]
        if len(nonneg) == 0:
            b_opt = bps[-1]
        else:
            j = int(nonneg[0])
            b_opt = 0.5 * (bps[j] + bps[j + 1]) if slopes[j] == 0 else bps[j]
    b_opt = float(b_opt)
    below = int(np.count_nonzero(resid - b_opt > eps))
    above = int(np.count_nonzero(resid - b_opt < -eps))
    return float(b_opt), below, above


def _subgradient(alpha: float, xs: np.ndarray, ys: np.ndarray, eps: float, c: float) -> float:
    resid = ys - alpha * xs
    b, _, _ = _best_intercept(resid, eps)
    r = resid - b
    s = np.zeros_like(r)
    s[r > eps] = 1.0
    s[r < -eps] = -1.0
    return alpha - c * float(np.dot(xs, s))


def fit_svr(variable: str, pairs, hyper: SvrHyper = SvrHyper()) -> RegressionModel:
    xs, ys = _check_pairs(variable, pairs)
    eps, c = hyper.epsilon, hyper.c
    bound = c * float(np.abs(xs).sum()) + 1.0
    lo, hi = -bound, bound
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _subgradient(mid, xs, ys, eps, c) < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-13 * max(1.0, abs(lo) + abs(hi)):
            break
    alpha = 0.5 * (lo + hi)
    beta, _, _ = _best_intercept(ys - alpha * xs, eps)
    return RegressionModel(variable=variable, alpha=alpha, beta=beta, hyper=hyper, n_train=len(xs))


def fit_least_squares(variable: str, pairs) -> RegressionModel:
    """Closed-form OLS line; the epsilon=0 oracle for the SVR fit."""
    xs, ys = _check_pairs(variable, pairs)
    xm, ym = xs.mean(), ys.mean()
    alpha = float(np.dot(xs - xm, ys - ym) / np.dot(xs - xm, xs - xm))
    beta = float(ym - alpha * xm)
    return RegressionModel(
        variable=variable, alpha=alpha, beta=beta, hyper=SvrHyper(epsilon=0.0, c=math.inf), n_train=len(xs)
    )


def convert(models: dict[str, RegressionModel], m: MeasurementSet) -> MeasurementSet:
    """Affine per-variable conversion; negative lengths clamp to 0 with a flag."""
    if m.unit is not Unit.PIXELS:
        raise UnitMismatch(f"convert expects pixel values, got {m.unit.value}")
    values: dict[str, float] = {}
    clamped: set[str] = set()
    for name, px in m.values.items():
        if name not in models:
            raise MissingModel(f"no regression model for variable {name!r}")
        mdl = models[name]
        cm = mdl.alpha * px + mdl.beta
        if cm < 0.0:
            cm = 0.0
            clamped.add(name)
        values[name] = cm
    return MeasurementSet(unit=Unit.CENTIMETERS, values=values, clamped=frozenset(clamped))


# --- method comparison ------------------------------------------------------

_AXIS_BY_VARIABLE = {d.name: d.axis_class for d in MEASUREMENT_TABLE}
_GROUPS = {
    "Lengths": AxisClass.LENGTH,
    "Heights": AxisClass.HEIGHT,
    "Widths": AxisClass.WIDTH,
}


@dataclass(frozen=True)
class ErrorStats:
    mae: float
    mae_std: float
    rmse: float
    mape_pct: float
    n: int

    @staticmethod
    def from_errors(pred: np.ndarray, gt: np.ndarray) -> "ErrorStats":
        err = np.abs(pred - gt)
        nz = gt != 0
        mape = float(np.mean(err[nz] / gt[nz]) * 100.0) if nz.any() else 0.0
        return ErrorStats(
            mae=float(err.mean()),
            mae_std=float(err.std()),
            rmse=float(np.sqrt(np.mean(err**2))),
            mape_pct=mape,
            n=len(err),
        )


@dataclass
class ConversionReport:
    per_variable: dict[str, dict[str, ErrorStats]] = field(default_factory=dict)
    groups: dict[str, dict[str, ErrorStats]] = field(default_factory=dict)


def compare_methods(
    test: list[tuple[MeasurementSet, MeasurementSet]],
    models: dict[str, RegressionModel],
    scale: ScaleFactor,
) -> ConversionReport:
    """Per-variable and grouped error statistics for both conversion routes."""
    preds: dict[str, dict[str, list[float]]] = {"baseline": {}, "regression": {}}
    gts: dict[str, list[float]] = {}
    for px, gt_cm in test:
        if gt_cm.unit is not Unit.CENTIMETERS:
            raise UnitMismatch("ground truth must be in centimeters")
        base = baseline_convert(px, scale)
        reg = convert(models, px)
        for name, gt_val in gt_cm.values.items():
            if name not in base.values:
                raise MissingVariable(f"sample lacks pixel value for {name!r}")
            gts.setdefault(name, []).append(gt_val)
            preds["baseline"].setdefault(name, []).append(base.values[name])
            preds["regression"].setdefault(name, []).append(reg.values[name])

    report = ConversionReport()
    for name in gts:
        report.per_variable[name] = {
            method: ErrorStats.from_errors(np.array(preds[method][name]), np.array(gts[name]))
            for method in ("baseline", "regression")
        }
    for group, axis in _GROUPS.items():
        names = [n for n in gts if _AXIS_BY_VARIABLE[n] is axis]
        if not names:
            continue
        report.groups[group] = _group_stats(names, preds, gts)
    report.groups["General"] = _group_stats(list(gts), preds, gts)
    return report


def _group_stats(names, preds, gts) -> dict[str, ErrorStats]:
    out = {}
    for method in ("baseline", "regression"):
        p = np.concatenate([np.array(preds[method][n]) for n in names])
        g = np.concatenate([np.array(gts[n]) for n in names])
        out[method] = ErrorStats.from_errors(p, g)
    return out


# --- model set serialization (versioned text table) --------------------------

_REG_HEADER = "shrimpmorph-regression v1"


def save_models(models: dict[str, RegressionModel], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(_REG_HEADER + "\n")
        f.write("variable\talpha\tbeta\tepsilon\tc\tn_train\n")
        for name in sorted(models):
            m = models[name]
            f.write(
                f"{m.variable}\t{m.alpha!r}\t{m.beta!r}\t{m.hyper.epsilon!r}\t{m.hyper.c!r}\t{m.n_train}\n"
            )


def load_models(path) -> dict[str, RegressionModel]:
    with open(path, "r", encoding="utf-8") as f:
        lines = f.read().splitlines()
    if not lines or lines[0] != _REG_HEADER:
        raise MissingModel(f"{path}: not a regression model table")
    out: dict[str, RegressionModel] = {}
    for line in lines[2:]:
        if not line.strip():
            continue
        var, alpha, beta, eps, c, n = line.split("\t")
        out[var] = RegressionModel(
            variable=var,
            alpha=float(alpha),
            beta=float(beta),
            hyper=SvrHyper(epsilon=float(eps), c=float(c)),
            n_train=int(n),
        )
    return out
