"""Error metrics, walk-forward validation and long-horizon summaries."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from . import pipelines
from .errors import EmptyResultError, FitError, ValidationError


@dataclass(frozen=True)
class MetricSet:
    mape: float
    mae: float
    rmse: float
    n_scored: int          # points entering the MAPE sum (non-zero actuals)
    n_skipped_zero: int


def _check_pair(actual, predicted):
    a = np.asarray(actual, dtype=float)
    p = np.asarray(predicted, dtype=float)
    if a.shape != p.shape or a.ndim != 1:
        raise ValidationError("actual and predicted must be 1-D and equally long")
    if len(a) < 1:
        raise ValidationError("need at least one point")
    return a, p


def mape(actual, predicted):
    """Mean absolute percentage error; zero actuals are skipped."""
    a, p = _check_pair(actual, predicted)
    nz = a != 0.0
    if not nz.any():
        raise ValidationError("MAPE is undefined when every actual is zero")
    return float(100.0 * np.mean(np.abs(a[nz] - p[nz]) / np.abs(a[nz])))


def mae(actual, predicted):
    a, p = _check_pair(actual, predicted)
    return float(np.mean(np.abs(a - p)))


def rmse(actual, predicted):
    a, p = _check_pair(actual, predicted)
    return float(np.sqrt(np.mean((a - p) ** 2)))


def compute_metrics(actual, predicted):
    a, p = _check_pair(actual, predicted)
    nz = int(np.count_nonzero(a))
    return MetricSet(
        mape=mape(a, p),
        mae=mae(a, p),
        rmse=rmse(a, p),
        n_scored=nz,
        n_skipped_zero=len(a) - nz,
    )


# ---------------------------------------------------------------------------
# walk-forward validation

@dataclass(frozen=True)
class WalkForwardResult:
    project_id: str
    forecaster: str
    indices: np.ndarray
    actuals: np.ndarray
    predictions: np.ndarray
    metrics: MetricSet
    converged: bool
    failed_at: int = -1      # panel index of the first failing step, -1 if none


def walk_forward(panel, spec, initial_fraction=0.8, seed=0, full_refit=False):
    """Greedy one-step-ahead validation.

    Fit on the first floor(initial_fraction * n) rows, predict the next
    point, absorb the actual value, refit, repeat.  By default refits keep
    the structure found initially (order, variables) and only re-estimate
    coefficients; full_refit reruns the whole search each step.  A failing
    step yields a partial result carrying the failure index.
    """
    n = len(panel)
    k = int(math.floor(initial_fraction * n))
    if k < 1 or k >= n:
        raise ValidationError(f"initial fraction {initial_fraction} leaves no test points")
    indices, actuals, preds = [], [], []
    converged = True
    failed_at = -1
    try:
        forecaster = pipelines.fit_forecaster(spec, panel.head(k), seed=seed)
    except FitError:
        raise
    converged &= bool(forecaster.converged)
    for i in range(k, n):
        try:
            pred = forecaster.predict_next(panel.exog[i])
        except (FitError, ValidationError):
            failed_at = i
            break
        indices.append(i)
        actuals.append(float(panel.y[i]))
        preds.append(float(pred))
        if i + 1 < n:
            try:
                prefix = panel.head(i + 1)
                if full_refit:
                    forecaster = pipelines.fit_forecaster(spec, prefix, seed=seed)
                else:
                    forecaster = forecaster.refit(prefix)
            except (FitError, ValidationError):
                failed_at = i + 1
                break
            converged &= bool(forecaster.converged)
    if not actuals:
        raise EmptyResultError(f"{panel.project_id}/{spec.name}: no test predictions produced")
    metrics = compute_metrics(np.array(actuals), np.array(preds))
    return WalkForwardResult(
        project_id=panel.project_id, forecaster=spec.name,
        indices=np.array(indices), actuals=np.array(actuals),
        predictions=np.array(preds), metrics=metrics,
        converged=converged and failed_at < 0, failed_at=failed_at,
    )


# ---------------------------------------------------------------------------
# long-horizon evaluation (single fit, no retraining)

@dataclass(frozen=True)
class LongTermResult:
    project_id: str
    forecaster: str
    horizon_mape: np.ndarray   # NaN where the actual was zero (skipped)
    actuals: np.ndarray
    forecasts: np.ndarray


def long_term(panel, spec, train_fraction=0.7, max_h=None, seed=0, policy="held_out"):
    """Fit once on the first 70% and score each forecast step separately."""
    n = len(panel)
    k = int(math.floor(train_fraction * n))
    available = n - k
    if max_h is None:
        max_h = available
    if max_h < 1 or max_h > available:
        raise ValidationError(f"horizon {max_h} exceeds the {available}-point test window")
    forecaster = pipelines.fit_forecaster(spec, panel.head(k), seed=seed)
    if policy == "held_out":
        future_exog = panel.exog[k:k + max_h]
    elif policy == "self":
        future_exog = None
    else:
        raise ValidationError(f"unknown exog policy {policy!r}")
    forecasts = np.asarray(forecaster.forecast_horizon(max_h, future_exog=future_exog))
    actuals = panel.y[k:k + max_h]
    hm = np.full(max_h, np.nan)
    nz = actuals != 0.0
    hm[nz] = 100.0 * np.abs(actuals[nz] - forecasts[nz]) / np.abs(actuals[nz])
    return LongTermResult(project_id=panel.project_id, forecaster=spec.name,
                          horizon_mape=hm, actuals=actuals.copy(), forecasts=forecasts)


@dataclass(frozen=True)
class HorizonStats:
    periods: np.ndarray       # 1-based forecast steps with at least one project
    mean: np.ndarray
    median: np.ndarray
    max: np.ndarray
    min: np.ndarray
    variance: np.ndarray      # population variance, 0 for a single project
    counts: np.ndarray


def horizon_stats(per_project):
    """Distribution summaries of the per-project MAPE at each horizon step.

    Projects whose test window ends before step h simply drop out of the
    step-h statistics.
    """
    if not per_project:
        raise EmptyResultError("no projects to summarize")
    h_max = max(len(seq) for seq in per_project.values())
    periods, means, medians, maxs, mins, variances, counts = [], [], [], [], [], [], []
    for h in range(1, h_max + 1):
        vals = [seq[h - 1] for seq in per_project.values()
                if len(seq) >= h and np.isfinite(seq[h - 1])]
        if not vals:
            continue
        arr = np.array(vals, dtype=float)
        periods.append(h)
        means.append(arr.mean())
        medians.append(float(np.median(arr)))
        maxs.append(arr.max())
        mins.append(arr.min())
        variances.append(arr.var())
        counts.append(len(arr))
    if not periods:
        raise EmptyResultError("every horizon step was empty")
    return HorizonStats(
        periods=np.array(periods), mean=np.array(means), median=np.array(medians),
        max=np.array(maxs), min=np.array(mins), variance=np.array(variances),
        counts=np.array(counts),
    )


# ---------------------------------------------------------------------------
# aggregation across projects (the cross-model comparison tables)

def aggregate_results(results):
    """Per-forecaster means over the projects where every model converged.

    Returns (ordered {forecaster: MetricSet}, included project ids).
    Mirrors the rule of excluding a project from the comparison when any
    model failed on it.
    """
    projects = sorted({r.project_id for r in results})
    forecasters = list(dict.fromkeys(r.forecaster for r in results))
    bad = {r.project_id for r in results if not r.converged}
    included = [p for p in projects if p not in bad]
    if not included:
        raise EmptyResultError("no project converged for every model")
    out = {}
    for f in forecasters:
        rows = [r for r in results if r.forecaster == f and r.project_id in included]
        if len(rows) != len(included):
            raise ValidationError(f"missing results for forecaster {f}")
        out[f] = MetricSet(
            mape=float(np.mean([r.metrics.mape for r in rows])),
            mae=float(np.mean([r.metrics.mae for r in rows])),
            rmse=float(np.mean([r.metrics.rmse for r in rows])),
            n_scored=int(sum(r.metrics.n_scored for r in rows)),
            n_skipped_zero=int(sum(r.metrics.n_skipped_zero for r in rows)),
        )
    return out, included


# ---------------------------------------------------------------------------
# writers

def write_report_json(results, path, frequency):
    rows = [
        {
            "frequency": frequency,
            "forecaster": r.forecaster,
            "project": r.project_id,
            "mape": r.metrics.mape,
            "mae": r.metrics.mae,
            "rmse": r.metrics.rmse,
            "n_scored": r.metrics.n_scored,
            "n_skipped_zero": r.metrics.n_skipped_zero,
            "converged": r.converged,
        }
        for r in sorted(results, key=lambda r: (r.forecaster, r.project_id))
    ]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(rows, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_aggregate_csv(aggregates, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["APPROACH", "MAPE", "MAE", "RMSE"])
        for name, ms in aggregates.items():
            writer.writerow([name, repr(ms.mape), repr(ms.mae), repr(ms.rmse)])


def write_horizon_csv(stats, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["PERIOD", "MEAN", "MEDIAN", "MAX", "MIN", "VARIANCE"])
        for i, period in enumerate(stats.periods):
            writer.writerow([int(period), repr(float(stats.mean[i])),
                             repr(float(stats.median[i])), repr(float(stats.max[i])),
                             repr(float(stats.min[i])), repr(float(stats.variance[i]))])


def write_boxplot_csv(per_project, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["PERIOD", "PROJECT", "MAPE"])
        for project in sorted(per_project):
            seq = per_project[project]
            for h, value in enumerate(seq, start=1):
                if np.isfinite(value):
                    writer.writerow([h, project, repr(float(value))])
