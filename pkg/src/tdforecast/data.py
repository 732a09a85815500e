"""Snapshot ingestion, time serialization, interpolation and transforms.

Raw static-analysis exports are irregular: one row per analysis run, with
the remediation-effort index (SQALE_INDEX, minutes) plus one issue-count
column per rule.  This module turns them into regular biweekly or monthly
panels suitable for time-series modelling.
"""

from __future__ import annotations

import csv
import json
import math
import re
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta, timezone
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import EmptyResultError, ParseError, SchemaError, ValidationError

SQALE_KEY = "SQALE_INDEX"

_TZ_NO_COLON = re.compile(r"([+-]\d{2})(\d{2})$")

PANEL_MIN_FIT_LENGTH = 24  # time-series models need at least this many rows


class Frequency(Enum):
    BIWEEKLY = "biweekly"   # fixed 14-day windows anchored at the first snapshot
    MONTHLY = "monthly"     # calendar months


def parse_timestamp(text, row=None):
    """Parse an ISO-8601 instant; returns a naive UTC datetime."""
    s = text.strip().replace("Z", "+00:00")
    s = _TZ_NO_COLON.sub(r"\1:\2", s)
    try:
        dt = datetime.fromisoformat(s)
    except ValueError:
        where = f" (row {row})" if row is not None else ""
        raise ParseError(f"malformed timestamp {text!r}{where}") from None
    if dt.tzinfo is not None:
        dt = dt.astimezone(timezone.utc).replace(tzinfo=None)
    return dt


@dataclass(frozen=True)
class SnapshotLog:
    """Per-project irregular sequence of (timestamp, metric map)."""

    project_id: str
    snapshots: tuple  # of (datetime, dict metric -> float)

    def __post_init__(self):
        times = [t for t, _ in self.snapshots]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValidationError(f"{self.project_id}: timestamps not strictly increasing")
        for t, metrics in self.snapshots:
            if SQALE_KEY not in metrics:
                raise ValidationError(f"{self.project_id}: {SQALE_KEY} missing at {t}")
            for key, value in metrics.items():
                if not math.isfinite(value) or value < 0:
                    raise ValidationError(
                        f"{self.project_id}: metric {key}={value} at {t} must be finite and >= 0"
                    )

    @property
    def metric_keys(self):
        keys = set()
        for _, metrics in self.snapshots:
            keys.update(metrics)
        keys.discard(SQALE_KEY)
        return sorted(keys)


@dataclass(frozen=True)
class ProjectPanel:
    """Regular-frequency SQALE series plus the rule-count matrix.

    Rows produced by `serialize` may still contain NaN (periods without a
    snapshot); `interpolate_missing` removes them.  `interpolated_mask`
    marks rows whose values were synthesized.
    """

    project_id: str
    frequency: Frequency
    origin: datetime
    y: np.ndarray                 # shape (n,)
    exog: np.ndarray              # shape (n, k)
    column_names: tuple
    interpolated_mask: np.ndarray  # bool, shape (n,)
    exog_log_scale: bool = False   # True after log_transform (values are ln(1+count))

    def __post_init__(self):
        n = len(self.y)
        if self.exog.shape != (n, len(self.column_names)):
            raise ValidationError("exog shape does not match y length / column names")
        if len(self.interpolated_mask) != n:
            raise ValidationError("mask length does not match y length")

    def __len__(self):
        return len(self.y)

    @property
    def has_missing(self):
        return bool(np.isnan(self.y).any() or np.isnan(self.exog).any())

    def period_starts(self):
        if self.frequency is Frequency.BIWEEKLY:
            return [self.origin + timedelta(days=14 * i) for i in range(len(self))]
        return [add_months(self.origin, i) for i in range(len(self))]

    def head(self, n):
        """First n rows as a new panel (same origin)."""
        return replace(
            self,
            y=self.y[:n].copy(),
            exog=self.exog[:n].copy(),
            interpolated_mask=self.interpolated_mask[:n].copy(),
        )

    def with_columns(self, names):
        """Restrict the exogenous matrix to the given column names."""
        idx = [self.column_names.index(c) for c in names]
        return replace(self, exog=self.exog[:, idx].copy(), column_names=tuple(names))


@dataclass(frozen=True)
class DescriptiveStats:
    mean: float
    std: float
    min: float
    lower_quartile: float
    median: float
    upper_quartile: float
    max: float
    skewness: float


def add_months(dt, months):
    month_index = dt.year * 12 + (dt.month - 1) + months
    year, month = divmod(month_index, 12)
    return dt.replace(year=year, month=month + 1, day=1, hour=0, minute=0, second=0, microsecond=0)


def _month_start(dt):
    return dt.replace(day=1, hour=0, minute=0, second=0, microsecond=0)


def _row_to_metrics(row, columns, rownum, project):
    metrics = {}
    for key in columns:
        cell = (row.get(key) or "").strip()
        if cell == "":
            if key == SQALE_KEY:
                raise ValidationError(f"row {rownum}: {SQALE_KEY} is empty for project {project}")
            metrics[key] = 0.0  # absent count
            continue
        try:
            value = float(cell)
        except ValueError:
            raise ParseError(f"row {rownum}: cannot parse {key}={cell!r}") from None
        if not math.isfinite(value) or value < 0:
            raise ValidationError(f"row {rownum}: {key}={cell} must be finite and >= 0")
        metrics[key] = value
    return metrics


def load_snapshots(path, format=None):
    """Load snapshot logs from a wide CSV or a JSON array.

    Returns a list of SnapshotLog, one per project, sorted by project id.
    Rows are sorted by timestamp; duplicate timestamps collapse to the row
    appearing last in the file.
    """
    path = Path(path)
    if format is None:
        format = "json" if path.suffix.lower() == ".json" else "csv"
    if format == "csv":
        records = _read_csv_records(path)
    elif format == "json":
        records = _read_json_records(path)
    else:
        raise ValueError(f"unknown format {format!r}")

    by_project = {}
    for project, ts, metrics in records:
        by_project.setdefault(project, []).append((ts, metrics))

    logs = []
    for project in sorted(by_project):
        rows = by_project[project]
        rows.sort(key=lambda item: item[0])  # stable: file order kept within a timestamp
        collapsed = {}
        for ts, metrics in rows:
            collapsed[ts] = metrics  # last row wins
        snapshots = tuple(sorted(collapsed.items()))
        logs.append(SnapshotLog(project_id=project, snapshots=snapshots))
    return logs


def _read_csv_records(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for required in ("PROJECT", "ANALYSIS_DATE", SQALE_KEY):
            if required not in header:
                raise SchemaError(f"{path}: missing required column {required}")
        metric_cols = [c for c in header if c not in ("PROJECT", "ANALYSIS_DATE")]
        records = []
        for rownum, row in enumerate(reader, start=2):  # 1 is the header line
            project = (row.get("PROJECT") or "").strip()
            if not project:
                raise ValidationError(f"row {rownum}: empty PROJECT")
            ts = parse_timestamp(row.get("ANALYSIS_DATE") or "", row=rownum)
            records.append((project, ts, _row_to_metrics(row, metric_cols, rownum, project)))
    return records


def _read_json_records(path):
    with open(path, encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(payload, list):
        raise SchemaError(f"{path}: expected a JSON array of objects")
    records = []
    for i, obj in enumerate(payload, start=1):
        if "PROJECT" not in obj or "ANALYSIS_DATE" not in obj:
            raise SchemaError(f"entry {i}: PROJECT and ANALYSIS_DATE are required")
        if SQALE_KEY not in obj:
            raise SchemaError(f"entry {i}: missing {SQALE_KEY}")
        project = str(obj["PROJECT"])
        ts = parse_timestamp(str(obj["ANALYSIS_DATE"]), row=i)
        metric_cols = [k for k in obj if k not in ("PROJECT", "ANALYSIS_DATE")]
        row = {k: ("" if obj[k] is None else str(obj[k])) for k in metric_cols}
        records.append((project, ts, _row_to_metrics(row, metric_cols, i, project)))
    return records


def _window_index(ts, origin, freq):
    if freq is Frequency.BIWEEKLY:
        return int((ts - origin) // timedelta(days=14))
    return (ts.year * 12 + ts.month - 1) - (origin.year * 12 + origin.month - 1)


def serialize(log, freq):
    """Aggregate snapshots into regular periods; gaps stay NaN.

    A period holding several snapshots keeps the last one (the state
    closest to the period boundary).
    """
    if not log.snapshots:
        raise EmptyResultError(f"{log.project_id}: no snapshots to serialize")
    columns = tuple(log.metric_keys)
    first_ts = log.snapshots[0][0]
    last_ts = log.snapshots[-1][0]
    origin = first_ts if freq is Frequency.BIWEEKLY else _month_start(first_ts)
    n = _window_index(last_ts, origin, freq) + 1

    y = np.full(n, np.nan)
    exog = np.full((n, len(columns)), np.nan)
    for ts, metrics in log.snapshots:  # ascending, so the last in a window wins
        i = _window_index(ts, origin, freq)
        y[i] = metrics[SQALE_KEY]
        exog[i] = [metrics.get(c, 0.0) for c in columns]

    return ProjectPanel(
        project_id=log.project_id,
        frequency=freq,
        origin=origin,
        y=y,
        exog=exog,
        column_names=columns,
        interpolated_mask=np.zeros(n, dtype=bool),
    )


def interpolate_missing(panel):
    """Fill interior gaps column-wise by linear interpolation.

    Leading/trailing missing rows are trimmed, never extrapolated.  Already
    complete panels come back unchanged (the operation is idempotent).
    """
    observed = ~np.isnan(panel.y)
    if observed.sum() < 2:
        raise ValidationError(f"{panel.project_id}: need >= 2 observed rows to interpolate")
    first = int(np.argmax(observed))
    last = int(len(observed) - 1 - np.argmax(observed[::-1]))

    idx = np.arange(first, last + 1)
    y = panel.y[first:last + 1].copy()
    exog = panel.exog[first:last + 1].copy()
    mask = panel.interpolated_mask[first:last + 1].copy()
    missing = np.isnan(y)
    if missing.any():
        obs_idx = idx[~missing]
        y[missing] = np.interp(idx[missing], obs_idx, y[~missing])
        for j in range(exog.shape[1]):
            col = exog[:, j]
            col_missing = np.isnan(col)
            if col_missing.any():
                col[col_missing] = np.interp(idx[col_missing], idx[~col_missing], col[~col_missing])
        mask = mask | missing

    origin = panel.origin
    if first > 0:
        origin = panel.period_starts()[first]
    return replace(panel, origin=origin, y=y, exog=exog, interpolated_mask=mask)


def log_transform(panel):
    """Map every exogenous column x -> ln(1 + x); y is untouched.

    Rule counts are frequently zero, so ln(1+x) keeps zeros at zero.  The
    panel records the transform so downstream reports can invert it.
    """
    if panel.exog.size and np.nanmin(panel.exog) < 0:
        raise ValidationError(f"{panel.project_id}: negative exogenous value")
    return replace(panel, exog=np.log1p(panel.exog), exog_log_scale=True)


def inverse_log_transform(panel):
    if not panel.exog_log_scale:
        return panel
    return replace(panel, exog=np.expm1(panel.exog), exog_log_scale=False)


def describe(values):
    """Descriptive statistics in the style of the usual summary tables.

    Quartiles interpolate linearly between closest ranks; skewness is the
    Fisher-Pearson moment coefficient g1, defined as 0 for constant input.
    """
    x = np.asarray(values, dtype=float)
    if x.size < 2:
        raise ValidationError("describe needs at least 2 values")
    m2 = np.mean((x - x.mean()) ** 2)
    if m2 == 0:
        skew = 0.0
    else:
        skew = float(np.mean((x - x.mean()) ** 3) / m2 ** 1.5)
    q1, q2, q3 = np.percentile(x, [25, 50, 75])
    return DescriptiveStats(
        mean=float(x.mean()),
        std=float(x.std(ddof=1)),
        min=float(x.min()),
        lower_quartile=float(q1),
        median=float(q2),
        upper_quartile=float(q3),
        max=float(x.max()),
        skewness=skew,
    )


def write_panel_csv(panel, path):
    """Export a panel as PERIOD_START,INTERPOLATED,SQALE_INDEX,<rules...>."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["PERIOD_START", "INTERPOLATED", SQALE_KEY, *panel.column_names])
        for i, start in enumerate(panel.period_starts()):
            row = [start.isoformat(), int(panel.interpolated_mask[i])]
            row.append("" if np.isnan(panel.y[i]) else repr(float(panel.y[i])))
            row.extend("" if np.isnan(v) else repr(float(v)) for v in panel.exog[i])
            writer.writerow(row)


def read_panel_csv(path, project_id=None, frequency=None):
    """Read back a panel written by write_panel_csv.

    Frequency is inferred from the period spacing when not given; the
    project id defaults to the file stem.
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[:3] != ["PERIOD_START", "INTERPOLATED", SQALE_KEY]:
            raise SchemaError(f"{path}: not a panel CSV (bad header)")
        columns = tuple(header[3:])
        starts, ys, rows, mask = [], [], [], []
        for rownum, row in enumerate(reader, start=2):
            if not row:
                continue
            starts.append(parse_timestamp(row[0], row=rownum))
            mask.append(row[1].strip() in ("1", "true", "True"))
            ys.append(float(row[2]) if row[2].strip() != "" else np.nan)
            rows.append([float(c) if c.strip() != "" else np.nan for c in row[3:]])
    if not starts:
        raise EmptyResultError(f"{path}: empty panel")
    if frequency is None:
        frequency = _infer_frequency(starts)
    return ProjectPanel(
        project_id=project_id or path.stem,
        frequency=frequency,
        origin=starts[0],
        y=np.array(ys),
        exog=np.array(rows).reshape(len(starts), len(columns)),
        column_names=columns,
        interpolated_mask=np.array(mask, dtype=bool),
    )


def _infer_frequency(starts):
    if len(starts) < 2:
        return Frequency.MONTHLY
    delta = starts[1] - starts[0]
    return Frequency.BIWEEKLY if delta == timedelta(days=14) else Frequency.MONTHLY
