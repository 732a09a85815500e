"""Command-line interface: serialize -> select -> evaluate / horizon / forecast.

Exit codes: 0 success (possibly with warnings), 2 bad input, 3 empty
result, 4 internal failure.  Every output directory gets a run manifest;
re-running with the same seed and inputs reproduces the report files
byte for byte.
"""

from __future__ import annotations

import concurrent.futures
import functools
import hashlib
import json
import sys
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path

import click
import numpy as np

from . import __version__, baselines, evaluation, featsel, pipelines, sarimax
from .data import Frequency, interpolate_missing, load_snapshots, read_panel_csv, serialize as serialize_log, write_panel_csv
from .errors import EmptyResultError, InputError, TdforecastError, ValidationError

DEFAULT_M = {"monthly": 12, "biweekly": 26}
DEFAULT_MAX_H = {"monthly": 36, "biweekly": 72}


@dataclass(frozen=True)
class RunManifest:
    version: str
    seed: int
    command: str
    params: dict
    input_digests: dict
    timestamp: str


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(outdir, command, seed, params, inputs):
    manifest = RunManifest(
        version=__version__,
        seed=seed,
        command=command,
        params=params,
        input_digests={str(p): _sha256(p) for p in sorted(map(str, inputs))},
        timestamp=datetime.now(timezone.utc).isoformat(),
    )
    path = Path(outdir) / "manifest.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(asdict(manifest), fh, indent=2, sort_keys=True)
        fh.write("\n")


def exit_codes(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except InputError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)
        except EmptyResultError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(3)
        except TdforecastError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(4)
    return wrapper


def _cell_seed(master, project_index, model_index):
    ss = np.random.SeedSequence([master, project_index, model_index])
    return int(ss.generate_state(1)[0])


def _project_id_from_path(path):
    stem = Path(path).stem
    for suffix in ("_biweekly", "_monthly"):
        if stem.endswith(suffix):
            return stem[: -len(suffix)]
    return stem


def _load_panels(paths, selection=None, freq=None):
    panels = []
    for p in paths:
        panel = read_panel_csv(p, project_id=_project_id_from_path(p))
        if freq is not None and panel.frequency.value != freq:
            raise ValidationError(f"{p}: panel looks {panel.frequency.value}, expected {freq}")
        if panel.has_missing:
            panel = interpolate_missing(panel)
        if selection:
            keep = [c for c in panel.column_names if c in selection]
            if not keep:
                raise ValidationError(f"{p}: none of the selected columns are present")
            panel = panel.with_columns(keep)
        panels.append(panel)
    return sorted(panels, key=lambda pn: pn.project_id)


def _read_selection(path):
    if path is None:
        return None
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    return set(payload["kept"])


def _read_hyper(path):
    if path is None:
        return {}
    return baselines.parse_hyper_overrides(Path(path).read_text(encoding="utf-8"))


@click.group()
@click.version_option(__version__)
def main():
    """Forecast code technical debt (SQALE index) from analysis snapshots."""


@main.command("serialize")
@click.argument("input_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default=None,
              help="Input format (default: by file extension).")
@click.option("--freq", type=click.Choice(["biweekly", "monthly"]), required=True)
@click.option("--out", type=click.Path(file_okay=False), required=True)
@exit_codes
def cmd_serialize(input_file, fmt, freq, out):
    """Turn a snapshot export into one interpolated panel CSV per project."""
    outdir = Path(out)
    outdir.mkdir(parents=True, exist_ok=True)
    frequency = Frequency(freq)
    logs = load_snapshots(input_file, format=fmt)
    if not logs:
        raise EmptyResultError(f"{input_file}: no projects found")
    summary = {}
    for log in logs:
        panel = interpolate_missing(serialize_log(log, frequency))
        path = outdir / f"{log.project_id}_{freq}.csv"
        write_panel_csv(panel, path)
        summary[log.project_id] = {
            "periods": len(panel),
            "interpolated": int(panel.interpolated_mask.sum()),
            "file": path.name,
        }
        click.echo(f"{log.project_id}: {len(panel)} periods "
                   f"({summary[log.project_id]['interpolated']} interpolated)")
    with open(outdir / "interpolation_summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_manifest(outdir, "serialize", 0, {"freq": freq, "format": fmt}, [input_file])


@main.command("select")
@click.argument("panels", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--variance-threshold", default=featsel.DEFAULT_VARIANCE_THRESHOLD, show_default=True)
@click.option("--max-zero-fraction", default=featsel.DEFAULT_MAX_ZERO_FRACTION, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@exit_codes
def cmd_select(panels, variance_threshold, max_zero_fraction, seed, out):
    """Consensus feature selection over the pooled panels."""
    loaded = _load_panels(panels)
    pooled = _pool_panels(loaded)
    result = featsel.select_features(
        pooled, variance_threshold=variance_threshold,
        max_zero_fraction=max_zero_fraction, seed=seed)
    featsel.write_selection_report(result, out)
    click.echo(f"kept {len(result.kept)} columns ({result.mode}): "
               f"{', '.join(sorted(result.kept))}")
    outdir = Path(out).parent
    _write_manifest(outdir, "select", seed,
                    {"variance_threshold": variance_threshold,
                     "max_zero_fraction": max_zero_fraction},
                    list(panels))


def _pool_panels(panels):
    """Stack rows of panels sharing a column set (for pooled selection)."""
    from dataclasses import replace

    base = panels[0]
    for p in panels[1:]:
        if p.column_names != base.column_names:
            raise ValidationError("panels have different column sets; "
                                  "re-serialize from one export")
    return replace(
        base,
        y=np.concatenate([p.y for p in panels]),
        exog=np.vstack([p.exog for p in panels]),
        interpolated_mask=np.concatenate([p.interpolated_mask for p in panels]),
        project_id="+".join(p.project_id for p in panels),
    )


@main.command("evaluate")
@click.argument("panels", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--models", required=True, help="Comma list, e.g. arimax,sarimax:m=12,rf,naive")
@click.option("--freq", type=click.Choice(["biweekly", "monthly"]), default=None,
              help="Assert panel frequency and pick the default seasonal period.")
@click.option("--criterion", type=click.Choice(["aic", "bic"]), default="aic", show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--initial-train", default=0.8, show_default=True)
@click.option("--selection", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--config", "config_file", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--full-refit", is_flag=True, help="Re-run the whole search at every step.")
@click.option("--fast", is_flag=True, help="Freeze orders after the first search.")
@click.option("--threads", default=1, show_default=True, envvar="TDFORECAST_THREADS")
@click.option("--out", type=click.Path(file_okay=False), required=True)
@exit_codes
def cmd_evaluate(panels, models, freq, criterion, seed, initial_train, selection,
                 config_file, full_refit, fast, threads, out):
    """Walk-forward evaluation; writes report.json and aggregate.csv."""
    outdir = Path(out)
    outdir.mkdir(parents=True, exist_ok=True)
    selected = _read_selection(selection)
    hyper = _read_hyper(config_file)
    loaded = _load_panels(panels, selection=selected, freq=freq)
    model_names = [m.strip() for m in models.split(",") if m.strip()]
    default_m = DEFAULT_M.get(freq or loaded[0].frequency.value)
    specs = [pipelines.parse_spec(m, default_m=default_m, criterion=criterion,
                                  fast=fast, hyper=hyper) for m in model_names]

    cells = [(pi, mi) for pi in range(len(loaded)) for mi in range(len(specs))]

    def run_cell(cell):
        pi, mi = cell
        return evaluation.walk_forward(
            loaded[pi], specs[mi], initial_fraction=initial_train,
            seed=_cell_seed(seed, pi, mi), full_refit=full_refit)

    results = _parallel_map(run_cell, cells, threads)
    for r in results:
        if not r.converged:
            click.echo(f"warning: {r.project_id}/{r.forecaster} did not converge"
                       + (f" (failed at step {r.failed_at})" if r.failed_at >= 0 else ""),
                       err=True)
    evaluation.write_report_json(results, outdir / "report.json",
                                 (freq or loaded[0].frequency.value))
    aggregates, included = evaluation.aggregate_results(results)
    ordered = {spec.name: aggregates[spec.name] for spec in specs if spec.name in aggregates}
    evaluation.write_aggregate_csv(ordered, outdir / "aggregate.csv")
    click.echo(f"aggregated over {len(included)} project(s): {', '.join(included)}")
    _write_manifest(outdir, "evaluate", seed,
                    {"models": model_names, "criterion": criterion, "freq": freq,
                     "initial_train": initial_train, "full_refit": full_refit,
                     "fast": fast, "selection": selection and str(selection),
                     "exog_policy": "held_out_actuals"},
                    list(panels))


def _parallel_map(fn, items, threads):
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


@main.command("horizon")
@click.argument("panels", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--model", default="arimax", show_default=True)
@click.option("--max-h", default=None, type=int,
              help="Forecast window (default: 36 monthly / 72 biweekly, capped).")
@click.option("--train-frac", default=0.7, show_default=True)
@click.option("--freq", type=click.Choice(["biweekly", "monthly"]), default=None)
@click.option("--criterion", type=click.Choice(["aic", "bic"]), default="aic", show_default=True)
@click.option("--policy", type=click.Choice(["held_out", "self"]), default="held_out",
              show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--selection", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--out", type=click.Path(file_okay=False), required=True)
@exit_codes
def cmd_horizon(panels, model, max_h, train_frac, freq, criterion, policy, seed,
                selection, out):
    """Long-horizon forecasting; writes horizon.csv and boxplot.csv."""
    outdir = Path(out)
    outdir.mkdir(parents=True, exist_ok=True)
    selected = _read_selection(selection)
    loaded = _load_panels(panels, selection=selected, freq=freq)
    freq_value = freq or loaded[0].frequency.value
    default_m = DEFAULT_M.get(freq_value)
    spec = pipelines.parse_spec(model, default_m=default_m, criterion=criterion)
    cap = DEFAULT_MAX_H[freq_value]
    per_project = {}
    for pi, panel in enumerate(loaded):
        window = len(panel) - int(train_frac * len(panel))
        h = min(max_h or cap, window) if max_h is None else max_h
        if max_h is None:
            h = min(cap, window)
        result = evaluation.long_term(panel, spec, train_fraction=train_frac,
                                      max_h=h, seed=_cell_seed(seed, pi, 0),
                                      policy=policy)
        per_project[panel.project_id] = result.horizon_mape
    stats = evaluation.horizon_stats(per_project)
    evaluation.write_horizon_csv(stats, outdir / "horizon.csv")
    evaluation.write_boxplot_csv(per_project, outdir / "boxplot.csv")
    click.echo(f"horizon stats over {len(per_project)} project(s), "
               f"steps 1..{int(stats.periods[-1])}")
    _write_manifest(outdir, "horizon", seed,
                    {"model": model, "max_h": max_h, "train_frac": train_frac,
                     "criterion": criterion, "exog_policy": policy,
                     "selection": selection and str(selection)},
                    list(panels))


@main.command("forecast")
@click.argument("source", type=click.Path(exists=True, dir_okay=False))
@click.option("--h", "horizon", default=12, show_default=True)
@click.option("--model", default="arimax", show_default=True,
              help="Forecaster spec (panel input only).")
@click.option("--policy", type=click.Choice(["held_out", "self"]), default="self",
              show_default=True)
@click.option("--initial-train", default=1.0, show_default=True,
              help="Fit on this fraction; < 1 enables held_out policy checks.")
@click.option("--criterion", type=click.Choice(["aic", "bic"]), default="aic", show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@exit_codes
def cmd_forecast(source, horizon, model, policy, initial_train, criterion, seed, out):
    """Forecast from a saved model JSON or a panel CSV.

    Writes STEP,FORECAST,LO95,HI95 rows (Gaussian bands).
    """
    source = Path(source)
    if source.suffix.lower() == ".json":
        fitted, _ = sarimax.load_model(source)
        values, sigma = _forecast_saved_model(fitted, horizon, criterion)
    else:
        values, sigma = _forecast_panel(source, horizon, model, policy,
                                        initial_train, criterion, seed)
    _write_forecast_csv(values, sigma, out)
    click.echo(f"wrote {horizon}-step forecast to {out}")


def _forecast_saved_model(fitted, h, criterion):
    from . import search as search_mod

    if fitted.n_exog:
        config = search_mod.SearchConfig(criterion=criterion)
        cols = []
        for j in range(fitted.n_exog):
            col_fit, _ = search_mod.auto_arima(fitted._train_exog[:, j], None, config)
            cols.append(sarimax.forecast(col_fit, h))
        future = np.column_stack(cols)
        values = sarimax.forecast(fitted, h, future_exog=future)
    else:
        values = sarimax.forecast(fitted, h)
    return values, sarimax.forecast_std(fitted, h)


def _forecast_panel(path, h, model, policy, initial_train, criterion, seed):
    panel = _load_panels([path])[0]
    n = len(panel)
    k = int(initial_train * n)
    if k < 1:
        raise ValidationError("initial-train leaves no training data")
    spec = pipelines.parse_spec(model, default_m=DEFAULT_M.get(panel.frequency.value),
                                criterion=criterion)
    forecaster = pipelines.fit_forecaster(spec, panel.head(k), seed=seed)
    if policy == "held_out":
        if k + h > n:
            raise ValidationError(
                f"held_out policy needs {h} rows beyond the training window")
        future = panel.exog[k:k + h]
    else:
        future = None
    values = np.asarray(forecaster.forecast_horizon(h, future_exog=future))
    fitted = getattr(forecaster, "fitted", None)
    if fitted is not None:
        sigma = sarimax.forecast_std(fitted, h)
    else:
        sigma = np.full(h, _training_residual_std(forecaster, panel, k))
    return values, sigma


def _training_residual_std(forecaster, panel, k):
    """Constant Gaussian band width for the non-ARIMA forecasters."""
    try:
        reg = getattr(forecaster, "reg", None)
        if reg is not None:
            train = panel.head(k)
            exog = train.exog[:, [train.column_names.index(c) for c in forecaster.selected]]
            resid = train.y - reg.predict(exog)
            return float(resid.std())
        lm = getattr(forecaster, "lm", None)
        if lm is not None:
            train = panel.head(k)
            exog = train.exog[:, [train.column_names.index(c) for c in forecaster.selected]]
            resid = train.y - lm.predict(exog)
            return float(resid.std())
    except Exception:
        pass
    return float(np.diff(panel.y[:k]).std()) if k > 2 else 0.0


def _write_forecast_csv(values, sigma, out):
    import csv

    with open(out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["STEP", "FORECAST", "LO95", "HI95"])
        for i, value in enumerate(values, start=1):
            half = 1.96 * float(sigma[i - 1])
            writer.writerow([i, repr(float(value)), repr(float(value) - half),
                             repr(float(value) + half)])


if __name__ == "__main__":
    main()
