import math

import numpy as np
import pytest
from datetime import datetime
from hypothesis import given, settings, strategies as st

from tdforecast import evaluation as ev
from tdforecast import pipelines
from tdforecast.data import Frequency, ProjectPanel
from tdforecast.errors import ValidationError


def test_mape_worked_example():
    assert ev.mape([100, 200], [110, 190]) == pytest.approx(7.5, abs=1e-12)


def test_mape_identity_and_zero_skip():
    assert ev.mape([3.0, 4.0], [3.0, 4.0]) == 0.0
    ms = ev.compute_metrics([0.0, 100.0], [5.0, 110.0])
    assert ms.mape == pytest.approx(10.0)
    assert ms.n_skipped_zero == 1
    assert ms.n_scored == 1


def test_mape_all_zero_errors():
    with pytest.raises(ValidationError):
        ev.mape([0.0, 0.0], [1.0, 2.0])


def test_mae_examples():
    assert ev.mae([100, 200], [110, 190]) == 10
    assert ev.mae([5.0], [12.0]) == 7
    assert ev.mae([1.0, 2.0], [1.0, 2.0]) == 0


def test_rmse_examples():
    assert ev.rmse([0, 0], [3, 4]) == pytest.approx(math.sqrt(12.5))
    assert ev.rmse([1.0], [1.0]) == 0
    assert ev.rmse([10, 20, 30], [12, 22, 32]) == pytest.approx(2.0)


@given(st.lists(st.tuples(st.floats(-1e6, 1e6), st.floats(-1e6, 1e6)),
                min_size=1, max_size=50))
@settings(max_examples=100, deadline=None)
def test_rmse_at_least_mae(pairs):
    a = np.array([p[0] for p in pairs])
    p = np.array([p[1] for p in pairs])
    assert ev.rmse(a, p) >= ev.mae(a, p) - 1e-9


@given(st.lists(st.tuples(st.floats(1, 1e4), st.floats(-1e4, 1e4)),
                min_size=1, max_size=30),
       st.floats(0.01, 100))
@settings(max_examples=60, deadline=None)
def test_metric_scaling_properties(pairs, c):
    a = np.array([p[0] for p in pairs])
    p = np.array([p[1] for p in pairs])
    assert ev.mae(c * a, c * p) == pytest.approx(c * ev.mae(a, p), rel=1e-9)
    assert ev.rmse(c * a, c * p) == pytest.approx(c * ev.rmse(a, p), rel=1e-9)
    assert ev.mape(c * a, c * p) == pytest.approx(ev.mape(a, p), rel=1e-9)


def _panel(y, exog=None, columns=("R",), freq=Frequency.BIWEEKLY):
    y = np.asarray(y, dtype=float)
    if exog is None:
        exog = np.abs(y)[:, None] + 1.0
    return ProjectPanel(
        project_id="p", frequency=freq, origin=datetime(2020, 1, 1),
        y=y, exog=np.asarray(exog, dtype=float), column_names=tuple(columns),
        interpolated_mask=np.zeros(len(y), dtype=bool),
    )


def test_walk_forward_naive_worked_example():
    panel = _panel(np.arange(1.0, 11.0))
    res = ev.walk_forward(panel, pipelines.parse_spec("naive"))
    assert list(res.predictions) == [8.0, 9.0]
    expected = 100.0 * (1.0 / 9.0 + 1.0 / 10.0) / 2.0
    assert res.metrics.mape == pytest.approx(expected, abs=1e-9)


def test_walk_forward_test_count():
    for n in (10, 25, 31):
        panel = _panel(np.arange(1.0, n + 1.0))
        res = ev.walk_forward(panel, pipelines.parse_spec("naive"))
        assert len(res.predictions) == n - math.floor(0.8 * n)


def test_walk_forward_matches_hand_rolled_loop():
    rng = np.random.default_rng(5)
    y = np.abs(np.cumsum(rng.standard_normal(40))) + 5.0
    panel = _panel(y)
    res = ev.walk_forward(panel, pipelines.parse_spec("naive"))

    # independent duplicate loop for the naive forecaster
    k = math.floor(0.8 * len(y))
    preds, actuals = [], []
    for i in range(k, len(y)):
        preds.append(y[i - 1])  # last observed value
        actuals.append(y[i])
    assert np.array_equal(res.predictions, np.array(preds))
    assert res.metrics.mape == pytest.approx(ev.mape(actuals, preds), abs=0)
    assert res.metrics.mae == pytest.approx(ev.mae(actuals, preds), abs=0)
    assert res.metrics.rmse == pytest.approx(ev.rmse(actuals, preds), abs=0)


def test_walk_forward_partial_on_failure(monkeypatch):
    panel = _panel(np.arange(1.0, 21.0))
    spec = pipelines.parse_spec("naive")
    calls = {"n": 0}
    original = pipelines._NaiveForecaster.refit

    def failing_refit(self, panel_prefix):
        calls["n"] += 1
        if calls["n"] >= 2:
            from tdforecast.errors import FitError
            raise FitError("synthetic failure")
        return original(self, panel_prefix)

    monkeypatch.setattr(pipelines._NaiveForecaster, "refit", failing_refit)
    res = ev.walk_forward(panel, spec)
    assert res.failed_at > 0
    assert not res.converged
    assert len(res.predictions) == 2  # got two steps in before the failure


def test_long_term_window_checks():
    panel = _panel(np.arange(1.0, 31.0))
    with pytest.raises(ValidationError):
        ev.long_term(panel, pipelines.parse_spec("naive"), max_h=100)


def test_long_term_exact_model_gives_zero():
    panel = _panel(np.full(30, 42.0))
    res = ev.long_term(panel, pipelines.parse_spec("naive"), max_h=5)
    np.testing.assert_allclose(res.horizon_mape, 0.0, atol=1e-12)


def test_long_term_h1_is_single_point_mape():
    rng = np.random.default_rng(1)
    y = np.abs(rng.standard_normal(30)) + 10
    panel = _panel(y)
    res = ev.long_term(panel, pipelines.parse_spec("naive"), max_h=1)
    k = math.floor(0.7 * 30)
    expected = 100.0 * abs(y[k] - y[k - 1]) / y[k]
    assert res.horizon_mape[0] == pytest.approx(expected)


def test_horizon_stats_single_project():
    stats = ev.horizon_stats({"p": np.array([5.0, 7.0])})
    assert stats.mean[0] == stats.median[0] == stats.max[0] == stats.min[0] == 5.0
    assert stats.variance[0] == 0.0


def test_horizon_stats_dropout():
    stats = ev.horizon_stats({
        "a": np.array([1.0, 2.0, 3.0]),
        "b": np.array([3.0]),
    })
    assert list(stats.periods) == [1, 2, 3]
    assert stats.mean[0] == 2.0          # both projects
    assert stats.mean[1] == 2.0          # only project a remains
    assert list(stats.counts) == [2, 1, 1]


def test_horizon_stats_skips_nan():
    stats = ev.horizon_stats({"a": np.array([np.nan, 2.0]), "b": np.array([4.0, 6.0])})
    assert stats.mean[0] == 4.0
    assert stats.mean[1] == 4.0


def test_aggregate_mean_recompute():
    rows = []
    rng = np.random.default_rng(3)
    for project in ("a", "b", "c"):
        for model in ("m1", "m2"):
            actual = np.abs(rng.standard_normal(5)) + 1
            pred = actual + rng.standard_normal(5) * 0.1
            rows.append(ev.WalkForwardResult(
                project_id=project, forecaster=model,
                indices=np.arange(5), actuals=actual, predictions=pred,
                metrics=ev.compute_metrics(actual, pred), converged=True))
    aggs, included = ev.aggregate_results(rows)
    assert included == ["a", "b", "c"]
    manual = np.mean([r.metrics.mape for r in rows if r.forecaster == "m1"])
    assert aggs["m1"].mape == pytest.approx(manual, abs=1e-9)


def test_aggregate_excludes_nonconverged_projects():
    def row(project, model, converged=True):
        a = np.array([10.0, 20.0])
        p = a + 1
        return ev.WalkForwardResult(project_id=project, forecaster=model,
                                    indices=np.arange(2), actuals=a, predictions=p,
                                    metrics=ev.compute_metrics(a, p), converged=converged)

    rows = [row("a", "m1"), row("a", "m2"),
            row("b", "m1", converged=False), row("b", "m2")]
    aggs, included = ev.aggregate_results(rows)
    assert included == ["a"]


def test_writers_schemas(tmp_path):
    a = np.array([10.0, 20.0])
    p = a + 1
    rows = [ev.WalkForwardResult(project_id="a", forecaster="naive",
                                 indices=np.arange(2), actuals=a, predictions=p,
                                 metrics=ev.compute_metrics(a, p), converged=True)]
    report = tmp_path / "report.json"
    ev.write_report_json(rows, report, "biweekly")
    import json
    payload = json.loads(report.read_text())
    assert set(payload[0]) == {"frequency", "forecaster", "project", "mape", "mae",
                               "rmse", "n_scored", "n_skipped_zero", "converged"}

    aggs, _ = ev.aggregate_results(rows)
    agg_csv = tmp_path / "aggregate.csv"
    ev.write_aggregate_csv(aggs, agg_csv)
    assert agg_csv.read_text().splitlines()[0] == "APPROACH,MAPE,MAE,RMSE"

    stats = ev.horizon_stats({"a": np.array([1.0, 2.0])})
    hz = tmp_path / "horizon.csv"
    ev.write_horizon_csv(stats, hz)
    assert hz.read_text().splitlines()[0] == "PERIOD,MEAN,MEDIAN,MAX,MIN,VARIANCE"

    bp = tmp_path / "boxplot.csv"
    ev.write_boxplot_csv({"a": np.array([1.0, np.nan])}, bp)
    lines = bp.read_text().splitlines()
    assert lines[0] == "PERIOD,PROJECT,MAPE"
    assert len(lines) == 2  # NaN rows are omitted
