"""Named forecasting approaches behind one predict/refit interface.

arimax / sarimax: backward variable selection + order search, one joint
model.  arima_lm / sarima_lm: a univariate model per exogenous column plus
a linear map onto the target.  The ML names adapt the regression baselines
to the walk-forward contract (they consume the actual next-period exog
row).  "naive" repeats the last observed value and exists as the reference
forecaster.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import baselines, sarimax, search
from .errors import FitError, ValidationError

TSA_NAMES = ("arimax", "sarimax", "arima_lm", "sarima_lm")
ML_NAMES = baselines.KINDS
FORECASTER_NAMES = (*TSA_NAMES, *ML_NAMES, "naive")


@dataclass(frozen=True)
class ForecasterSpec:
    name: str
    m: int = 1
    criterion: str = "aic"
    stepwise: bool = True
    fast: bool = False
    columns: tuple = None     # None = use every panel column
    hyper: tuple = ()         # ML hyperparameter overrides as (key, value) pairs

    def __post_init__(self):
        if self.name not in FORECASTER_NAMES:
            raise ValidationError(f"unknown forecaster {self.name!r}")
        if self.name in ("sarimax", "sarima_lm") and self.m < 2:
            raise ValidationError(f"{self.name} needs a seasonal period m >= 2")

    def search_config(self):
        seasonal = self.name in ("sarimax", "sarima_lm")
        return search.SearchConfig(seasonal=seasonal, m=self.m if seasonal else 1,
                                   criterion=self.criterion, stepwise=self.stepwise,
                                   fast=self.fast)

    def hyper_dict(self):
        return dict(self.hyper)


def parse_spec(text, default_m=None, criterion="aic", fast=False, hyper=None):
    """Parse CLI forecaster strings like "arimax", "sarimax:m=12", "rf"."""
    name, _, rest = text.strip().partition(":")
    kwargs = {"name": name, "criterion": criterion, "fast": fast}
    if default_m is not None and name in ("sarimax", "sarima_lm"):
        kwargs["m"] = default_m
    for part in filter(None, rest.split(",")):
        key, _, value = part.partition("=")
        key = key.strip()
        if key == "m":
            kwargs["m"] = int(value)
        elif key == "criterion":
            kwargs["criterion"] = value.strip()
        else:
            raise ValidationError(f"unknown spec option {key!r} in {text!r}")
    if hyper and name in baselines.KINDS:
        kwargs["hyper"] = tuple(sorted(hyper.get(name, {}).items()))
    return ForecasterSpec(**kwargs)


def _panel_columns(spec, panel):
    if spec.columns is None:
        return tuple(panel.column_names)
    missing = [c for c in spec.columns if c not in panel.column_names]
    if missing:
        raise ValidationError(f"panel {panel.project_id} lacks columns {missing}")
    return tuple(spec.columns)


def _exog_matrix(panel, columns):
    if not columns:
        return None
    idx = [panel.column_names.index(c) for c in columns]
    return panel.exog[:, idx]


def _row_subset(row, panel_columns, columns):
    row = np.asarray(row, dtype=float)
    idx = [panel_columns.index(c) for c in columns]
    return row[idx]


def fit_forecaster(spec, panel, seed=0):
    """Run the full fitting procedure for `spec` on a training panel."""
    if panel.has_missing:
        raise ValidationError(f"panel {panel.project_id} still has missing rows")
    try:
        if spec.name in ("arimax", "sarimax"):
            return _SarimaxForecaster.fit(spec, panel, seed)
        if spec.name in ("arima_lm", "sarima_lm"):
            return _EnsembleForecaster.fit(spec, panel, seed)
        if spec.name == "naive":
            return _NaiveForecaster.fit(spec, panel, seed)
        return _RegressorForecaster.fit(spec, panel, seed)
    except (FitError, ValidationError) as exc:
        raise FitError(f"{spec.name} on {panel.project_id}: {exc}") from exc


def _univariate_forecasts(series_map, columns, config_m, criterion, h, seasonal):
    """Self-forecast each exog column with its own univariate model."""
    out = np.empty((h, len(columns)))
    for j, name in enumerate(columns):
        fit = series_map[name]
        out[:, j] = sarimax.forecast(fit, h)
    return out


@dataclass(frozen=True)
class _SarimaxForecaster:
    spec: ForecasterSpec
    panel_columns: tuple
    selected: tuple
    fitted: sarimax.FittedSarimax
    trace: search.SearchTrace
    _exog_models: dict = field(default_factory=dict, compare=False)

    @classmethod
    def fit(cls, spec, panel, seed):
        cols = _panel_columns(spec, panel)
        config = spec.search_config()
        if cols:
            selected, fitted, trace = search.backward_select(
                panel.y, _exog_matrix(panel, cols), list(cols), config)
        else:
            fitted, trace = search.auto_arima(panel.y, None, config)
            selected = []
        return cls(spec=spec, panel_columns=tuple(panel.column_names),
                   selected=tuple(selected), fitted=fitted, trace=trace)

    @property
    def converged(self):
        return self.fitted.converged

    def refit(self, panel):
        exog = _exog_matrix(panel, self.selected)
        fitted = sarimax.fit(panel.y, exog, self.fitted.order,
                             with_intercept=self.fitted.with_intercept)
        return replace(self, fitted=fitted, _exog_models={})

    def predict_next(self, next_exog_row=None):
        if self.selected:
            if next_exog_row is None:
                row = self._self_forecast_exog(1)[0]
            else:
                row = _row_subset(next_exog_row, self.panel_columns, self.selected)
            return float(sarimax.forecast(self.fitted, 1, future_exog=row[None, :])[0])
        return float(sarimax.forecast(self.fitted, 1)[0])

    def forecast_horizon(self, h, future_exog=None):
        if not self.selected:
            return sarimax.forecast(self.fitted, h)
        if future_exog is None:
            rows = self._self_forecast_exog(h)
        else:
            future_exog = np.asarray(future_exog, dtype=float)
            rows = np.vstack([_row_subset(future_exog[i], self.panel_columns, self.selected)
                              for i in range(h)])
        return sarimax.forecast(self.fitted, h, future_exog=rows)

    def _self_forecast_exog(self, h):
        if not self._exog_models:
            config = search.SearchConfig(criterion=self.spec.criterion)
            train = self.fitted._train_exog
            for j, name in enumerate(self.selected):
                fit, _ = search.auto_arima(train[:, j], None, config)
                self._exog_models[name] = fit
        return _univariate_forecasts(self._exog_models, self.selected,
                                     self.spec.m, self.spec.criterion, h, False)


@dataclass(frozen=True)
class _EnsembleForecaster:
    spec: ForecasterSpec
    panel_columns: tuple
    selected: tuple
    exog_fits: dict          # column -> FittedSarimax
    lm: baselines.Regressor
    n_train: int

    @classmethod
    def fit(cls, spec, panel, seed):
        cols = _panel_columns(spec, panel)
        if not cols:
            raise ValidationError("the ensemble approach needs exogenous columns")
        config = spec.search_config()
        exog = _exog_matrix(panel, cols)
        exog_fits = {}
        for j, name in enumerate(cols):
            try:
                exog_fits[name], _ = search.auto_arima(exog[:, j], None, config)
            except (FitError, ValidationError) as exc:
                raise FitError(f"univariate model for column {name}: {exc}") from exc
        try:
            lm = baselines.fit_regressor("mlr", exog, panel.y, seed=seed)
        except (FitError, ValidationError) as exc:
            raise FitError(f"linear model on exog columns: {exc}") from exc
        return cls(spec=spec, panel_columns=tuple(panel.column_names), selected=cols,
                   exog_fits=exog_fits, lm=lm, n_train=len(panel))

    @property
    def converged(self):
        return all(f.converged for f in self.exog_fits.values())

    def refit(self, panel):
        exog = _exog_matrix(panel, self.selected)
        exog_fits = {}
        for j, name in enumerate(self.selected):
            old = self.exog_fits[name]
            exog_fits[name] = sarimax.fit(exog[:, j], None, old.order,
                                          with_intercept=old.with_intercept)
        lm = baselines.fit_regressor("mlr", exog, panel.y, seed=self.lm.seed)
        return replace(self, exog_fits=exog_fits, lm=lm, n_train=len(panel))

    def predict_next(self, next_exog_row=None):
        rows = self._chain_exog(1)
        return float(self.lm.predict(rows)[0])

    def forecast_horizon(self, h, future_exog=None):
        if future_exog is not None:
            future_exog = np.asarray(future_exog, dtype=float)
            rows = np.vstack([_row_subset(future_exog[i], self.panel_columns, self.selected)
                              for i in range(h)])
        else:
            rows = self._chain_exog(h)
        return self.lm.predict(rows)

    def _chain_exog(self, h):
        return _univariate_forecasts(self.exog_fits, self.selected,
                                     self.spec.m, self.spec.criterion, h, True)


@dataclass(frozen=True)
class _RegressorForecaster:
    spec: ForecasterSpec
    panel_columns: tuple
    selected: tuple
    reg: baselines.Regressor
    _exog_models: dict = field(default_factory=dict, compare=False)
    _train_exog: np.ndarray = None

    @classmethod
    def fit(cls, spec, panel, seed):
        cols = _panel_columns(spec, panel)
        if not cols:
            raise ValidationError(f"{spec.name} needs exogenous columns")
        exog = _exog_matrix(panel, cols)
        reg = baselines.fit_regressor(spec.name, exog, panel.y,
                                      hyper=spec.hyper_dict(), seed=seed)
        return cls(spec=spec, panel_columns=tuple(panel.column_names),
                   selected=cols, reg=reg, _train_exog=exog)

    converged = True

    def refit(self, panel):
        exog = _exog_matrix(panel, self.selected)
        reg = baselines.fit_regressor(self.spec.name, exog, panel.y,
                                      hyper=self.spec.hyper_dict(), seed=self.reg.seed)
        return replace(self, reg=reg, _exog_models={}, _train_exog=exog)

    def predict_next(self, next_exog_row=None):
        if next_exog_row is None:
            raise ValidationError(f"{self.spec.name} needs the next-period exog row")
        row = _row_subset(next_exog_row, self.panel_columns, self.selected)
        return float(self.reg.predict(row[None, :])[0])

    def forecast_horizon(self, h, future_exog=None):
        if future_exog is not None:
            future_exog = np.asarray(future_exog, dtype=float)
            rows = np.vstack([_row_subset(future_exog[i], self.panel_columns, self.selected)
                              for i in range(h)])
        else:
            rows = self._self_forecast_exog(h)
        return self.reg.predict(rows)

    def _self_forecast_exog(self, h):
        if not self._exog_models:
            config = search.SearchConfig(criterion=self.spec.criterion)
            for j, name in enumerate(self.selected):
                fit, _ = search.auto_arima(self._train_exog[:, j], None, config)
                self._exog_models[name] = fit
        return _univariate_forecasts(self._exog_models, self.selected,
                                     self.spec.m, self.spec.criterion, h, False)


@dataclass(frozen=True)
class _NaiveForecaster:
    spec: ForecasterSpec
    panel_columns: tuple
    last: float

    converged = True
    selected = ()

    @classmethod
    def fit(cls, spec, panel, seed):
        return cls(spec=spec, panel_columns=tuple(panel.column_names),
                   last=float(panel.y[-1]))

    def refit(self, panel):
        return replace(self, last=float(panel.y[-1]))

    def predict_next(self, next_exog_row=None):
        return self.last

    def forecast_horizon(self, h, future_exog=None):
        return np.full(h, self.last)
