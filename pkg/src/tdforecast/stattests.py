"""Stationarity and seasonality tests, ACF/PACF, decomposition, diagnostics.

The unit-root machinery is self-contained: statistics come from ordinary
least squares and p-values / critical values from the Monte Carlo tables in
_critvals.py (see scripts/gen_critical_values.py for provenance).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import chdtrc

from ._critvals import ADF_PROBS, ADF_QUANTILES, ADF_T_GRID, CH_CRIT_95
from .errors import ValidationError

MAX_D = 2   # regular differencing cap
MAX_SD = 1  # seasonal differencing cap
DEFAULT_LEVEL = 0.05


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float          # NaN when the test reports no p-value
    reject: bool
    level: float = DEFAULT_LEVEL


@dataclass(frozen=True)
class AdfResult(TestResult):
    used_lag: int = 0
    nobs: int = 0


@dataclass(frozen=True)
class Decomposition:
    trend: np.ndarray      # NaN on the first/last floor(m/2) points
    seasonal: np.ndarray
    residual: np.ndarray
    period: int


def _ols(Z, y):
    """Least squares with t-stats; returns (beta, tstats, sse)."""
    beta, _, rank, _ = np.linalg.lstsq(Z, y, rcond=None)
    if rank < Z.shape[1]:
        raise np.linalg.LinAlgError("singular regressor matrix")
    resid = y - Z @ beta
    dof = len(y) - Z.shape[1]
    sse = float(resid @ resid)
    s2 = sse / dof
    cov = s2 * np.linalg.inv(Z.T @ Z)
    tstats = beta / np.sqrt(np.diag(cov))
    return beta, tstats, sse


def _adf_design(x, lag, regression):
    dx = np.diff(x)
    n = len(dx) - lag
    y = dx[lag:]
    cols = [x[lag:-1]]
    for i in range(1, lag + 1):
        cols.append(dx[lag - i:len(dx) - i])
    k_extra = {"nc": 0, "c": 1, "ct": 2}[regression]
    if regression in ("c", "ct"):
        cols.append(np.ones(n))
    if regression == "ct":
        cols.append(np.arange(1, n + 1, dtype=float))
    return np.column_stack(cols), y, k_extra


def adf_p_value(stat, nobs, regression):
    """Interpolate the Dickey-Fuller p-value from the stored quantile table."""
    table = ADF_QUANTILES[regression]
    t = float(np.clip(nobs, ADF_T_GRID[0], ADF_T_GRID[-1]))
    inv_grid = 1.0 / ADF_T_GRID
    quants = np.array([np.interp(1.0 / t, inv_grid[::-1], table[::-1, j])
                       for j in range(table.shape[1])])
    p = float(np.interp(stat, quants, ADF_PROBS))
    return float(np.clip(p, 1e-4, 1 - 1e-4))


def adf_test(series, max_lag=None, regression="c", level=DEFAULT_LEVEL, autolag=True):
    """Augmented Dickey-Fuller unit-root test.

    regression: "c" constant, "ct" constant+trend, "nc" neither.  When
    autolag is set the lag count is chosen by AIC over 0..max_lag on a
    common sample, then the statistic is refit on the full sample.  A
    constant series is stationary by convention: statistic -inf, reject.
    """
    x = np.asarray(series, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValidationError("ADF input must be finite")
    if max_lag is None:
        max_lag = min(int(np.ceil(12.0 * (len(x) / 100.0) ** 0.25)), (len(x) - 12) // 2)
        max_lag = max(max_lag, 0)
    if len(x) <= max_lag + 10:
        raise ValidationError(f"series too short for ADF with max_lag={max_lag}")
    if np.ptp(x) == 0.0:
        return AdfResult(statistic=float("-inf"), p_value=0.0, reject=True,
                         level=level, used_lag=0, nobs=len(x) - 1)

    if autolag and max_lag > 0:
        # common sample: drop max_lag+1 leading points for every candidate
        best = None
        x_common = x
        offset = 0
        for lag in range(0, max_lag + 1):
            start = max_lag - lag
            Z, y, _ = _adf_design(x_common[start + offset:], lag, regression)
            try:
                _, _, sse = _ols(Z, y)
            except np.linalg.LinAlgError:
                continue
            n = len(y)
            aic = n * np.log(sse / n) + 2 * Z.shape[1]
            if best is None or aic < best[0]:
                best = (aic, lag)
        used_lag = best[1] if best else 0
    else:
        used_lag = max_lag

    Z, y, _ = _adf_design(x, used_lag, regression)
    try:
        _, tstats, _ = _ols(Z, y)
    except np.linalg.LinAlgError:
        return AdfResult(statistic=float("-inf"), p_value=0.0, reject=True,
                         level=level, used_lag=used_lag, nobs=len(y))
    stat = float(tstats[0])
    p = adf_p_value(stat, len(y), regression)
    return AdfResult(statistic=stat, p_value=p, reject=bool(p < level),
                     level=level, used_lag=used_lag, nobs=len(y))


def ndiffs(series, max_d=MAX_D, regression="c", level=DEFAULT_LEVEL):
    """Smallest d <= max_d whose d-times-differenced series passes ADF."""
    x = np.asarray(series, dtype=float)
    for d in range(max_d + 1):
        if adf_test(x, regression=regression, level=level).reject:
            return d
        x = np.diff(x)
    return max_d


def _seasonal_fourier(n, m):
    t = np.arange(1, n + 1)
    cols = []
    for i in range(1, m // 2 + 1):
        cols.append(np.cos(2 * np.pi * i * t / m))
        if 2 * i < m:  # the sine vanishes at the Nyquist frequency
            cols.append(np.sin(2 * np.pi * i * t / m))
    return np.column_stack(cols)[:, : m - 1]


_CH_PREWHITEN_CAP = 0.8


def canova_hansen_statistic(series, m):
    """Seasonal-stability statistic built from cumulative Fourier scores.

    Canova-Hansen style L = tr(Omega^-1 sum_i S_i S_i') / n^2.  The score
    process comes from intercept-only residuals, so deterministic as well
    as unit-root seasonality makes it drift; the Bartlett long-run
    covariance comes from residuals of the full seasonal regression (with
    seasonal-lag prewhitening) so that the seasonal signal itself cannot
    deflate the statistic.  Critical values are tabulated by simulation
    under a white-noise null.
    """
    x = np.asarray(series, dtype=float)
    n = len(x)
    F = _seasonal_fourier(n, m)
    u0 = x - x.mean()
    X = F * u0[:, None]

    Z = np.column_stack([np.ones(n), F])
    beta, *_ = np.linalg.lstsq(Z, x, rcond=None)
    ufull = x - Z @ beta
    W = F * ufull[:, None]

    den = float(ufull @ ufull)
    rho = 0.0
    if den > 0 and n > m:
        rho = float(np.clip((ufull[m:] @ ufull[:-m]) / den, 0.0, _CH_PREWHITEN_CAP))
    Wt = W[m:] - rho * W[:-m] if n > m else W
    nw = len(Wt)
    ltrunc = min(int(round(m * (n / 100.0) ** 0.25)), nw - 1)
    omega = Wt.T @ Wt
    for lag in range(1, ltrunc + 1):
        w = 1.0 - lag / (ltrunc + 1.0)
        A = Wt[lag:].T @ Wt[:-lag]
        omega += w * (A + A.T)
    omega /= nw * (1.0 - rho) ** 2

    S = np.cumsum(X, axis=0)
    try:
        sol = np.linalg.solve(omega, S.T @ S)
    except np.linalg.LinAlgError:
        return 0.0
    return float(np.trace(sol)) / n**2


def canova_hansen(series, m, level=DEFAULT_LEVEL):
    """Seasonal differencing order D in {0, 1}.

    D = 1 when the seasonal pattern is too strong/unstable for a model
    without seasonal differencing, i.e. the stability statistic exceeds the
    tabulated 95% critical value for period m.
    """
    x = np.asarray(series, dtype=float)
    if m < 2:
        raise ValidationError("seasonal period m must be >= 2")
    if len(x) < 2 * m + 8:
        raise ValidationError(f"series too short for seasonal test at m={m}")
    if np.ptp(x) == 0.0:
        return 0
    if m not in CH_CRIT_95:
        return 1  # outside the table: difference conservatively
    stat = canova_hansen_statistic(x, m)
    return int(stat > CH_CRIT_95[m])


def acf(series, nlags):
    """Autocorrelations 0..nlags plus the 1.96/sqrt(n) confidence half-width.

    Uses the biased autocovariance estimator (normalized by n).
    """
    x = np.asarray(series, dtype=float)
    n = len(x)
    if nlags >= n:
        raise ValidationError("nlags must be < series length")
    xc = x - x.mean()
    c0 = float(xc @ xc) / n
    if c0 == 0.0:
        raise ValidationError("ACF undefined for a constant series")
    values = np.empty(nlags + 1)
    values[0] = 1.0
    for k in range(1, nlags + 1):
        values[k] = float(xc[k:] @ xc[:-k]) / n / c0
    return values, 1.96 / np.sqrt(n)


def pacf(series, nlags):
    """Partial autocorrelations 0..nlags via the Durbin-Levinson recursion."""
    r, _ = acf(series, nlags)
    out = np.empty(nlags + 1)
    out[0] = 1.0
    phi = np.zeros((nlags + 1, nlags + 1))
    for k in range(1, nlags + 1):
        if k == 1:
            phi[1, 1] = r[1]
        else:
            num = r[k] - phi[k - 1, 1:k] @ r[k - 1:0:-1]
            den = 1.0 - phi[k - 1, 1:k] @ r[1:k]
            phi[k, k] = num / den if den != 0 else 0.0
            phi[k, 1:k] = phi[k - 1, 1:k] - phi[k, k] * phi[k - 1, k - 1:0:-1]
        out[k] = phi[k, k]
    return out


def seasonal_decompose(series, m):
    """Classical additive decomposition: trend + seasonal + residual.

    Trend is a centered moving average of window m (2xm for even m);
    seasonal means of the detrended series are re-centered to sum to zero
    over one period; the residual is whatever remains.
    """
    x = np.asarray(series, dtype=float)
    n = len(x)
    if n < 2 * m:
        raise ValidationError(f"need at least 2*m={2 * m} points to decompose")
    half = m // 2
    if m % 2 == 0:
        weights = np.r_[0.5, np.ones(m - 1), 0.5] / m
    else:
        weights = np.ones(m) / m
    trend = np.full(n, np.nan)
    trend[half:n - half] = np.convolve(x, weights, mode="valid")

    detrended = x - trend
    seasonal_means = np.empty(m)
    for phase in range(m):
        vals = detrended[phase::m]
        seasonal_means[phase] = np.nanmean(vals)
    seasonal_means -= seasonal_means.mean()
    seasonal = np.array([seasonal_means[i % m] for i in range(n)])
    residual = x - trend - seasonal
    return Decomposition(trend=trend, seasonal=seasonal, residual=residual, period=m)


def write_decomposition_csv(decomposition, series, path):
    """Export PERIOD,OBSERVED,TREND,SEASONAL,RESIDUAL (blank where undefined)."""
    import csv

    x = np.asarray(series, dtype=float)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["PERIOD", "OBSERVED", "TREND", "SEASONAL", "RESIDUAL"])
        for i in range(len(x)):
            row = [i + 1, repr(float(x[i]))]
            for comp in (decomposition.trend, decomposition.seasonal, decomposition.residual):
                row.append("" if np.isnan(comp[i]) else repr(float(comp[i])))
            writer.writerow(row)


def ljung_box(residuals, lags, level=DEFAULT_LEVEL):
    """Ljung-Box Q test for residual autocorrelation up to `lags`."""
    x = np.asarray(residuals, dtype=float)
    n = len(x)
    if lags < 1:
        raise ValidationError("ljung_box needs at least one lag")
    if lags >= n / 2:
        raise ValidationError("too few points for the requested lag count")
    r, _ = acf(x, lags)
    q = n * (n + 2) * np.sum(r[1:] ** 2 / (n - np.arange(1, lags + 1)))
    p = float(chdtrc(lags, q))
    return TestResult(statistic=float(q), p_value=p, reject=bool(p < level), level=level)
