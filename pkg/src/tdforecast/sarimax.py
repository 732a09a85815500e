"""Seasonal ARIMA estimation with exogenous regressors.

The model is the direct regression form on the differenced scale: after d
regular and D seasonal differences, the target is explained by an
intercept, the (identically differenced) exogenous columns, multiplicative
seasonal AR lags of itself and MA lags of the innovation:

    phi(B) PHI(B^m) w_t = phi0 + beta' v_t + theta(B) THETA(B^m) eps_t

Estimation maximizes the conditional (sum-of-squares) Gaussian likelihood,
conditioning on the first p + m*P differenced values and zero pre-sample
innovations.  Stationarity of the AR parts and invertibility of the MA
parts are guaranteed by optimizing partial-autocorrelation transforms of
the coefficients rather than the coefficients themselves.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.signal import lfilter
from scipy.special import ndtri

from . import stattests
from .errors import FitError, ValidationError

MIN_FIT_LENGTH = 24
_SIGMA2_FLOOR = 1e-30
_Z_BOUND = 8.0
_FIT_SEED = 0x7D4CAFE


@dataclass(frozen=True)
class SarimaxOrder:
    p: int
    d: int
    q: int
    P: int = 0
    D: int = 0
    Q: int = 0
    m: int = 1

    def __post_init__(self):
        for name in ("p", "d", "q", "P", "D", "Q", "m"):
            if getattr(self, name) < 0:
                raise ValidationError(f"order component {name} must be >= 0")
        if self.d > 2:
            raise ValidationError("regular differencing d is capped at 2")
        if self.D > 1:
            raise ValidationError("seasonal differencing D is capped at 1")
        if self.m < 1:
            raise ValidationError("seasonal period m must be >= 1")
        if self.m == 1 and (self.P or self.D or self.Q):
            raise ValidationError("seasonal orders require m >= 2")

    def as_tuple(self):
        return (self.p, self.d, self.q, self.P, self.D, self.Q, self.m)

    def __str__(self):
        p, d, q, P, D, Q, m = self.as_tuple()
        return f"({p},{d},{q})({P},{D},{Q},{m})"


# ---------------------------------------------------------------------------
# differencing

def difference(y, d, D, m):
    """Apply d regular then D seasonal (lag m) differences.

    Returns (w, heads) where heads hold the leading values dropped at each
    stage, enough to reconstruct the input exactly with `undifference`.
    """
    w = np.asarray(y, dtype=float).copy()
    heads = []
    for _ in range(d):
        heads.append(w[:1].copy())
        w = w[1:] - w[:-1]
    for _ in range(D):
        if len(w) <= m:
            raise ValidationError("series too short for seasonal differencing")
        heads.append(w[:m].copy())
        w = w[m:] - w[:-m]
    return w, heads


def undifference(w, heads, m):
    """Invert `difference`: rebuild the original series from w and heads."""
    x = np.asarray(w, dtype=float)
    for head in reversed(heads):
        lag = len(head)
        lag = lag if lag > 1 else 1
        full = np.empty(len(x) + lag)
        full[:lag] = head
        if lag == 1:
            full[1:] = head[0] + np.cumsum(x)
        else:
            for phase in range(lag):
                chunk = x[phase::lag]
                full[phase + lag::lag] = head[phase] + np.cumsum(chunk)
        x = full
    return x


# ---------------------------------------------------------------------------
# stationarity / invertibility transform

def _pacf_to_coef(kappa):
    coef = np.zeros(len(kappa))
    for j, kj in enumerate(kappa):
        if j:
            coef[:j] = coef[:j] - kj * coef[j - 1::-1]
        coef[j] = kj
    return coef


def _coef_to_pacf(coef):
    a = np.asarray(coef, dtype=float).copy()
    kappa = np.zeros(len(a))
    for j in range(len(a) - 1, -1, -1):
        kj = a[j]
        if abs(kj) >= 1.0:
            raise ValueError("coefficients outside the stationary region")
        kappa[j] = kj
        if j:
            a[:j] = (a[:j] + kj * a[j - 1::-1]) / (1.0 - kj * kj)
    return kappa


def _z_to_coef(z):
    return _pacf_to_coef(np.tanh(z))


def _coef_to_z(coef, fallback=0.1):
    try:
        kappa = _coef_to_pacf(coef)
    except ValueError:
        kappa = np.full(len(coef), fallback)
    kappa = np.clip(kappa, -0.99, 0.99)
    return np.arctanh(kappa)


def _expand_poly(reg_coef, seas_coef, m, sign):
    """Coefficients of (1 + sign*sum reg_i B^i)(1 + sign*sum seas_j B^jm)."""
    a = np.r_[1.0, sign * np.asarray(reg_coef)]
    b = np.zeros(len(seas_coef) * m + 1)
    b[0] = 1.0
    for j, c in enumerate(seas_coef, start=1):
        b[j * m] = sign * c
    return np.polymul(a, b) if len(seas_coef) else a


# ---------------------------------------------------------------------------
# fitted model

@dataclass(frozen=True)
class FittedSarimax:
    order: SarimaxOrder
    with_intercept: bool
    intercept: float
    beta: np.ndarray
    ar: np.ndarray
    ma: np.ndarray
    sar: np.ndarray
    sma: np.ndarray
    sigma2: float
    loglik: float
    k: int
    aic: float
    bic: float
    residuals: np.ndarray
    converged: bool
    n_effective: int
    # estimation state needed to forecast / serialize
    _w: np.ndarray = None
    _resid_full: np.ndarray = None
    _heads: tuple = ()
    _stage_tails: tuple = ()     # per-stage series (before each difference op)
    _train_exog: np.ndarray = None

    @property
    def n_exog(self):
        return len(self.beta)

    def ar_poly(self):
        return _expand_poly(self.ar, self.sar, self.order.m, -1.0)

    def ma_poly(self):
        return _expand_poly(self.ma, self.sma, self.order.m, +1.0)


def _css_residuals(w, v, phi0, beta, arpoly, mapoly, r):
    """Innovations for t >= r (zero pre-sample), fully vectorized."""
    nw = len(w)
    conv = np.convolve(w, arpoly)
    rhs = conv[r:nw].copy()
    if phi0 != 0.0:
        rhs -= phi0
    if v is not None and v.shape[1]:
        rhs -= v[r:] @ beta
    if len(mapoly) > 1:
        eps = lfilter([1.0], mapoly, rhs)
    else:
        eps = rhs
    return eps


def _unpack(x, with_intercept, n_exog, order):
    i = 0
    phi0 = 0.0
    if with_intercept:
        phi0 = x[0]
        i = 1
    beta = x[i:i + n_exog]
    i += n_exog
    zar = x[i:i + order.p]; i += order.p
    zma = x[i:i + order.q]; i += order.q
    zsar = x[i:i + order.P]; i += order.P
    zsma = x[i:i + order.Q]; i += order.Q
    ar = _z_to_coef(zar)
    sar = _z_to_coef(zsar)
    ma = -_z_to_coef(zma)   # invertible (1 + theta_1 B + ...) via the same map
    sma = -_z_to_coef(zsma)
    return phi0, beta, ar, ma, sar, sma


def fit(y, exog, order, with_intercept=True, cond_start=None):
    """Estimate a SarimaxOrder model by conditional maximum likelihood.

    cond_start fixes the first differenced index entering the likelihood
    (default: the smallest usable one, p + m*P).  Order searches pass a
    common value so criteria are comparable across candidate orders.
    A stalled optimizer returns converged=False with the best parameters
    found rather than raising.
    """
    y = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(y)):
        raise ValidationError("y contains non-finite values")
    n = len(y)
    if n < MIN_FIT_LENGTH:
        raise ValidationError(f"need at least {MIN_FIT_LENGTH} observations, got {n}")
    if exog is not None:
        exog = np.asarray(exog, dtype=float)
        if exog.ndim == 1:
            exog = exog[:, None]
        if exog.shape[1] == 0:
            exog = None
        elif len(exog) != n:
            raise ValidationError("exog row count must match y")
        elif not np.all(np.isfinite(exog)):
            raise ValidationError("exog contains non-finite values")
    n_exog = 0 if exog is None else exog.shape[1]
    p, d, q, P, D, Q, m = order.as_tuple()
    if n <= d + D * m + p + q + P * m + Q * m + n_exog + 5:
        raise ValidationError(f"series too short for order {order} with {n_exog} exog columns")

    w, heads = difference(y, d, D, m)
    stage_tails = [y.copy()]
    tmp = y.copy()
    for _ in range(d):
        tmp = tmp[1:] - tmp[:-1]
        stage_tails.append(tmp.copy())
    for _ in range(D):
        tmp = tmp[m:] - tmp[:-m]
        stage_tails.append(tmp.copy())

    v = None
    if exog is not None:
        v = np.column_stack([difference(exog[:, j], d, D, m)[0] for j in range(n_exog)])
        spans = np.ptp(v, axis=0)
        for j, span in enumerate(spans):
            if span == 0.0:
                raise ValidationError(f"exog column {j} is constant after differencing")

    r = p + m * P
    if cond_start is not None:
        if cond_start < r:
            raise ValidationError(f"cond_start {cond_start} below the minimum {r}")
        r = cond_start
    nw = len(w)
    n_css = nw - r
    if n_css < 8:
        raise ValidationError(f"only {n_css} observations left for the likelihood")
    s_w = w.std() or 1.0
    ws = w / s_w
    vs = None
    s_v = np.ones(n_exog)
    if v is not None and n_exog:
        s_v = v.std(axis=0)
        s_v = np.where(s_v == 0.0, 1.0, s_v)
        vs = v / s_v

    def objective(x):
        phi0, beta, ar, ma, sar, sma = _unpack(x, with_intercept, n_exog, order)
        arpoly = _expand_poly(ar, sar, m, -1.0)
        mapoly = _expand_poly(ma, sma, m, +1.0)
        eps = _css_residuals(ws, vs, phi0, beta, arpoly, mapoly, r)
        sse = float(eps @ eps)
        sigma2 = max(sse / n_css, _SIGMA2_FLOOR)
        nll = 0.5 * n_css * (math.log(2.0 * math.pi) + math.log(sigma2) + sse / (sigma2 * n_css))
        return nll if math.isfinite(nll) else 1e12

    x0 = _initial_params(ws, vs, order, with_intercept, r)
    dim = len(x0)
    bounds = []
    if with_intercept:
        bounds.append((None, None))
    bounds.extend([(None, None)] * n_exog)
    bounds.extend([(-_Z_BOUND, _Z_BOUND)] * (p + q + P + Q))

    rng = np.random.default_rng(np.random.SeedSequence(_FIT_SEED))
    starts = [x0]
    zero_start = np.zeros(dim)
    if with_intercept:
        zero_start[0] = float(ws.mean())
    best = None
    converged = False
    attempts = 0
    while dim and attempts < 4:
        xs = starts[attempts] if attempts < len(starts) else None
        if xs is None:
            jitter = 0.2 * rng.standard_normal(dim)
            jitter[:int(with_intercept) + n_exog] *= (1.0 + np.abs(x0[:int(with_intercept) + n_exog]))
            xs = x0 + jitter
        res = minimize(objective, xs, method="L-BFGS-B", bounds=bounds,
                       options={"maxiter": 500, "ftol": 1e-8, "maxfun": 5000})
        if best is None or res.fun < best.fun:
            best = res
        if res.success:
            converged = True
            break
        attempts += 1
    if not converged and dim and objective(zero_start) < best.fun:
        res = minimize(objective, zero_start, method="L-BFGS-B", bounds=bounds,
                       options={"maxiter": 500, "ftol": 1e-8, "maxfun": 5000})
        if res.fun < best.fun:
            best = res
        converged = res.success
    if not converged and dim:
        res = minimize(objective, best.x, method="Nelder-Mead",
                       options={"maxiter": 500 * max(dim, 1), "fatol": 1e-10, "xatol": 1e-8})
        if res.fun <= best.fun:
            best = res
            converged = bool(res.success)
    if dim == 0:
        best_x = np.zeros(0)
        converged = True
    else:
        best_x = best.x

    phi0_s, beta_s, ar, ma, sar, sma = _unpack(best_x, with_intercept, n_exog, order)
    arpoly = _expand_poly(ar, sar, m, -1.0)
    mapoly = _expand_poly(ma, sma, m, +1.0)
    eps_s = _css_residuals(ws, vs, phi0_s, beta_s, arpoly, mapoly, r)
    sse_s = float(eps_s @ eps_s)
    sigma2_s = max(sse_s / n_css, _SIGMA2_FLOOR)
    loglik = -0.5 * n_css * (math.log(2.0 * math.pi) + math.log(sigma2_s)
                             + sse_s / (sigma2_s * n_css)) - n_css * math.log(s_w)

    phi0 = phi0_s * s_w
    beta = beta_s * s_w / s_v if n_exog else np.zeros(0)
    resid = eps_s * s_w
    resid_full = np.zeros(nw)
    resid_full[r:] = resid
    sigma2 = sigma2_s * s_w * s_w

    n_effective = n - d - D * m
    k = int(with_intercept) + n_exog + p + q + P + Q + 1  # +1 for sigma2
    aic, bic = information_criteria(loglik, k, n_effective)

    return FittedSarimax(
        order=order, with_intercept=with_intercept, intercept=float(phi0),
        beta=np.asarray(beta, dtype=float), ar=ar, ma=ma, sar=sar, sma=sma,
        sigma2=float(sigma2), loglik=float(loglik), k=k, aic=float(aic), bic=float(bic),
        residuals=resid, converged=bool(converged), n_effective=int(n_effective),
        _w=w, _resid_full=resid_full, _heads=tuple(h.copy() for h in heads),
        _stage_tails=tuple(stage_tails),
        _train_exog=None if exog is None else exog.copy(),
    )


def _initial_params(ws, vs, order, with_intercept, r):
    """OLS for intercept/beta, Hannan-Rissanen style for the ARMA blocks."""
    p, d, q, P, D, Q, m = order.as_tuple()
    n_exog = 0 if vs is None else vs.shape[1]
    cols = []
    if with_intercept:
        cols.append(np.ones(len(ws)))
    if n_exog:
        cols.append(vs)
    if cols:
        Z = np.column_stack(cols)
        coef, *_ = np.linalg.lstsq(Z, ws, rcond=None)
        e = ws - Z @ coef
    else:
        coef = np.zeros(0)
        e = ws.copy()

    ar0 = np.zeros(p)
    ma0 = np.zeros(q)
    if p or q:
        L = min(max(p + q, 5), max(len(e) // 4, 1))
        ehat = _long_ar_residuals(e, L)
        rows = len(e) - max(p, q) - L
        if rows > p + q + 2:
            start = L + max(p, q)
            design = []
            for i in range(1, p + 1):
                design.append(e[start - i:len(e) - i])
            for k_ in range(1, q + 1):
                design.append(ehat[start - k_:len(e) - k_])
            Z2 = np.column_stack(design)
            try:
                hr, *_ = np.linalg.lstsq(Z2, e[start:], rcond=None)
                ar0 = np.clip(hr[:p], -0.9, 0.9)
                ma0 = np.clip(hr[p:p + q], -0.9, 0.9)
            except np.linalg.LinAlgError:
                pass
    x = []
    if with_intercept:
        x.append(coef[0] if len(coef) else 0.0)
    if n_exog:
        x.extend(coef[int(with_intercept):int(with_intercept) + n_exog])
    x.extend(_coef_to_z(ar0))
    x.extend(_coef_to_z(-ma0))   # inverse of the ma = -coef mapping
    x.extend(np.full(P, math.atanh(0.1)))
    x.extend(np.full(Q, math.atanh(0.1)))
    return np.array(x, dtype=float)


def _long_ar_residuals(e, L):
    if L < 1 or len(e) <= 2 * L + 1:
        return np.zeros_like(e)
    Z = np.column_stack([e[L - i:len(e) - i] for i in range(1, L + 1)])
    coef, *_ = np.linalg.lstsq(Z, e[L:], rcond=None)
    ehat = np.zeros_like(e)
    ehat[L:] = e[L:] - Z @ coef
    return ehat


def information_criteria(loglik, k, n):
    """AIC and BIC from a log-likelihood, parameter count and sample size."""
    if n < 1:
        raise ValidationError("information criteria need n >= 1")
    if k < 0:
        raise ValidationError("parameter count must be >= 0")
    aic = 2.0 * k - 2.0 * loglik
    bic = k * math.log(n) - 2.0 * loglik
    return aic, bic


def forecast(fitted, h, future_exog=None):
    """Point forecasts on the original scale, h steps ahead."""
    if h < 1:
        raise ValidationError("forecast horizon must be >= 1")
    n_exog = fitted.n_exog
    if n_exog and future_exog is None:
        raise ValidationError("model has exogenous columns; future_exog is required")
    if not n_exog and future_exog is not None:
        raise ValidationError("model has no exogenous columns; future_exog must be omitted")
    p, d, q, P, D, Q, m = fitted.order.as_tuple()
    vfut = None
    if n_exog:
        future_exog = np.asarray(future_exog, dtype=float)
        if future_exog.ndim == 1:
            future_exog = future_exog[:, None]
        if future_exog.shape != (h, n_exog):
            raise ValidationError(f"future_exog must have shape ({h}, {n_exog})")
        combined = np.vstack([fitted._train_exog, future_exog])
        vfut = np.column_stack(
            [difference(combined[:, j], d, D, m)[0][-h:] for j in range(n_exog)]
        )

    arpoly = fitted.ar_poly()
    mapoly = fitted.ma_poly()
    a = -arpoly[1:]   # AR recursion weights
    b = mapoly[1:]    # MA recursion weights
    w_ext = list(fitted._w)
    eps_ext = list(fitted._resid_full)
    nw = len(fitted._w)
    for step in range(h):
        t = nw + step
        val = fitted.intercept
        if vfut is not None:
            val += float(vfut[step] @ fitted.beta)
        for lag, weight in enumerate(a, start=1):
            if weight != 0.0 and t - lag >= 0:
                val += weight * w_ext[t - lag]
        for lag, weight in enumerate(b, start=1):
            if weight != 0.0 and 0 <= t - lag < nw:
                val += weight * eps_ext[t - lag]
        w_ext.append(val)
        eps_ext.append(0.0)

    # integrate the differenced forecasts back to the original scale
    levels = [list(arr) for arr in fitted._stage_tails]
    lens = [len(arr) for arr in fitted._stage_tails]
    levels[-1].extend(w_ext[nw:])
    ops = [1] * d + [m] * D
    for i in range(len(ops) - 1, -1, -1):
        lag = ops[i]
        for j in range(h):
            levels[i].append(levels[i + 1][lens[i + 1] + j] + levels[i][lens[i] + j - lag])
    return np.array(levels[0][lens[0]:], dtype=float)


def forecast_std(fitted, h):
    """Std deviation of the h-step forecast errors (Gaussian recursion)."""
    p, d, q, P, D, Q, m = fitted.order.as_tuple()
    full_ar = fitted.ar_poly()
    for _ in range(d):
        full_ar = np.polymul(full_ar, [1.0, -1.0])
    for _ in range(D):
        seas = np.zeros(m + 1)
        seas[0], seas[m] = 1.0, -1.0
        full_ar = np.polymul(full_ar, seas)
    impulse = np.zeros(h)
    impulse[0] = 1.0
    psi = lfilter(fitted.ma_poly(), full_ar, impulse)
    return np.sqrt(fitted.sigma2 * np.cumsum(psi * psi))


# ---------------------------------------------------------------------------
# residual diagnostics

@dataclass(frozen=True)
class ResidualDiagnostics:
    standardized_residuals: np.ndarray
    histogram: tuple          # (bin_edges, counts)
    qq_points: np.ndarray     # (n, 2): theoretical, sample
    acf_values: np.ndarray
    acf_band: float
    ljung_box: stattests.TestResult


def diagnostics(fitted):
    """Residual diagnostics backing the usual four-panel model check."""
    resid = np.asarray(fitted.residuals, dtype=float)
    n = len(resid)
    if n < 20:
        raise ValidationError("diagnostics need at least 20 residuals")
    std = resid.std()
    if std == 0.0:
        raise ValidationError("residuals are degenerate (zero variance)")
    z = (resid - resid.mean()) / std

    iqr = float(np.percentile(z, 75) - np.percentile(z, 25))
    if iqr == 0.0:
        raise ValidationError("residuals are degenerate (zero IQR)")
    width = 2.0 * iqr / n ** (1.0 / 3.0)
    n_bins = max(1, int(math.ceil((z.max() - z.min()) / width)))
    counts, edges = np.histogram(z, bins=n_bins)

    theo = ndtri((np.arange(1, n + 1) - 0.5) / n)
    qq = np.column_stack([theo, np.sort(z)])

    nlags = min(20, n - 2)
    acf_values, band = stattests.acf(z, nlags)
    lb = stattests.ljung_box(z, min(10, n // 5))
    return ResidualDiagnostics(
        standardized_residuals=z,
        histogram=(edges, counts),
        qq_points=qq,
        acf_values=acf_values,
        acf_band=band,
        ljung_box=lb,
    )


# ---------------------------------------------------------------------------
# model (de)serialization for the CLI forecast command

def to_json_dict(fitted, column_names=None):
    return {
        "order": list(fitted.order.as_tuple()),
        "with_intercept": fitted.with_intercept,
        "intercept": fitted.intercept,
        "beta": fitted.beta.tolist(),
        "ar": fitted.ar.tolist(),
        "ma": fitted.ma.tolist(),
        "sar": fitted.sar.tolist(),
        "sma": fitted.sma.tolist(),
        "sigma2": fitted.sigma2,
        "loglik": fitted.loglik,
        "k": fitted.k,
        "aic": fitted.aic,
        "bic": fitted.bic,
        "converged": fitted.converged,
        "n_effective": fitted.n_effective,
        "column_names": list(column_names) if column_names else [],
        "state": {
            "w": fitted._w.tolist(),
            "resid_full": fitted._resid_full.tolist(),
            "heads": [h.tolist() for h in fitted._heads],
            "stage_tails": [list(map(float, arr)) for arr in fitted._stage_tails],
            "train_exog": None if fitted._train_exog is None else fitted._train_exog.tolist(),
            "residuals": fitted.residuals.tolist(),
        },
    }


def from_json_dict(payload):
    state = payload["state"]
    return FittedSarimax(
        order=SarimaxOrder(*payload["order"]),
        with_intercept=payload["with_intercept"],
        intercept=payload["intercept"],
        beta=np.array(payload["beta"], dtype=float),
        ar=np.array(payload["ar"], dtype=float),
        ma=np.array(payload["ma"], dtype=float),
        sar=np.array(payload["sar"], dtype=float),
        sma=np.array(payload["sma"], dtype=float),
        sigma2=payload["sigma2"],
        loglik=payload["loglik"],
        k=payload["k"],
        aic=payload["aic"],
        bic=payload["bic"],
        residuals=np.array(state["residuals"], dtype=float),
        converged=payload["converged"],
        n_effective=payload["n_effective"],
        _w=np.array(state["w"], dtype=float),
        _resid_full=np.array(state["resid_full"], dtype=float),
        _heads=tuple(np.array(h, dtype=float) for h in state["heads"]),
        _stage_tails=tuple(np.array(arr, dtype=float) for arr in state["stage_tails"]),
        _train_exog=None if state["train_exog"] is None else np.array(state["train_exog"], dtype=float),
    )


def save_model(fitted, path, column_names=None):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(to_json_dict(fitted, column_names), fh, sort_keys=True)
        fh.write("\n")


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    return from_json_dict(payload), payload.get("column_names", [])
