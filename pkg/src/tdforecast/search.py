"""Automatic order selection and backward exogenous-variable selection.

The order search is the familiar stepwise neighborhood walk: start from a
handful of standard orders, move one step at a time in p/q/P/Q (and toggle
the intercept), keep strict criterion improvements, stop at a local
minimum.  Backward selection repeatedly drops the variable whose removal
improves the criterion most, refitting the order search per candidate set.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from . import sarimax, stattests
from .errors import FitError, ValidationError


@dataclass(frozen=True)
class SearchConfig:
    max_p: int = 5
    max_q: int = 5
    max_P: int = 2
    max_Q: int = 2
    max_d: int = 2
    max_D: int = 1
    seasonal: bool = False
    m: int = 1
    criterion: str = "aic"     # "aic" decides; "bic" is always reported alongside
    stepwise: bool = True
    fast: bool = False         # backward selection reuses the first winning order

    def __post_init__(self):
        if min(self.max_p, self.max_q, self.max_P, self.max_Q, self.max_d, self.max_D) < 0:
            raise ValidationError("search bounds must be non-negative")
        if self.criterion not in ("aic", "bic"):
            raise ValidationError("criterion must be aic or bic")
        if self.seasonal and self.m < 2:
            raise ValidationError("seasonal search needs m >= 2")


@dataclass(frozen=True)
class TraceEntry:
    order: sarimax.SarimaxOrder
    with_intercept: bool
    aic: float
    bic: float
    converged: bool
    columns: tuple = ()

    def as_dict(self):
        return {
            "order": list(self.order.as_tuple()),
            "intercept": self.with_intercept,
            "aic": self.aic,
            "bic": self.bic,
            "converged": self.converged,
            **({"columns": list(self.columns)} if self.columns else {}),
        }


@dataclass
class SearchTrace:
    entries: list = field(default_factory=list)
    winner_index: int = -1

    def add(self, entry):
        self.entries.append(entry)

    def winner(self):
        return self.entries[self.winner_index]

    def write_jsonl(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            for entry in self.entries:
                fh.write(json.dumps(entry.as_dict(), sort_keys=True))
                fh.write("\n")


def _criterion_key(fit, config):
    value = fit.aic if config.criterion == "aic" else fit.bic
    # ties: fewer parameters, then lexicographically smaller order, then no intercept
    return (value, fit.k, fit.order.as_tuple(), fit.with_intercept)


_ROOT_BOUND = 0.97        # inverse roots this close to the unit circle are suspect
_CANCEL_DISTANCE = 0.1    # near-common AR/MA factors make the model unidentified


def _well_identified(fit):
    """Reject candidates with near-unit or near-canceling AR/MA factors.

    Such fits gain likelihood by chasing noise with a polynomial pair that
    almost divides out; keeping them would let the stepwise search prefer
    spurious large orders on white noise.
    """
    def inverse_roots(poly):
        if len(poly) < 2:
            return np.zeros(0)
        roots = np.roots(poly[::-1])
        return roots[np.abs(roots) > 1e-8] ** -1

    ar_inv = inverse_roots(fit.ar_poly())
    ma_inv = inverse_roots(fit.ma_poly())
    if ar_inv.size and np.max(np.abs(ar_inv)) > _ROOT_BOUND:
        return False
    if ma_inv.size and np.max(np.abs(ma_inv)) > _ROOT_BOUND:
        return False
    for a in ar_inv:
        if ma_inv.size and np.min(np.abs(ma_inv - a)) < _CANCEL_DISTANCE and abs(a) > 0.2:
            return False
    return True


def auto_arima(y, exog, config, d=None, D=None, columns=()):
    """Order search; returns (best FittedSarimax, SearchTrace).

    Differencing orders come from the unit-root tests unless passed in.
    Candidates that fail to converge stay in the trace but cannot win.
    """
    y = np.asarray(y, dtype=float)
    if len(y) < sarimax.MIN_FIT_LENGTH:
        raise ValidationError(f"need at least {sarimax.MIN_FIT_LENGTH} observations")
    m = config.m if config.seasonal else 1
    if D is None:
        D = stattests.canova_hansen(y, m) if config.seasonal else 0
        D = min(D, config.max_D)
    yd = y if D == 0 else sarimax.difference(y, 0, D, m)[0]
    if d is None:
        d = stattests.ndiffs(yd, max_d=config.max_d)

    if exog is None:
        n_exog = 0
    else:
        arr = np.asarray(exog)
        n_exog = 1 if arr.ndim == 1 else arr.shape[1]
    nw = len(y) - d - D * m
    max_p, max_P, cond = _fit_bounds(config, nw, m, n_exog)
    max_P = max_P if config.seasonal else 0

    trace = SearchTrace()
    cache = {}

    def evaluate(p, q, P, Q, intercept):
        key = (p, d, q, P, D, Q, m, intercept)
        if key in cache:
            return cache[key]
        try:
            order = sarimax.SarimaxOrder(p, d, q, P, D, Q, m)
            fit = sarimax.fit(y, exog, order, with_intercept=intercept, cond_start=cond)
        except (ValidationError, FitError):
            cache[key] = None
            return None
        usable = fit.converged and _well_identified(fit)
        trace.add(TraceEntry(order=order, with_intercept=intercept, aic=fit.aic,
                             bic=fit.bic, converged=usable, columns=tuple(columns)))
        if not usable:
            fit = None
        cache[key] = fit
        return fit

    default_intercept = (d + D) <= 1
    if config.stepwise:
        starts = [(2, 2, 1, 1), (0, 0, 0, 0), (1, 0, 1, 0), (0, 1, 0, 1)]
        candidates = []
        for p, q, P, Q in starts:
            p, q = min(p, max_p), min(q, config.max_q)
            P, Q = (min(P, max_P), min(Q, config.max_Q)) if config.seasonal else (0, 0)
            candidates.append((p, q, P, Q, default_intercept))
        best_fit, best_key = None, None
        for cand in dict.fromkeys(candidates):
            fit = evaluate(*cand)
            if fit is not None and fit.converged:
                key = _criterion_key(fit, config)
                if best_key is None or key < best_key:
                    best_fit, best_key, best_cand = fit, key, cand
        if best_fit is None:
            raise FitError(f"no order candidate converged (tried {len(trace.entries)})")
        improved = True
        while improved:
            improved = False
            p, q, P, Q, intercept = best_cand
            neighbors = [(p + s, q, P, Q, intercept) for s in (-1, 1)]
            neighbors += [(p, q + s, P, Q, intercept) for s in (-1, 1)]
            if config.seasonal:
                neighbors += [(p, q, P + s, Q, intercept) for s in (-1, 1)]
                neighbors += [(p, q, P, Q + s, intercept) for s in (-1, 1)]
            neighbors += [(p + 1, q + 1, P, Q, intercept), (p - 1, q - 1, P, Q, intercept)]
            neighbors.append((p, q, P, Q, not intercept))
            for cand in neighbors:
                np_, nq, nP, nQ, ni = cand
                if not (0 <= np_ <= max_p and 0 <= nq <= config.max_q):
                    continue
                if not (0 <= nP <= max_P and 0 <= nQ <= config.max_Q):
                    continue
                fit = evaluate(*cand)
                if fit is None or not fit.converged:
                    continue
                key = _criterion_key(fit, config)
                if key < best_key:
                    best_fit, best_key, best_cand = fit, key, cand
                    improved = True
    else:
        best_fit, best_key = None, None
        Ps = range(max_P + 1) if config.seasonal else (0,)
        Qs = range(config.max_Q + 1) if config.seasonal else (0,)
        for p in range(max_p + 1):
            for q in range(config.max_q + 1):
                for P in Ps:
                    for Q in Qs:
                        for intercept in (True, False):
                            fit = evaluate(p, q, P, Q, intercept)
                            if fit is None or not fit.converged:
                                continue
                            key = _criterion_key(fit, config)
                            if best_key is None or key < best_key:
                                best_fit, best_key = fit, key
        if best_fit is None:
            raise FitError(f"no order candidate converged (tried {len(trace.entries)})")

    trace.winner_index = _find_winner_index(trace, best_fit, config)
    return best_fit, trace


def _fit_bounds(config, nw, m, n_exog):
    """Shrink the AR bounds until a common conditioning span is affordable.

    Every candidate in one search is fit conditioning on the same leading
    max_p + m*max_P differenced values, which keeps AIC/BIC comparable
    across orders (the likelihood always covers the same observations).
    """
    for max_P in range(config.max_P if config.seasonal else 0, -1, -1):
        for max_p in sorted({config.max_p, 3, 2, 1}, reverse=True):
            if max_p > config.max_p:
                continue
            cond = max_p + m * max_P
            k_max = max_p + config.max_q + max_P + config.max_Q + n_exog + 2
            if nw - cond >= max(12, k_max + 3):
                return max_p, max_P, cond
    return 1, 0, 1


def _find_winner_index(trace, fit, config):
    target = (fit.order.as_tuple(), fit.with_intercept)
    for i, entry in enumerate(trace.entries):
        if (entry.order.as_tuple(), entry.with_intercept) == target and entry.converged:
            return i
    return len(trace.entries) - 1


def backward_select(y, exog, column_names, config):
    """Drop variables while doing so improves the criterion.

    Returns (selected column names, final FittedSarimax, merged SearchTrace).
    With config.fast the order found for the full set is frozen and later
    candidates only refit coefficients.
    """
    exog = np.asarray(exog, dtype=float)
    if exog.ndim == 1:
        exog = exog[:, None]
    if exog.shape[1] < 1:
        raise ValidationError("backward selection needs at least one exog column")
    if exog.shape[1] != len(column_names):
        raise ValidationError("column_names must match exog width")

    names = list(column_names)
    merged = SearchTrace()
    frozen = None  # (order, with_intercept) once config.fast fixes the structure

    def fit_subset(cols):
        sub = exog[:, [names.index(c) for c in cols]] if cols else None
        if frozen is not None:
            try:
                fit = sarimax.fit(y, sub, frozen[0], with_intercept=frozen[1])
            except (ValidationError, FitError):
                return None
            merged.add(TraceEntry(order=fit.order, with_intercept=fit.with_intercept,
                                  aic=fit.aic, bic=fit.bic, converged=fit.converged,
                                  columns=tuple(cols)))
            return fit if fit.converged else None
        try:
            fit, trace = auto_arima(y, sub, config, columns=tuple(cols))
        except (FitError, ValidationError):
            return None
        base = len(merged.entries)
        merged.entries.extend(trace.entries)
        if merged.winner_index < 0:
            merged.winner_index = base + trace.winner_index
        return fit

    current_cols = tuple(names)
    current_fit = fit_subset(current_cols)
    if current_fit is None:
        raise FitError("initial fit with the full variable set failed")
    if config.fast:
        # freeze the structure and rebase the criterion on plain refits so
        # later candidates are compared on the same likelihood span
        frozen = (current_fit.order, current_fit.with_intercept)
        rebased = fit_subset(current_cols)
        if rebased is not None:
            current_fit = rebased
    current_key = _criterion_key(current_fit, config)

    while current_cols:
        best_removal = None
        for c in current_cols:
            cand_cols = tuple(x for x in current_cols if x != c)
            fit = fit_subset(cand_cols)
            if fit is None:
                continue
            key = _criterion_key(fit, config)
            if key < current_key and (best_removal is None or key < best_removal[0]):
                best_removal = (key, cand_cols, fit)
        if best_removal is None:
            break
        current_key, current_cols, current_fit = best_removal

    _sync_winner(merged, current_fit, current_cols)
    return list(current_cols), current_fit, merged


def _sync_winner(trace, fit, cols):
    target = (fit.order.as_tuple(), fit.with_intercept, tuple(cols))
    for i, entry in enumerate(trace.entries):
        if (entry.order.as_tuple(), entry.with_intercept, entry.columns) == target and entry.converged:
            trace.winner_index = i
            return
    trace.winner_index = len(trace.entries) - 1
