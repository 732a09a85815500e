"""The seven regression baselines and the plain linear model.

Everything is implemented locally with fixed, documented defaults so the
model comparison is reproducible: QR least squares, closed-form ridge,
coordinate-descent lasso, plain SGD, an SMO-style RBF support-vector
regressor, a simplified gradient-boosting machine (not bit-compatible with
XGBoost) and a random forest whose impurity bookkeeping is shared with the
feature-selection stage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import FitError, ValidationError

KINDS = ("mlr", "ridge", "lasso", "sgd", "svr_rbf", "gbt", "rf")
_STANDARDIZED = {"mlr", "ridge", "lasso", "sgd", "svr_rbf"}

DEFAULT_HYPER = {
    "mlr": {},
    "ridge": {"lam": 1.0},
    "lasso": {"lam": 0.1, "tol": 1e-7, "max_iter": 100_000},
    "sgd": {"eta0": 0.01, "epochs": 1000, "power_t": 0.25},
    "svr_rbf": {"C": 1.0, "epsilon": 0.1, "gamma": None, "tol": 1e-3, "max_iter": 20_000},
    "gbt": {"n_rounds": 100, "max_depth": 3, "learning_rate": 0.1, "min_leaf": 1},
    "rf": {"n_trees": 100, "max_depth": 10, "min_leaf": 2, "max_features": None},
}


# ---------------------------------------------------------------------------
# decision trees (shared by rf / gbt / impurity importance)

@dataclass
class _Tree:
    feature: list = field(default_factory=list)
    threshold: list = field(default_factory=list)
    left: list = field(default_factory=list)
    right: list = field(default_factory=list)
    value: list = field(default_factory=list)
    decrease: np.ndarray = None  # per-feature total SSE reduction

    def predict(self, X):
        out = np.empty(len(X))
        for i, row in enumerate(X):
            node = 0
            while self.feature[node] >= 0:
                node = self.left[node] if row[self.feature[node]] <= self.threshold[node] else self.right[node]
            out[i] = self.value[node]
        return out


def _best_split(X, y, features, min_leaf):
    """Best (feature, threshold, sse_gain) over the given feature ids."""
    n = len(y)
    sum_all = y.sum()
    sse_parent = float(y @ y - sum_all * sum_all / n)
    best = None
    for j in features:
        order = np.argsort(X[:, j], kind="stable")
        xs = X[order, j]
        ys = y[order]
        s1 = np.cumsum(ys)
        s2 = np.cumsum(ys * ys)
        i = np.arange(min_leaf, n - min_leaf + 1)  # left sizes
        if len(i) == 0:
            continue
        valid = xs[i - 1] < xs[i]
        if not valid.any():
            continue
        i = i[valid]
        left_sse = s2[i - 1] - s1[i - 1] ** 2 / i
        right_sse = (s2[-1] - s2[i - 1]) - (s1[-1] - s1[i - 1]) ** 2 / (n - i)
        gain = sse_parent - (left_sse + right_sse)
        k = int(np.argmax(gain))
        if gain[k] > 1e-12 and (best is None or gain[k] > best[2]):
            thr = 0.5 * (xs[i[k] - 1] + xs[i[k]])
            best = (j, thr, float(gain[k]))
    return best


def _grow_tree(X, y, max_depth, min_leaf, n_features_total, max_features=None, rng=None):
    tree = _Tree(decrease=np.zeros(n_features_total))
    stack = [(np.arange(len(y)), 0, -1, False)]  # rows, depth, parent, is_right
    while stack:
        rows, depth, parent, is_right = stack.pop()
        node = len(tree.feature)
        if parent >= 0:
            if is_right:
                tree.right[parent] = node
            else:
                tree.left[parent] = node
        tree.feature.append(-1)
        tree.threshold.append(0.0)
        tree.left.append(-1)
        tree.right.append(-1)
        tree.value.append(float(y[rows].mean()))

        if depth >= max_depth or len(rows) < 2 * min_leaf:
            continue
        if max_features is not None and max_features < n_features_total:
            feats = np.sort(rng.choice(n_features_total, size=max_features, replace=False))
        else:
            feats = np.arange(n_features_total)
        split = _best_split(X[rows], y[rows], feats, min_leaf)
        if split is None:
            continue
        j, thr, gain = split
        tree.feature[node] = j
        tree.threshold[node] = thr
        tree.decrease[j] += gain
        go_left = X[rows, j] <= thr
        # push right first so the left child is grown (and numbered) first
        stack.append((rows[~go_left], depth + 1, node, True))
        stack.append((rows[go_left], depth + 1, node, False))
    return tree


def _canonical_order(X, y):
    """Row order independent of how the caller shuffled the training data."""
    return np.lexsort((y, *[X[:, j] for j in range(X.shape[1] - 1, -1, -1)]))


# ---------------------------------------------------------------------------
# the Regressor record

@dataclass(frozen=True)
class Regressor:
    kind: str
    model: dict
    x_mean: np.ndarray
    x_std: np.ndarray
    y_mean: float
    y_std: float
    seed: int
    n_features: int

    @property
    def coef_(self):
        """Linear coefficients on the original scale (linear kinds only)."""
        beta = self.model["coef"]
        return self.y_std * beta / self.x_std

    @property
    def intercept_(self):
        beta = self.model["coef"]
        return self.y_mean + self.y_std * self.model.get("intercept", 0.0) - float(self.coef_ @ self.x_mean)

    def predict(self, X):
        return predict(self, X)


def _standardize(X, y):
    x_mean = X.mean(axis=0)
    x_std = X.std(axis=0)
    x_std = np.where(x_std == 0.0, 1.0, x_std)
    y_mean = float(y.mean())
    y_std = float(y.std())
    if y_std == 0.0:
        y_std = 1.0
    return (X - x_mean) / x_std, (y - y_mean) / y_std, x_mean, x_std, y_mean, y_std


def fit_regressor(kind, X, y, hyper=None, seed=0):
    """Train one of the seven baselines; see DEFAULT_HYPER for the knobs."""
    if kind not in KINDS:
        raise ValueError(f"unknown regressor kind {kind!r}")
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y, dtype=float)
    if len(X) != len(y):
        raise ValidationError("X and y must have the same number of rows")
    if len(y) < 10:
        raise ValidationError("need at least 10 training rows")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise ValidationError("non-finite training values")
    params = dict(DEFAULT_HYPER[kind])
    params.update(hyper or {})

    if kind in _STANDARDIZED:
        Xs, ys, x_mean, x_std, y_mean, y_std = _standardize(X, y)
    else:
        Xs, ys = X, y
        x_mean = np.zeros(X.shape[1])
        x_std = np.ones(X.shape[1])
        y_mean, y_std = 0.0, 1.0

    fitter = {
        "mlr": _fit_mlr, "ridge": _fit_ridge, "lasso": _fit_lasso, "sgd": _fit_sgd,
        "svr_rbf": _fit_svr, "gbt": _fit_gbt, "rf": _fit_rf,
    }[kind]
    model = fitter(Xs, ys, params, seed)
    return Regressor(kind=kind, model=model, x_mean=x_mean, x_std=x_std,
                     y_mean=y_mean, y_std=y_std, seed=seed, n_features=X.shape[1])


def predict(reg, X):
    """Deterministic predictions in the units of the training target."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[1] != reg.n_features:
        raise ValidationError(f"expected {reg.n_features} columns, got {X.shape[1]}")
    if reg.kind in _STANDARDIZED:
        Xs = (X - reg.x_mean) / reg.x_std
        if reg.kind == "svr_rbf":
            raw = _rbf_kernel(Xs, reg.model["X"], reg.model["gamma"]) @ reg.model["beta"] + reg.model["b"]
        else:
            raw = Xs @ reg.model["coef"] + reg.model.get("intercept", 0.0)
        return reg.y_mean + reg.y_std * raw
    if reg.kind == "rf":
        return np.mean([t.predict(X) for t in reg.model["trees"]], axis=0)
    # gbt
    out = np.full(len(X), reg.model["base"])
    for tree in reg.model["trees"]:
        out += reg.model["lr"] * tree.predict(X)
    return out


# ---------------------------------------------------------------------------
# linear family (fit in standardized space; data are centered, so no intercept)

def _fit_mlr(Xs, ys, params, seed):
    n, p = Xs.shape
    if n <= p + 1:
        raise ValidationError("mlr needs more rows than columns")
    Q, R = np.linalg.qr(Xs)
    if p and np.min(np.abs(np.diag(R))) < 1e-10 * max(1.0, np.max(np.abs(np.diag(R)))):
        raise FitError("singular design matrix; consider ridge instead of mlr")
    from scipy.linalg import solve_triangular

    beta = solve_triangular(R, Q.T @ ys) if p else np.zeros(0)
    return {"coef": beta, "intercept": 0.0}


def _fit_ridge(Xs, ys, params, seed):
    p = Xs.shape[1]
    A = Xs.T @ Xs + params["lam"] * np.eye(p)
    beta = np.linalg.solve(A, Xs.T @ ys)
    return {"coef": beta, "intercept": 0.0, "lam": params["lam"]}


def _fit_lasso(Xs, ys, params, seed):
    """Cyclic coordinate descent on (1/2n)||y - Xb||^2 + lam*||b||_1."""
    n, p = Xs.shape
    lam = params["lam"]
    col_norm = np.einsum("ij,ij->j", Xs, Xs) / n
    beta = np.zeros(p)
    resid = ys.copy()
    for _ in range(params["max_iter"]):
        max_delta = 0.0
        for j in range(p):
            if col_norm[j] == 0.0:
                continue
            old = beta[j]
            rho = (Xs[:, j] @ resid) / n + col_norm[j] * old
            new = math.copysign(max(abs(rho) - lam, 0.0), rho) / col_norm[j]
            if new != old:
                resid += Xs[:, j] * (old - new)
                beta[j] = new
                max_delta = max(max_delta, abs(new - old))
        if max_delta < params["tol"]:
            break
    return {"coef": beta, "intercept": 0.0, "lam": lam}


def _fit_sgd(Xs, ys, params, seed):
    """Squared loss, inverse-scaling learning rate, fixed shuffle stream."""
    n, p = Xs.shape
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x5D9]))
    beta = np.zeros(p)
    intercept = 0.0
    t = 0
    for _ in range(params["epochs"]):
        for i in rng.permutation(n):
            t += 1
            eta = params["eta0"] / t ** params["power_t"]
            err = Xs[i] @ beta + intercept - ys[i]
            beta -= eta * err * Xs[i]
            intercept -= eta * err
    return {"coef": beta, "intercept": intercept}


# ---------------------------------------------------------------------------
# support-vector regression (RBF kernel, SMO-style pairwise ascent)

def _rbf_kernel(A, B, gamma):
    sq = (A * A).sum(axis=1)[:, None] + (B * B).sum(axis=1)[None, :] - 2.0 * (A @ B.T)
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-gamma * sq)


def _fit_svr(Xs, ys, params, seed):
    n = len(ys)
    gamma = params["gamma"]
    if gamma is None:
        var = float(Xs.var())
        gamma = 1.0 / (Xs.shape[1] * var) if var > 0 else 1.0
    C, eps, tol = params["C"], params["epsilon"], params["tol"]
    K = _rbf_kernel(Xs, Xs, gamma)
    beta = np.zeros(n)      # alpha - alpha*
    f0 = np.zeros(n)        # K @ beta, maintained incrementally
    for _ in range(params["max_iter"]):
        grad = f0 - ys
        r = grad + np.where(beta >= 0, eps, -eps)   # right derivative
        l = grad + np.where(beta > 0, eps, -eps)    # left derivative
        up = beta < C
        down = beta > -C
        if not up.any() or not down.any():
            break
        i = int(np.flatnonzero(up)[np.argmin(r[up])])
        j = int(np.flatnonzero(down)[np.argmax(l[down])])
        if l[j] - r[i] < tol:
            break
        delta = _svr_pair_step(K, ys, beta, f0, i, j, eps, C)
        if delta == 0.0:
            break
        beta[i] += delta
        beta[j] -= delta
        f0 += delta * (K[:, i] - K[:, j])
    b = _svr_bias(f0, ys, beta, eps, C)
    keep = np.abs(beta) > 1e-12
    return {"beta": beta[keep], "X": Xs[keep].copy(), "b": b, "gamma": gamma,
            "train_beta": beta, "train_f": f0 + b}


def _svr_pair_step(K, ys, beta, f0, i, j, eps, C):
    """Exact minimizer of the piecewise-quadratic 1-D subproblem (delta > 0)."""
    eta = K[i, i] + K[j, j] - 2.0 * K[i, j]
    if eta <= 1e-12:
        return 0.0
    delta_max = min(C - beta[i], beta[j] + C)
    if delta_max <= 0:
        return 0.0
    kinks = sorted({-beta[i] for _ in (0,) if beta[i] < 0} | {beta[j] for _ in (0,) if beta[j] > 0})
    kinks = [k for k in kinks if 0.0 < k < delta_max]
    bounds = [0.0, *kinks, delta_max]
    smooth0 = (f0[i] - f0[j]) - (ys[i] - ys[j])  # derivative of the quadratic part at delta=0
    for lo, hi in zip(bounds, bounds[1:]):
        mid = 0.5 * (lo + hi)
        s_i = 1.0 if beta[i] + mid >= 0 else -1.0
        s_j = 1.0 if beta[j] - mid >= 0 else -1.0
        slope_eps = eps * (s_i - s_j)  # d/ddelta of eps*(|beta_i+delta| + |beta_j-delta|)
        opt = -(smooth0 + slope_eps) / eta
        if opt < lo:
            return lo if lo > 0 else 0.0
        if opt <= hi:
            return opt
    return delta_max


def _svr_bias(f0, ys, beta, eps, C):
    grad = f0 - ys
    r = grad + np.where(beta >= 0, eps, -eps)
    l = grad + np.where(beta > 0, eps, -eps)
    interior = (np.abs(beta) > 1e-9) & (np.abs(beta) < C - 1e-9)
    if interior.any():
        return float(np.mean(-grad[interior] - eps * np.sign(beta[interior])))
    up = beta < C
    down = beta > -C
    lo = -r[up].min() if up.any() else 0.0
    hi = -l[down].max() if down.any() else 0.0
    return float(0.5 * (lo + hi))


# ---------------------------------------------------------------------------
# tree ensembles

def _fit_gbt(X, y, params, seed):
    order = _canonical_order(X, y)
    X, y = X[order], y[order]
    base = float(y.mean())
    pred = np.full(len(y), base)
    trees = []
    for _ in range(params["n_rounds"]):
        tree = _grow_tree(X, y - pred, params["max_depth"], params["min_leaf"], X.shape[1])
        trees.append(tree)
        pred += params["learning_rate"] * tree.predict(X)
    return {"base": base, "trees": trees, "lr": params["learning_rate"]}


def _fit_rf(X, y, params, seed):
    order = _canonical_order(X, y)
    X, y = X[order], y[order]
    n, p = X.shape
    max_features = params["max_features"] or int(math.ceil(p / 3))
    seeds = np.random.SeedSequence([seed, 0xF0]).spawn(params["n_trees"])
    trees = []
    decrease = np.zeros(p)
    for ss in seeds:
        rng = np.random.default_rng(ss)
        rows = rng.integers(0, n, size=n)  # bootstrap
        tree = _grow_tree(X[rows], y[rows], params["max_depth"], params["min_leaf"],
                          p, max_features=max_features, rng=rng)
        trees.append(tree)
        decrease += tree.decrease
    total = decrease.sum()
    if total > 0:
        importances = decrease / params["n_trees"]
        importances = importances / importances.sum()
    else:
        importances = np.full(p, 1.0 / p)  # nothing split anywhere
    return {"trees": trees, "importances": importances}


def impurity_importances(reg):
    """Normalized per-feature SSE reduction of a fitted random forest."""
    if reg.kind != "rf":
        raise ValueError("impurity importances are defined for rf only")
    return reg.model["importances"].copy()


# ---------------------------------------------------------------------------
# hyperparameter overrides (plain key=value lines, e.g. rf.n_trees=200)

def parse_hyper_overrides(text):
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line or "." not in line.split("=", 1)[0]:
            raise ValidationError(f"config line {lineno}: expected kind.param=value")
        key, value = (part.strip() for part in line.split("=", 1))
        kind, param = key.split(".", 1)
        try:
            parsed = int(value)
        except ValueError:
            try:
                parsed = float(value)
            except ValueError:
                parsed = value
        out.setdefault(kind, {})[param] = parsed
    return out
