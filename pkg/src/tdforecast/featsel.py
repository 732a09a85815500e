"""Consensus feature selection for the rule-count columns.

Four independent rankings (scaled variance, non-zero share, forest impurity
importance, absolute Spearman correlation with the target) are combined by
keeping columns that land in the upper quartile of every ranking; if that
intersection is empty the rule relaxes to 3-of-4 membership.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import baselines
from .errors import EmptyResultError, ValidationError

TECHNIQUES = ("variance", "zero_pct", "impurity", "spearman")

DEFAULT_VARIANCE_THRESHOLD = 0.01
DEFAULT_MAX_ZERO_FRACTION = 0.95

FOREST_DEFAULTS = {"n_trees": 100, "max_depth": 10, "min_leaf": 2, "max_features": None}
FOREST_SEED = 1959


@dataclass(frozen=True)
class FeatureRanking:
    technique: str
    scores: dict          # column name -> score
    ranked: tuple         # names by descending score, ties broken by name
    flagged: frozenset    # columns the technique would drop outright

    def top_quartile(self):
        """Columns at or above the upper quartile of the score distribution.

        The cutoff is the order statistic at the 75% position (floor
        convention) so the set always holds at least a quarter of the
        columns; interpolating between ranks can otherwise land inside a
        cluster of near-tied top scores and keep too few.
        """
        return {c for c in self.ranked
                if self.scores[c] >= self.quartile_cutoff()} - set(self.flagged)

    def quartile_cutoff(self):
        values = np.array(list(self.scores.values()))
        return float(np.percentile(values, 75, method="lower"))


@dataclass(frozen=True)
class SelectionResult:
    kept: frozenset
    per_technique: dict   # technique -> FeatureRanking
    mode: str             # "strict_intersection" or "majority_fallback"


def _make_ranking(technique, names, scores, flagged=()):
    score_map = {name: float(s) for name, s in zip(names, scores)}
    ranked = tuple(sorted(score_map, key=lambda c: (-score_map[c], c)))
    return FeatureRanking(technique=technique, scores=score_map, ranked=ranked,
                          flagged=frozenset(flagged))


def variance_filter(panel, threshold=DEFAULT_VARIANCE_THRESHOLD):
    """Sample variance of each column after min-max scaling to [0, 1]."""
    if threshold < 0:
        raise ValidationError("variance threshold must be >= 0")
    X = panel.exog
    lo = X.min(axis=0)
    span = X.max(axis=0) - lo
    span = np.where(span == 0.0, 1.0, span)
    scaled = (X - lo) / span
    scores = scaled.var(axis=0, ddof=1) if len(X) > 1 else np.zeros(X.shape[1])
    flagged = [c for c, s in zip(panel.column_names, scores) if s < threshold]
    return _make_ranking("variance", panel.column_names, scores, flagged)


def zero_percentage_filter(panel, max_zero_fraction=DEFAULT_MAX_ZERO_FRACTION):
    """Share of non-zero entries; mostly-empty columns are dropped."""
    if len(panel) == 0:
        raise ValidationError("empty panel")
    zero_frac = (panel.exog == 0.0).mean(axis=0)
    scores = 1.0 - zero_frac
    flagged = [c for c, zf in zip(panel.column_names, zero_frac) if zf > max_zero_fraction]
    return _make_ranking("zero_pct", panel.column_names, scores, flagged)


def impurity_importance(panel, forest_config=None, seed=FOREST_SEED):
    """Random-forest impurity importance of each column for the target."""
    if len(panel) < 10:
        raise ValidationError("impurity importance needs at least 10 rows")
    hyper = dict(FOREST_DEFAULTS)
    hyper.update(forest_config or {})
    reg = baselines.fit_regressor("rf", panel.exog, panel.y, hyper=hyper, seed=seed)
    scores = baselines.impurity_importances(reg)
    return _make_ranking("impurity", panel.column_names, scores)


def spearman_rho(x, y):
    """Spearman correlation via Pearson on average ranks; 0 for a constant."""
    def ranks(v):
        order = np.argsort(v, kind="stable")
        r = np.empty(len(v))
        r[order] = np.arange(1, len(v) + 1, dtype=float)
        # average ranks over ties
        vals, inverse, counts = np.unique(v, return_inverse=True, return_counts=True)
        sums = np.zeros(len(vals))
        np.add.at(sums, inverse, r)
        return sums[inverse] / counts[inverse]

    rx, ry = ranks(np.asarray(x, float)), ranks(np.asarray(y, float))
    sx, sy = rx.std(), ry.std()
    if sx == 0.0 or sy == 0.0:
        return 0.0
    return float(np.mean((rx - rx.mean()) * (ry - ry.mean())) / (sx * sy))


def spearman_scores(panel):
    """Absolute Spearman correlation of each column with the target."""
    if len(panel) < 3:
        raise ValidationError("spearman scores need at least 3 rows")
    scores = [abs(spearman_rho(panel.exog[:, j], panel.y)) for j in range(panel.exog.shape[1])]
    return _make_ranking("spearman", panel.column_names, scores)


def iqr_consensus(rankings):
    """Intersect the four upper quartiles; relax to 3-of-4 when empty."""
    if len(rankings) != len(TECHNIQUES):
        raise ValidationError(f"expected {len(TECHNIQUES)} rankings, got {len(rankings)}")
    column_sets = [set(r.scores) for r in rankings]
    if any(s != column_sets[0] for s in column_sets):
        raise ValidationError("rankings cover different column sets")
    quartiles = [r.top_quartile() for r in rankings]
    kept = set.intersection(*quartiles)
    mode = "strict_intersection"
    if not kept:
        mode = "majority_fallback"
        counts = {}
        for q in quartiles:
            for c in q:
                counts[c] = counts.get(c, 0) + 1
        kept = {c for c, k in counts.items() if k >= 3}
    if not kept:
        raise EmptyResultError(
            "consensus selection is empty even after the 3-of-4 fallback; "
            "relax the variance / zero-fraction thresholds"
        )
    return SelectionResult(
        kept=frozenset(kept),
        per_technique={r.technique: r for r in rankings},
        mode=mode,
    )


def select_features(panel, variance_threshold=DEFAULT_VARIANCE_THRESHOLD,
                    max_zero_fraction=DEFAULT_MAX_ZERO_FRACTION,
                    forest_config=None, seed=FOREST_SEED):
    """Run all four techniques on a panel and combine them."""
    rankings = [
        variance_filter(panel, variance_threshold),
        zero_percentage_filter(panel, max_zero_fraction),
        impurity_importance(panel, forest_config, seed=seed),
        spearman_scores(panel),
    ]
    return iqr_consensus(rankings)


def selection_report(result):
    """JSON-ready report: scores, cutoffs, kept set and fallback mode."""
    return {
        "mode": result.mode,
        "kept": sorted(result.kept),
        "techniques": {
            name: {
                "scores": {c: ranking.scores[c] for c in sorted(ranking.scores)},
                "quartile_cutoff": ranking.quartile_cutoff(),
                "flagged": sorted(ranking.flagged),
                "top_quartile": sorted(ranking.top_quartile()),
            }
            for name, ranking in sorted(result.per_technique.items())
        },
    }


def write_selection_report(result, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(selection_report(result), fh, indent=2, sort_keys=True)
        fh.write("\n")
