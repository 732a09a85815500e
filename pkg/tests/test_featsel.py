import numpy as np
import pytest
from datetime import datetime
from hypothesis import given, settings, strategies as st

from tdforecast import featsel
from tdforecast.data import Frequency, ProjectPanel
from tdforecast.errors import EmptyResultError, ValidationError


def _panel(exog, y=None, columns=None):
    exog = np.asarray(exog, dtype=float)
    n, k = exog.shape
    if columns is None:
        columns = tuple(f"C{j}" for j in range(k))
    if y is None:
        y = exog[:, 0] * 2.0 + 1.0
    return ProjectPanel(
        project_id="p", frequency=Frequency.MONTHLY, origin=datetime(2020, 1, 1),
        y=np.asarray(y, dtype=float), exog=exog, column_names=tuple(columns),
        interpolated_mask=np.zeros(n, dtype=bool),
    )


def test_variance_filter_constant_column():
    exog = np.column_stack([np.full(20, 5.0), np.arange(20.0)])
    ranking = featsel.variance_filter(_panel(exog), threshold=0.001)
    assert ranking.scores["C0"] == 0.0
    assert "C0" in ranking.flagged
    assert "C1" not in ranking.flagged


def test_variance_filter_balanced_binary_is_maximal():
    balanced = np.tile([0.0, 1.0], 10)
    skewed = np.r_[np.zeros(18), np.ones(2)]
    ranking = featsel.variance_filter(_panel(np.column_stack([balanced, skewed])))
    assert ranking.scores["C0"] > ranking.scores["C1"]


def test_variance_filter_zero_threshold_keeps_all():
    rng = np.random.default_rng(0)
    ranking = featsel.variance_filter(_panel(rng.standard_normal((15, 3))), threshold=0.0)
    assert not ranking.flagged


def test_zero_percentage_examples():
    n = 100
    mostly_zero = np.zeros(n)
    mostly_zero[:4] = 1.0  # 96% zeros
    dense = np.arange(1.0, n + 1.0)
    all_zero = np.zeros(n)
    panel = _panel(np.column_stack([mostly_zero, dense, all_zero]))
    ranking = featsel.zero_percentage_filter(panel, max_zero_fraction=0.95)
    assert "C0" in ranking.flagged
    assert ranking.scores["C1"] == 1.0 and "C1" not in ranking.flagged
    assert ranking.scores["C2"] == 0.0 and "C2" in ranking.flagged


def test_impurity_signal_vs_noise_monte_carlo():
    # light forest keeps the 100-seed battery quick; bar mirrors the design rate
    hits = 0
    for s in range(100):
        rng = np.random.default_rng(s)
        x1 = rng.standard_normal(60)
        x2 = rng.standard_normal(60)
        y = 10.0 * x1 + rng.standard_normal(60)
        panel = _panel(np.column_stack([x1, x2]), y=y)
        ranking = featsel.impurity_importance(
            panel, forest_config={"n_trees": 30, "max_depth": 6}, seed=s)
        hits += ranking.scores["C0"] > ranking.scores["C1"]
    assert hits >= 95


def test_impurity_constant_column_zero():
    rng = np.random.default_rng(1)
    x = rng.standard_normal(40)
    panel = _panel(np.column_stack([x, np.full(40, 3.0)]), y=5 * x)
    ranking = featsel.impurity_importance(panel)
    assert ranking.scores["C1"] == 0.0


def test_impurity_single_column_is_one():
    rng = np.random.default_rng(2)
    x = rng.standard_normal(40)
    ranking = featsel.impurity_importance(_panel(x[:, None], y=x * 3))
    assert ranking.scores["C0"] == pytest.approx(1.0, abs=1e-9)


def test_impurity_importances_sum_to_one():
    rng = np.random.default_rng(3)
    panel = _panel(rng.standard_normal((50, 6)), y=rng.standard_normal(50))
    ranking = featsel.impurity_importance(panel)
    assert sum(ranking.scores.values()) == pytest.approx(1.0, abs=1e-9)


def test_spearman_examples():
    panel = _panel(np.array([[1.0], [2.0], [3.0]]), y=[2.0, 4.0, 6.0])
    assert featsel.spearman_scores(panel).scores["C0"] == pytest.approx(1.0)

    panel = _panel(np.array([[1.0], [2.0], [3.0]]), y=[6.0, 4.0, 2.0])
    assert featsel.spearman_scores(panel).scores["C0"] == pytest.approx(1.0)  # |rho|

    assert featsel.spearman_rho([1, 2, 3], [6, 4, 2]) == pytest.approx(-1.0)


def test_spearman_ties_match_rank_oracle():
    rng = np.random.default_rng(4)
    x = rng.integers(0, 4, size=30).astype(float)  # heavy ties
    y = rng.integers(0, 4, size=30).astype(float)

    def avg_ranks(v):
        order = np.argsort(v, kind="stable")
        ranks = np.empty(len(v))
        ranks[order] = np.arange(1, len(v) + 1)
        out = ranks.copy()
        for val in np.unique(v):
            mask = v == val
            out[mask] = ranks[mask].mean()
        return out

    rx, ry = avg_ranks(x), avg_ranks(y)
    oracle = np.corrcoef(rx, ry)[0, 1]
    assert featsel.spearman_rho(x, y) == pytest.approx(oracle, abs=1e-12)


def test_spearman_constant_is_zero():
    assert featsel.spearman_rho(np.full(10, 2.0), np.arange(10.0)) == 0.0


@given(st.lists(st.floats(-100, 100), min_size=5, max_size=25, unique=True),
       st.sampled_from(["exp", "cube", "affine"]))
@settings(max_examples=40, deadline=None)
def test_spearman_monotone_invariance(xs, transform):
    from hypothesis import assume

    rng = np.random.default_rng(abs(hash(tuple(xs))) % 2**32)
    x = np.array(xs)
    y = rng.standard_normal(len(x))
    fn = {"exp": lambda v: np.exp(v / 100.0), "cube": lambda v: v ** 3,
          "affine": lambda v: 3.0 * v + 7.0}[transform]
    fx = fn(x)
    # the map must stay strictly monotone in float arithmetic (no underflow ties)
    assume(len(np.unique(fx)) == len(x))
    base = featsel.spearman_rho(x, y)
    assert featsel.spearman_rho(fx, y) == pytest.approx(base, abs=1e-12)


def test_ranking_deterministic_tie_break():
    exog = np.column_stack([np.arange(10.0), np.arange(10.0)])  # identical scores
    r1 = featsel.spearman_scores(_panel(exog, y=np.arange(10.0)))
    r2 = featsel.spearman_scores(_panel(exog, y=np.arange(10.0)))
    assert r1.ranked == r2.ranked == ("C0", "C1")  # ties broken by name


def _ranking(technique, scores):
    return featsel._make_ranking(technique, list(scores), list(scores.values()))


def test_iqr_consensus_strict():
    # A and B top every ranking; the third top-quartile slot rotates, so the
    # four-way intersection is exactly {A, B}
    names = ["A", "B", "C0", "C1", "C2", "C3", "C4", "C5"]
    rankings = []
    for i, t in enumerate(featsel.TECHNIQUES):
        s = {n: 0.01 * j for j, n in enumerate(names)}
        s["A"] = 5.0
        s["B"] = 6.0
        s[f"C{i}"] = 4.0  # a different also-ran per technique
        rankings.append(_ranking(t, s))
    result = featsel.iqr_consensus(rankings)
    assert result.mode == "strict_intersection"
    assert result.kept == {"A", "B"}


def test_iqr_consensus_fallback_three_of_four():
    # X sits in three of the four top quartiles; no column sits in all four
    names = ["X", "P", "Q", "R", "U", "V", "W", "Z"]
    tops = [("X", "P", "Q"), ("X", "P", "R"), ("X", "Q", "R"), ("U", "V", "W")]
    rankings = []
    for t, top in zip(featsel.TECHNIQUES, tops):
        s = {n: 0.0 for n in names}
        for rank, name in enumerate(top):
            s[name] = 3.0 - rank
        rankings.append(_ranking(t, s))
    result = featsel.iqr_consensus(rankings)
    assert result.mode == "majority_fallback"
    assert result.kept == {"X"}


def test_iqr_consensus_empty_errors():
    # every column appears in at most two of the four top quartiles
    names = ["a", "b", "c", "d", "e", "f", "g", "h"]
    tops = [("a", "b", "c"), ("d", "e", "f"), ("g", "h", "a"), ("b", "d", "g")]
    rankings = []
    for t, top in zip(featsel.TECHNIQUES, tops):
        s = {n: 0.0 for n in names}
        for rank, name in enumerate(top):
            s[name] = 3.0 - rank
        rankings.append(_ranking(t, s))
    with pytest.raises(EmptyResultError, match="relax"):
        featsel.iqr_consensus(rankings)


def test_iqr_consensus_rejects_mismatched_columns():
    a = _ranking("variance", {"A": 1.0, "B": 2.0})
    b = _ranking("zero_pct", {"A": 1.0, "C": 2.0})
    c = _ranking("impurity", {"A": 1.0, "B": 2.0})
    d = _ranking("spearman", {"A": 1.0, "B": 2.0})
    with pytest.raises(ValidationError):
        featsel.iqr_consensus([a, b, c, d])


def test_strict_mode_subset_of_every_quartile():
    rng = np.random.default_rng(7)
    informative = rng.standard_normal((80, 3))
    noise = rng.standard_normal((80, 5)) * 0.01
    y = informative @ np.array([3.0, 2.0, 1.5]) + 0.1 * rng.standard_normal(80)
    panel = _panel(np.column_stack([np.abs(informative) + 1, np.abs(noise)]), y=y)
    result = featsel.select_features(panel)
    if result.mode == "strict_intersection":
        for ranking in result.per_technique.values():
            assert result.kept <= ranking.top_quartile()


def test_selection_report_round_trip(tmp_path):
    rng = np.random.default_rng(8)
    x = np.abs(rng.standard_normal((40, 4))) + 0.5
    y = 4 * x[:, 0] + rng.standard_normal(40)
    result = featsel.select_features(_panel(x, y=y))
    path = tmp_path / "selection.json"
    featsel.write_selection_report(result, path)
    import json
    payload = json.loads(path.read_text())
    assert set(payload["kept"]) == set(result.kept)
    assert set(payload["techniques"]) == set(featsel.TECHNIQUES)
    for info in payload["techniques"].values():
        assert "quartile_cutoff" in info and "scores" in info
