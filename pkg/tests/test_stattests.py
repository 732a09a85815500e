import numpy as np
import pytest

from tdforecast import stattests as stt
from tdforecast.errors import ValidationError


def _ar1(rng, n, phi, burn=50):
    e = rng.standard_normal(n + burn)
    x = np.zeros(n + burn)
    for i in range(1, n + burn):
        x[i] = phi * x[i - 1] + e[i]
    return x[burn:]


def test_adf_white_noise_rejects():
    hits = 0
    for s in range(100):
        rng = np.random.default_rng(s)
        if stt.adf_test(rng.standard_normal(200)).reject:
            hits += 1
    assert hits >= 90


def test_adf_random_walk_fails_to_reject():
    holds = 0
    for s in range(100):
        rng = np.random.default_rng(s)
        if not stt.adf_test(np.cumsum(rng.standard_normal(200))).reject:
            holds += 1
    assert holds >= 90


def test_adf_statistic_matches_ols_oracle():
    rng = np.random.default_rng(42)
    x = np.cumsum(rng.standard_normal(120))
    lag = 3
    result = stt.adf_test(x, max_lag=lag, regression="c", autolag=False)

    # normal-equation oracle with the same fixed lag count
    dx = np.diff(x)
    y = dx[lag:]
    cols = [x[lag:-1]]
    for i in range(1, lag + 1):
        cols.append(dx[lag - i:len(dx) - i])
    cols.append(np.ones(len(y)))
    Z = np.column_stack(cols)
    beta = np.linalg.solve(Z.T @ Z, Z.T @ y)
    resid = y - Z @ beta
    s2 = resid @ resid / (len(y) - Z.shape[1])
    se = np.sqrt(s2 * np.linalg.inv(Z.T @ Z)[0, 0])
    assert result.statistic == pytest.approx(beta[0] / se, abs=1e-8)


def test_adf_constant_series_sentinel():
    result = stt.adf_test(np.full(60, 3.0))
    assert result.statistic == float("-inf")
    assert result.reject


def test_adf_shift_invariance_with_constant():
    rng = np.random.default_rng(7)
    x = _ar1(rng, 150, 0.5)
    a = stt.adf_test(x, regression="c")
    b = stt.adf_test(x + 1000.0, regression="c")
    assert a.statistic == pytest.approx(b.statistic, abs=1e-7)


def test_adf_too_short_errors():
    with pytest.raises(ValidationError):
        stt.adf_test(np.arange(12.0), max_lag=5)


def test_ndiffs_stationary_ar1():
    hits = 0
    for s in range(100):
        rng = np.random.default_rng(s)
        if stt.ndiffs(_ar1(rng, 200, 0.5)) == 0:
            hits += 1
    assert hits >= 90


def test_ndiffs_random_walk():
    hits = 0
    for s in range(100):
        rng = np.random.default_rng(s)
        if stt.ndiffs(np.cumsum(rng.standard_normal(200))) == 1:
            hits += 1
    assert hits >= 90


def test_ndiffs_twice_integrated():
    hits = 0
    for s in range(60):
        rng = np.random.default_rng(s)
        x = np.cumsum(np.cumsum(rng.standard_normal(200)))
        if stt.ndiffs(x) == 2:
            hits += 1
    assert hits > 30  # majority


def test_canova_hansen_sinusoid():
    m = 12
    hits = 0
    for s in range(100):
        rng = np.random.default_rng(s)
        t = np.arange(10 * m, dtype=float)
        x = np.sin(2 * np.pi * t / m) + 0.1 * rng.standard_normal(10 * m)
        hits += stt.canova_hansen(x, m)
    assert hits >= 90


def test_canova_hansen_white_noise():
    m = 12
    zeros = 0
    for s in range(100):
        rng = np.random.default_rng(s)
        zeros += stt.canova_hansen(rng.standard_normal(240), m) == 0
    assert zeros >= 90


def test_canova_hansen_constant():
    assert stt.canova_hansen(np.full(200, 5.0), 12) == 0


def test_canova_hansen_preconditions():
    with pytest.raises(ValidationError):
        stt.canova_hansen(np.arange(10.0), 12)
    with pytest.raises(ValidationError):
        stt.canova_hansen(np.arange(100.0), 1)


def test_canova_hansen_outside_table_is_conservative():
    rng = np.random.default_rng(0)
    assert stt.canova_hansen(rng.standard_normal(600), 60) == 1


def test_acf_lag0_and_band():
    rng = np.random.default_rng(0)
    x = rng.standard_normal(100)
    values, band = stt.acf(x, 10)
    assert values[0] == 1.0
    assert band == pytest.approx(1.96 / 10.0)


def test_acf_white_noise_inside_band():
    rng = np.random.default_rng(1)
    values, band = stt.acf(rng.standard_normal(500), 20)
    assert np.mean(np.abs(values[1:]) < band) > 0.8


def test_acf_ar1_matches_theory():
    # average over a few replications: a single n=2000 draw has sampling
    # noise comparable to the 0.05 tolerance at the deeper lags
    acc = np.zeros(6)
    for s in range(5):
        rng = np.random.default_rng(s)
        values, _ = stt.acf(_ar1(rng, 2000, 0.8), 5)
        acc += values
    acc /= 5
    for k in range(1, 6):
        assert acc[k] == pytest.approx(0.8 ** k, abs=0.05)


def test_acf_constant_errors():
    with pytest.raises(ValidationError):
        stt.acf(np.full(50, 2.0), 5)


def test_acf_pacf_bounded():
    for s in range(10):
        rng = np.random.default_rng(s)
        x = _ar1(rng, 300, 0.6)
        values, _ = stt.acf(x, 20)
        assert np.all(np.abs(values) <= 1.0 + 1e-12)
        assert np.all(np.abs(stt.pacf(x, 20)) <= 1.0 + 1e-9)


def test_pacf_ar1():
    rng = np.random.default_rng(3)
    x = _ar1(rng, 3000, 0.6)
    p = stt.pacf(x, 6)
    assert p[1] == pytest.approx(0.6, abs=0.05)
    assert np.all(np.abs(p[2:]) < 0.08)


def test_pacf_base_equals_acf():
    rng = np.random.default_rng(4)
    x = rng.standard_normal(200)
    values, _ = stt.acf(x, 5)
    assert stt.pacf(x, 5)[1] == values[1]


def test_pacf_ma1_geometric_decay():
    rng = np.random.default_rng(5)
    e = rng.standard_normal(6001)
    x = e[1:] + 0.8 * e[:-1]
    p = np.abs(stt.pacf(x, 5)[1:])
    # theory: |pacf_k| shrinks roughly geometrically for an MA(1)
    assert p[0] > p[1] > p[2]
    theo = [abs(-((-0.8) ** k) * (1 - 0.8 ** 2) / (1 - 0.8 ** (2 * (k + 1)))) for k in (1, 2, 3)]
    for got, want in zip(p[:3], theo):
        assert got == pytest.approx(want, abs=0.05)


def test_seasonal_decompose_linear_plus_sine():
    m = 12
    t = np.arange(20 * m, dtype=float)
    x = t + np.sin(2 * np.pi * t / m)
    dec = stt.seasonal_decompose(x, m)
    interior = slice(m, len(t) - m)
    np.testing.assert_allclose(dec.trend[interior], t[interior], atol=0.05)
    np.testing.assert_allclose(dec.seasonal[interior],
                               np.sin(2 * np.pi * t / m)[interior], atol=0.05)


def test_seasonal_decompose_identity_and_zero_sum():
    rng = np.random.default_rng(6)
    m = 12
    x = np.cumsum(rng.standard_normal(10 * m)) + 3 * np.sin(2 * np.pi * np.arange(10 * m) / m)
    dec = stt.seasonal_decompose(x, m)
    ok = ~np.isnan(dec.trend)
    np.testing.assert_allclose(
        (dec.trend + dec.seasonal + dec.residual)[ok], x[ok], atol=1e-9)
    assert abs(sum(dec.seasonal[:m])) < 1e-9


def test_seasonal_decompose_constant():
    dec = stt.seasonal_decompose(np.full(60, 9.0), 12)
    np.testing.assert_allclose(dec.seasonal, 0.0, atol=1e-12)


def test_seasonal_decompose_too_short():
    with pytest.raises(ValidationError):
        stt.seasonal_decompose(np.arange(20.0), 12)


def test_decomposition_csv(tmp_path):
    x = np.arange(30.0)
    dec = stt.seasonal_decompose(x, 4)
    path = tmp_path / "dec.csv"
    stt.write_decomposition_csv(dec, x, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "PERIOD,OBSERVED,TREND,SEASONAL,RESIDUAL"
    assert len(lines) == 31
    assert lines[1].split(",")[2] == ""  # trend undefined at the edge


def test_ljung_box_iid():
    hits = 0
    for s in range(100):
        rng = np.random.default_rng(s)
        if stt.ljung_box(rng.standard_normal(500), 10).p_value > 0.05:
            hits += 1
    assert hits >= 90


def test_ljung_box_autocorrelated():
    hits = 0
    for s in range(100):
        rng = np.random.default_rng(s)
        if stt.ljung_box(_ar1(rng, 300, 0.9), 10).p_value < 0.01:
            hits += 1
    assert hits >= 95


def test_ljung_box_zero_lags_errors():
    with pytest.raises(ValidationError):
        stt.ljung_box(np.arange(50.0), 0)
