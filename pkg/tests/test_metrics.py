import math

import numpy as np
import pytest

from driftcast.evaluate import (PredictionLog, diebold_mariano,
                                overall_metrics, rmse, rolling_metric, smape)
from driftcast.timegrid import DEFAULT_EPOCH, parse_hour


def test_smape_hand_values():
    assert smape([100.0], [110.0]) == pytest.approx(100.0 * 10 / 105, abs=1e-9)
    assert smape([5, 5, 5], [5, 5, 5]) == 0.0
    assert smape([0.0], [0.0]) == 0.0  # zero-denominator term contributes 0
    assert smape([0.0, 100.0], [0.0, 100.0]) == 0.0


def test_smape_symmetry_and_order_invariance():
    rng = np.random.default_rng(0)
    a = rng.uniform(0, 100, 50)
    f = rng.uniform(0, 100, 50)
    assert smape(a, f) == pytest.approx(smape(f, a), abs=1e-12)
    perm = rng.permutation(50)
    assert smape(a[perm], f[perm]) == pytest.approx(smape(a, f), abs=1e-12)


def test_rmse_hand_values_and_homogeneity():
    actual = np.array([10.0, 10.0])
    predicted = np.array([13.0, 6.0])  # errors [3, -4]
    assert rmse(actual, predicted) == pytest.approx(math.sqrt(12.5), abs=1e-9)
    assert rmse(actual, actual) == 0.0
    scaled = actual + 3 * (predicted - actual)
    assert rmse(actual, scaled) == pytest.approx(3 * rmse(actual, predicted), rel=1e-12)


def test_metrics_reject_empty():
    with pytest.raises(ValueError):
        smape([], [])
    with pytest.raises(ValueError):
        rmse([], [])


def _log_over(hours, zones=(1,), actual_fn=None, predicted_fn=None):
    hours = np.asarray(hours, dtype=np.int64)
    times = np.repeat(hours, len(zones))
    zone_col = np.tile(np.asarray(zones, dtype=np.int64), len(hours))
    actual = np.ones(len(times)) * 100.0 if actual_fn is None else actual_fn(times)
    predicted = actual.copy() if predicted_fn is None else predicted_fn(times, actual)
    correct = np.abs(predicted - actual) <= 0.1 * np.maximum(actual, 1.0)
    return PredictionLog(times, zone_col, actual, predicted, correct)


def test_rolling_metric_uniform_is_constant():
    start = parse_hour("2011-01-01T00")
    hours = np.arange(start, parse_hour("2012-01-01T00"))
    log = _log_over(hours, predicted_fn=lambda t, a: a + 10.0)
    series = rolling_metric(log, "rmse", "quarter", DEFAULT_EPOCH)
    assert len(series) == 4
    assert all(v == pytest.approx(10.0) for _, v, _ in series)
    assert [h for h, _, _ in series] == [parse_hour(s) for s in
                                         ("2011-01-01T00", "2011-04-01T00",
                                          "2011-07-01T00", "2011-10-01T00")]


def test_rolling_metric_one_bad_quarter_is_local():
    start = parse_hour("2011-01-01T00")
    hours = np.arange(start, parse_hour("2012-01-01T00"))
    q3 = (hours >= parse_hour("2011-07-01T00")) & (hours < parse_hour("2011-10-01T00"))

    def predicted(t, a):
        out = a.copy()
        out[q3] += 50.0
        return out

    log = _log_over(hours, predicted_fn=predicted)
    series = rolling_metric(log, "smape", "quarter", DEFAULT_EPOCH)
    values = [v for _, v, _ in series]
    assert values[2] > 0
    assert values[0] == values[1] == values[3] == 0.0


def test_quarterly_mse_weighted_mean_identity():
    rng = np.random.default_rng(1)
    start = parse_hour("2011-01-01T00")
    hours = np.arange(start, start + 5000)
    log = _log_over(hours, predicted_fn=lambda t, a: a + rng.normal(0, 7, len(t)))
    overall = rmse(log.actual, log.predicted)
    quarters = rolling_metric(log, "rmse", "quarter", DEFAULT_EPOCH)
    weighted = sum(v * v * n for _, v, n in quarters) / sum(n for _, _, n in quarters)
    assert overall ** 2 == pytest.approx(weighted, abs=1e-9)


def test_overall_metrics_pooled_vs_zone_mean():
    start = parse_hour("2011-01-01T00")
    hours = np.arange(start, start + 1000)
    times = np.repeat(hours, 2)
    zones = np.tile(np.array([1, 2]), len(hours))
    actual = np.where(zones == 1, 100.0, 10.0)
    predicted = actual + np.where(zones == 1, 10.0, 5.0)
    log = PredictionLog(times, zones, actual, predicted,
                        np.zeros(len(times), dtype=bool))
    pooled_smape, pooled_rmse = overall_metrics(log, "pooled")
    mean_smape, mean_rmse = overall_metrics(log, "zone_mean")
    per_zone = [smape(actual[zones == z], predicted[zones == z]) for z in (1, 2)]
    assert mean_smape == pytest.approx(np.mean(per_zone))
    assert pooled_smape == pytest.approx(smape(actual, predicted))
    # on a balanced grid the smape modes coincide (mean of equal-count means)
    assert pooled_smape == pytest.approx(mean_smape)
    # rmse does not: root of pooled mean square vs mean of per-zone roots
    assert pooled_rmse == pytest.approx(math.sqrt((100 + 25) / 2))
    assert mean_rmse == pytest.approx(7.5)


# -- Diebold-Mariano ----------------------------------------------------------


def test_dm_identical_series():
    loss = np.random.default_rng(2).uniform(size=100)
    stat, p = diebold_mariano(loss, loss)
    assert (stat, p) == (0.0, 1.0)


def test_dm_constant_shift_decisive():
    rng = np.random.default_rng(3)
    base = rng.uniform(1, 2, size=1000)
    stat, p = diebold_mariano(base, base + 1.0)
    assert p < 1e-6 and stat < 0
    # bit-exact constant differential hits the zero-variance branch
    exact = rng.integers(1, 9, size=1000).astype(float)
    stat, p = diebold_mariano(exact, exact + 1.0)
    assert stat == -math.inf and p == 0.0


def test_dm_antisymmetry():
    rng = np.random.default_rng(4)
    a = rng.uniform(size=200)
    b = rng.uniform(size=200)
    stat_ab, p_ab = diebold_mariano(a, b)
    stat_ba, p_ba = diebold_mariano(b, a)
    assert stat_ab == -stat_ba
    assert p_ab == p_ba


def test_dm_requires_pairing_and_length():
    with pytest.raises(ValueError):
        diebold_mariano(np.ones(50), np.ones(49))
    with pytest.raises(ValueError):
        diebold_mariano(np.ones(10), np.ones(10))


def test_dm_null_calibration():
    # paired i.i.d. equal-loss series: rejection rate at alpha=0.01 stays
    # near nominal (Monte-Carlo over 1000 simulated pairs of length 1000)
    rng = np.random.default_rng(5)
    rejections = 0
    sims = 1000
    for _ in range(sims):
        a = rng.normal(size=1000) ** 2
        b = rng.normal(size=1000) ** 2
        _, p = diebold_mariano(a, b)
        rejections += p < 0.01
    rate = rejections / sims
    assert 0.002 <= rate <= 0.03
