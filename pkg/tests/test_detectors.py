import math

import numpy as np
import pytest

from driftcast.detectors import (DRIFT, STABLE, WARNING, Hdddm,
                                 MannKendallStream, Stepd, binarize,
                                 binarize_array, hellinger_distance,
                                 make_detector, mk_statistic)
from driftcast.normal import normal_two_sided_p
from oracles import hellinger_by_hand, mk_brute_force


# -- binarize -----------------------------------------------------------------


def test_binarize_boundary_inclusive():
    assert binarize(100.0, 110.0)          # exactly 10% off counts as correct
    assert not binarize(100.0, 110.01)
    assert binarize(0.0, 0.0)              # eps_zero guards zero demand
    assert binarize(0.0, 0.1)
    assert not binarize(0.0, 0.2)
    with pytest.raises(ValueError):
        binarize(-1.0, 0.0)


def test_binarize_array_matches_scalar():
    rng = np.random.default_rng(0)
    actual = rng.integers(0, 200, size=300).astype(float)
    predicted = actual + rng.normal(0, 15, size=300)
    flags = binarize_array(actual, predicted)
    for i in range(300):
        assert flags[i] == binarize(actual[i], predicted[i])


# -- STEPD --------------------------------------------------------------------


def test_stepd_identical_proportions_stable():
    # deterministic 75% accuracy everywhere: recent and overall proportions
    # agree up to the continuity correction, so T stays non-positive
    detector = Stepd()
    pattern = [True, True, True, False]
    verdicts = {detector.step(pattern[i % 4]) for i in range(5000)}
    assert DRIFT not in verdicts


def test_stepd_alternating_stream_stable_forever():
    detector = Stepd()
    for i in range(4000):
        assert detector.step(i % 2 == 0) != DRIFT


def test_stepd_hand_computed_statistic_drifts():
    # overall 1000 at 90% correct, then a recent window of 30 at 50%
    detector = Stepd(window=30)
    inputs = [True] * 900 + [False] * 100
    np.random.default_rng(2).shuffle(inputs)
    for v in inputs:
        detector.step(bool(v))
    # hand oracle: T and two-sided tail for the final state
    r_o, n_o, r_r, n_r = 900.0, 1000.0, 15.0, 30.0
    p_hat = (r_o + r_r) / (n_o + n_r)
    inv = 1 / n_o + 1 / n_r
    t = (abs(r_o / n_o - r_r / n_r) - 0.5 * inv) / math.sqrt(p_hat * (1 - p_hat) * inv)
    assert normal_two_sided_p(t) < 0.003
    verdicts = [detector.step(bool(v)) for v in [True] * 15 + [False] * 15]
    assert DRIFT in verdicts


def test_stepd_warning_zone_and_reset():
    detector = Stepd(window=30, alpha_drift=0.0, alpha_warning=0.05)
    for _ in range(1000):
        detector.step(True)
    verdicts = [detector.step(False) for _ in range(25)]
    assert WARNING in verdicts
    assert DRIFT not in verdicts  # alpha_drift zero makes drift unreachable
    detector2 = Stepd(window=30)
    for _ in range(1000):
        detector2.step(True)
    seen = [detector2.step(False) for _ in range(30)]
    assert DRIFT in seen
    # drift reset the counts: well below 2 * window observations since reset
    assert detector2._overall_n < 30


def test_stepd_all_correct_degenerate_stable():
    detector = Stepd(window=30)
    for _ in range(500):
        assert detector.step(True) == STABLE


# -- Hellinger / HDDDM --------------------------------------------------------


def test_hellinger_identity_and_disjoint():
    assert hellinger_distance([3, 5, 2], [3, 5, 2]) == 0.0
    assert hellinger_distance([1, 0], [0, 1]) == pytest.approx(math.sqrt(2.0))


def test_hellinger_hand_example():
    # p = [1,1]/2, q = [9,1]/10, worked by hand with the defining formula
    by_hand = hellinger_by_hand([1, 1], [9, 1])
    assert by_hand == pytest.approx(0.459506, abs=1e-6)
    assert hellinger_distance([1, 1], [9, 1]) == pytest.approx(by_hand, abs=1e-4)


def test_hellinger_properties_random_histograms():
    rng = np.random.default_rng(3)
    for _ in range(1000):
        bins = int(rng.integers(2, 12))
        p = rng.integers(0, 50, size=bins)
        q = rng.integers(0, 50, size=bins)
        if p.sum() == 0 or q.sum() == 0:
            continue
        d_pq = hellinger_distance(p, q)
        d_qp = hellinger_distance(q, p)
        assert d_pq == pytest.approx(d_qp, abs=1e-12)          # symmetry
        assert -1e-12 <= d_pq <= math.sqrt(2.0) + 1e-12         # bounds
        normalized_equal = np.allclose(p / p.sum(), q / q.sum())
        assert (d_pq < 1e-12) == normalized_equal               # zero iff equal


def test_hellinger_contract_violations():
    with pytest.raises(ValueError):
        hellinger_distance([1, 2], [1, 2, 3])
    with pytest.raises(ValueError):
        hellinger_distance([0, 0], [1, 2])


def test_hdddm_stationary_low_drift_rate():
    rng = np.random.default_rng(4)
    detector = Hdddm(batch_size=168, gamma=1.0)
    drifts = 0
    for _ in range(100):
        verdict = detector.step_batch(rng.normal(0.0, 1.0, size=168))
        drifts += verdict == DRIFT
    assert drifts <= 10  # at most 10% on i.i.d. batches


def test_hdddm_detects_abrupt_swap():
    hits = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        detector = Hdddm(batch_size=168, gamma=1.0)
        for _ in range(6):
            detector.step_batch(rng.normal(0.0, 1.0, size=168))
        # mean shift of five standard deviations
        verdict = detector.step_batch(rng.normal(5.0, 1.0, size=168))
        hits += verdict == DRIFT
    assert hits >= 95


def test_hdddm_infinite_gamma_never_drifts():
    rng = np.random.default_rng(5)
    detector = Hdddm(batch_size=100, gamma=math.inf)
    for scale in (1.0, 1.0, 10.0, 0.1, 50.0):
        assert detector.step_batch(rng.normal(0, scale, size=100)) == STABLE


def test_hdddm_too_few_batches_since_reset_stable():
    rng = np.random.default_rng(6)
    detector = Hdddm(batch_size=50, gamma=0.0)
    assert detector.step_batch(rng.normal(size=50)) == STABLE   # baseline
    assert detector.step_batch(rng.normal(size=50)) == STABLE   # no eps history yet


def test_hdddm_elementwise_feeding_matches_batches():
    rng = np.random.default_rng(7)
    data = rng.normal(size=500)
    a = Hdddm(batch_size=100, gamma=1.0)
    b = Hdddm(batch_size=100, gamma=1.0)
    elementwise = [a.step(x) for x in data]
    batched = [b.step_batch(data[i:i + 100]) for i in range(0, 500, 100)]
    assert [v for v in elementwise if v != STABLE] == [v for v in batched if v != STABLE]
    non_stable_positions = [i for i, v in enumerate(elementwise) if v != STABLE]
    assert all((i + 1) % 100 == 0 for i in non_stable_positions)


def test_hdddm_reset_contract():
    rng = np.random.default_rng(8)
    detector = Hdddm(batch_size=100, gamma=0.5)
    for _ in range(5):
        detector.step_batch(rng.normal(0, 1, size=100))
    verdict = detector.step_batch(rng.normal(30, 1, size=100))
    assert verdict == DRIFT
    assert detector._eps_history == []
    assert detector._prev_distance is None
    assert len(detector._baseline) == 100  # the drifting batch became baseline


# -- Mann-Kendall -------------------------------------------------------------


def test_mk_statistic_increasing_n4():
    s, var_s, z = mk_statistic([1.0, 2.0, 3.0, 4.0])
    assert s == 6
    assert var_s == pytest.approx(4 * 3 * 13 / 18)
    assert z == pytest.approx(5 / math.sqrt(var_s))
    assert z == pytest.approx(1.6984, abs=1e-4)


def test_mk_statistic_constant_and_reversal():
    s, var_s, z = mk_statistic([5.0] * 10)
    assert (s, z) == (0, 0.0)
    assert var_s == 0.0
    rng = np.random.default_rng(9)
    x = rng.normal(size=50)
    s_fwd, _, _ = mk_statistic(x)
    s_rev, _, _ = mk_statistic(x[::-1])
    assert s_fwd == -s_rev


def test_mk_statistic_requires_four():
    with pytest.raises(ValueError):
        mk_statistic([1.0, 2.0, 3.0])


def test_mk_matches_brute_force_with_ties():
    rng = np.random.default_rng(10)
    for _ in range(200):
        n = int(rng.integers(4, 120))
        # small integer alphabet forces plenty of ties
        x = rng.integers(0, 8, size=n).astype(float)
        s, var_s, z = mk_statistic(x)
        s_ref, var_ref, z_ref = mk_brute_force(x)
        assert s == s_ref
        assert var_s == var_ref
        assert z == z_ref


def test_mk_stream_detects_ramp_quickly():
    rng = np.random.default_rng(11)
    detector = MannKendallStream(block_size=168, alpha=0.05)
    t = 0
    verdicts = []
    while len(verdicts) < 2 * 168:
        verdicts.append(detector.step(0.5 * t + rng.normal(0, 1.0)))
        t += 1
    assert DRIFT in verdicts[:2 * 168]
    assert detector.buffer_length == 0  # reset after drift


def test_mk_stream_evaluates_only_on_block_multiples():
    rng = np.random.default_rng(12)
    detector = MannKendallStream(block_size=168)
    for i in range(1000):
        verdict = detector.step(rng.normal())
        if (i + 1) % 168 != 0:
            assert verdict == STABLE


def test_detector_determinism():
    rng = np.random.default_rng(13)
    data = rng.random(3000) < 0.7
    for build in (lambda: Stepd(), lambda: make_detector("adwin")):
        a, b = build(), build()
        va = [a.step(bool(v)) for v in data]
        vb = [b.step(bool(v)) for v in data]
        assert va == vb


def test_make_detector_factory():
    assert make_detector("stepd", window=10).window == 10
    assert make_detector("mk").block_size == 168
    assert make_detector("hdddm").n_bins == 12  # floor(sqrt(168))
    with pytest.raises(ValueError):
        make_detector("unknown")
