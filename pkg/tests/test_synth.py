import numpy as np
import pytest

from driftcast.synth import (SplitMix64, SyntheticSpec, derive_seed,
                             generate_synthetic)
from oracles import ols_slope


def test_splitmix_reference_values():
    # splitmix64(seed=1234567) reference outputs from the published algorithm
    rng = SplitMix64(1234567)
    assert rng.next_u64() == 6457827717110365317
    assert rng.next_u64() == 3203168211198807973


def test_uniform_range_and_normal_shape():
    rng = SplitMix64(99)
    draws = [rng.uniform() for _ in range(5000)]
    assert all(0.0 <= u < 1.0 for u in draws)
    assert abs(np.mean(draws) - 0.5) < 0.02
    normals = [rng.normal() for _ in range(5000)]
    assert abs(np.mean(normals)) < 0.06
    assert abs(np.std(normals) - 1.0) < 0.06


def test_poisson_small_and_large_means():
    rng = SplitMix64(5)
    small = [rng.poisson(3.0) for _ in range(4000)]
    assert abs(np.mean(small) - 3.0) < 0.1
    assert abs(np.var(small) - 3.0) < 0.3
    large = [rng.poisson(200.0) for _ in range(4000)]
    assert abs(np.mean(large) - 200.0) < 1.0
    assert abs(np.var(large) - 200.0) < 15.0
    assert rng.poisson(0.0) == 0


def test_derive_seed_distinct_names():
    assert derive_seed(42, "learner") != derive_seed(42, "generator")
    assert derive_seed(42, "learner") == derive_seed(42, "learner")


def test_same_spec_bitwise_identical():
    spec = SyntheticSpec(seed=11, n_zones=3, years=0.5, noise="poisson")
    a = generate_synthetic(spec)
    b = generate_synthetic(spec)
    assert np.array_equal(a.demand, b.demand)
    c = generate_synthetic(SyntheticSpec(seed=12, n_zones=3, years=0.5))
    assert not np.array_equal(a.demand, c.demand)


def test_noise_free_series_is_weekly_periodic():
    spec = SyntheticSpec(seed=0, n_zones=2, years=0.5, noise="none",
                         daily_amplitude=0.4)
    stream = generate_synthetic(spec)
    series = stream.series(1)
    assert np.array_equal(series[:-168], series[168:])


def test_step_drift_halves_post_window_mean():
    spec = SyntheticSpec(seed=0, n_zones=1, years=1.0, base_level=1000.0,
                         noise="none", drift_kind="step", drift_start=4368,
                         drift_magnitude=-0.5)
    stream = generate_synthetic(spec)
    series = stream.series(1).astype(float)
    pre = series[4368 - 168:4368]
    post = series[4368:4368 + 168]
    assert np.isclose(post.mean() / pre.mean(), 0.5, atol=1e-3)


def test_incremental_ramp_slope_matches_ols_oracle():
    # magnitude -0.4 over the final 1.5 of 3 years; deseasonalize and fit OLS
    start = int(1.5 * 8760)
    spec = SyntheticSpec(seed=0, n_zones=1, years=3.0, base_level=1000.0,
                         noise="none", drift_kind="incremental_ramp",
                         drift_start=start, drift_magnitude=-0.4)
    stream = generate_synthetic(spec)
    n_hours = stream.n_hours
    flat = SyntheticSpec(seed=0, n_zones=1, years=3.0, base_level=1000.0,
                         noise="none")
    season = generate_synthetic(flat).series(1).astype(float)
    deseasonalized = stream.series(1) / season
    slope = ols_slope(deseasonalized[start:])
    expected = -0.4 / (n_hours - 1 - start)
    assert slope < 0
    assert abs(slope - expected) / abs(expected) < 0.05


def test_dense_grid_row_count():
    spec = SyntheticSpec(seed=3, n_zones=4, years=3.0, noise="none")
    stream = generate_synthetic(spec)
    # 2009-2011 contains no leap day: exactly 3 * 8760 hours
    assert stream.n_hours == 3 * 8760
    assert len(stream) == 3 * 8760 * 4


def test_leap_year_extends_calendar_years():
    spec = SyntheticSpec(seed=3, n_zones=1, years=4.0, noise="none")
    assert generate_synthetic(spec).n_hours == 4 * 8760 + 24  # 2012 is a leap year


def test_invalid_spec_lists_fields():
    bad = SyntheticSpec(n_zones=0, years=-1, weekly_profile=(1, 2))
    with pytest.raises(ValueError) as err:
        bad.validate()
    message = str(err.value)
    assert "n_zones" in message
    assert "years" in message
    assert "weekly_profile" in message


def test_gaussian_noise_mode():
    spec = SyntheticSpec(seed=8, n_zones=1, years=0.2, base_level=500.0,
                         noise="gaussian", noise_sigma=10.0)
    stream = generate_synthetic(spec)
    flat = generate_synthetic(SyntheticSpec(seed=8, n_zones=1, years=0.2,
                                            base_level=500.0, noise="none"))
    residual = stream.series(1).astype(float) - flat.series(1)
    assert abs(residual.std() - 10.0) < 1.0
