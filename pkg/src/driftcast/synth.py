"""Seeded synthetic demand streams with controlled drift injection.

The generator stands in for the non-reproducible production data set:
it produces a dense hourly multi-zone stream with daily and weekly
seasonality, optional Poisson or Gaussian noise, and an optional level
drift that is either an instant step or a slow linear ramp. The same
spec always yields the same stream, byte for byte, because sampling runs
on a self-contained SplitMix64 generator in a fixed iteration order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime
import numpy as np

from .stream import DemandStream
from .timegrid import DEFAULT_EPOCH, shift_years

_MASK64 = (1 << 64) - 1
_NORMAL_APPROX_MEAN = 50.0

DRIFT_KINDS = ("none", "incremental_ramp", "step")
NOISE_KINDS = ("none", "poisson", "gaussian")


def derive_seed(seed: int, name: str) -> int:
    """Stable named sub-seed so every consumer of a global seed gets an
    independent, reproducible stream."""
    h = 0xCBF29CE484222325  # FNV-1a offset basis
    for byte in name.encode("utf-8"):
        h = ((h ^ byte) * 0x100000001B3) & _MASK64
    return (seed ^ h) & _MASK64


class SplitMix64:
    """Minimal portable 64-bit generator (Steele et al. splitmix64).

    Used wherever bit-reproducible fixtures matter; the state update is
    pure integer arithmetic so two runs of the same seed can never diverge.
    """

    def __init__(self, seed: int):
        self._state = seed & _MASK64
        self._spare_normal: float | None = None

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def uniform(self) -> float:
        """Uniform in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def normal(self) -> float:
        """Standard normal via Box-Muller (pairs cached)."""
        if self._spare_normal is not None:
            z, self._spare_normal = self._spare_normal, None
            return z
        u1 = self.uniform()
        while u1 <= 0.0:
            u1 = self.uniform()
        u2 = self.uniform()
        radius = math.sqrt(-2.0 * math.log(u1))
        theta = 2.0 * math.pi * u2
        self._spare_normal = radius * math.sin(theta)
        return radius * math.cos(theta)

    def poisson(self, mean: float) -> int:
        """Poisson sample: CDF inversion for small means, rounded normal
        approximation above 50 (keeps the hot path cheap and portable)."""
        if mean <= 0.0:
            return 0
        if mean > _NORMAL_APPROX_MEAN:
            return max(0, int(round(mean + math.sqrt(mean) * self.normal())))
        u = self.uniform()
        p = math.exp(-mean)
        cdf = p
        k = 0
        while u > cdf and k < 10_000:
            k += 1
            p *= mean / k
            cdf += p
        return k


@dataclass(frozen=True)
class SyntheticSpec:
    seed: int = 0
    n_zones: int = 4
    years: float = 3.0
    base_level: tuple[float, ...] | float = 100.0
    daily_amplitude: float = 0.5
    weekly_profile: tuple[float, ...] = (1.0, 1.0, 1.0, 1.0, 1.1, 1.2, 0.9)
    drift_kind: str = "none"
    drift_start: int = 0  # hour index relative to the stream start
    drift_magnitude: float = 0.0  # relative factor, e.g. -0.4 for a 40% drop
    noise: str = "poisson"
    noise_sigma: float = 0.0  # gaussian noise only

    def validate(self) -> None:
        problems = []
        if self.n_zones <= 0:
            problems.append("n_zones must be positive")
        if self.years <= 0:
            problems.append("years must be positive")
        levels = self.base_levels()
        if len(levels) != self.n_zones:
            problems.append("base_level must be a scalar or one value per zone")
        if any(level < 0 for level in levels):
            problems.append("base_level entries must be non-negative")
        if not 0.0 <= self.daily_amplitude < 1.0:
            problems.append("daily_amplitude must lie in [0, 1)")
        if len(self.weekly_profile) != 7:
            problems.append("weekly_profile needs exactly 7 entries")
        elif any(w < 0 for w in self.weekly_profile):
            problems.append("weekly_profile entries must be non-negative")
        if self.drift_kind not in DRIFT_KINDS:
            problems.append(f"drift_kind must be one of {DRIFT_KINDS}")
        if self.drift_kind != "none" and self.drift_start < 0:
            problems.append("drift_start must be non-negative")
        if self.noise not in NOISE_KINDS:
            problems.append(f"noise must be one of {NOISE_KINDS}")
        if self.noise == "gaussian" and self.noise_sigma < 0:
            problems.append("noise_sigma must be non-negative")
        if problems:
            raise ValueError("invalid synthetic spec: " + "; ".join(problems))

    def base_levels(self) -> tuple[float, ...]:
        if isinstance(self.base_level, (int, float)):
            return (float(self.base_level),) * self.n_zones
        return tuple(float(b) for b in self.base_level)


def _stream_hours(years: float, epoch: datetime) -> int:
    """Calendar-aware stream length: whole years follow the calendar,
    fractional remainders count 8760-hour units."""
    whole = int(years)
    end = shift_years(0, whole, epoch) if whole else 0
    return end + int(round((years - whole) * 8760.0))


def _trend(hour_offsets: np.ndarray, spec: SyntheticSpec, n_hours: int) -> np.ndarray:
    trend = np.ones(len(hour_offsets))
    if spec.drift_kind == "none" or spec.drift_magnitude == 0.0:
        return trend
    start = spec.drift_start
    if spec.drift_kind == "step":
        trend[hour_offsets >= start] = 1.0 + spec.drift_magnitude
        return trend
    # incremental_ramp: 1.0 at drift_start, (1 + magnitude) at the final hour
    last = n_hours - 1
    if last <= start:
        return trend
    ramp = (hour_offsets - start) / (last - start)
    mask = hour_offsets >= start
    trend[mask] = 1.0 + spec.drift_magnitude * ramp[mask]
    return trend


def seasonal_factor(spec: SyntheticSpec, hour_offsets: np.ndarray) -> np.ndarray:
    """Deterministic 168-periodic seasonality component of the generator."""
    hod = hour_offsets % 24
    weekday = (hour_offsets // 24) % 7
    daily = 1.0 + spec.daily_amplitude * np.sin(2.0 * np.pi * hod / 24.0)
    weekly = np.asarray(spec.weekly_profile, dtype=float)[weekday]
    return daily * weekly


def generate_synthetic(spec: SyntheticSpec, epoch: datetime = DEFAULT_EPOCH) -> DemandStream:
    """Generate the dense stream described by ``spec``.

    demand(t, z) = round(max(0, trend(t) * base_level(z) * season(t) + noise))
    with Poisson noise folded in as a direct draw at the noise-free mean.
    """
    spec.validate()
    n_hours = _stream_hours(spec.years, epoch)
    if n_hours <= 0:
        raise ValueError("spec produces an empty stream")
    offsets = np.arange(n_hours)
    season = seasonal_factor(spec, offsets)
    trend = _trend(offsets, spec, n_hours)
    levels = spec.base_levels()
    means = trend[:, None] * season[:, None] * np.asarray(levels)[None, :]

    demand = np.empty((n_hours, spec.n_zones), dtype=np.int64)
    rng = SplitMix64(spec.seed)
    if spec.noise == "none":
        np.round(np.maximum(means, 0.0), out=means)
        demand[:] = means.astype(np.int64)
    elif spec.noise == "poisson":
        for i in range(n_hours):
            row = means[i]
            for j in range(spec.n_zones):
                demand[i, j] = rng.poisson(row[j])
    else:  # gaussian
        sigma = spec.noise_sigma
        for i in range(n_hours):
            row = means[i]
            for j in range(spec.n_zones):
                value = row[j] + sigma * rng.normal()
                demand[i, j] = int(round(max(0.0, value)))
    zones = tuple(range(1, spec.n_zones + 1))
    return DemandStream(0, zones, demand, epoch)
