"""Model inputs built from the demand stream.

A feature vector for (hour t, zone z) concatenates, in fixed order:

    [zone one-hot (K)] [weekday one-hot (7)] [hourly lags t-1..t-24 (24)]
    [weekly lags t-168, t-336, t-504, t-672 (4)]
    [hour_sin, hour_cos, month_sin, month_cos (4)]

Everything is a pure function of the stream's past: lag columns only read
demand strictly before t, so a feature table for a whole stream can be
precomputed once without leaking future observations into any row.

The module also hosts the seasonal differencing transform feeding the
raw-input drift detectors: lag-24 then lag-168 differencing removes daily
and weekly periodicity while monotone trends survive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .stream import DemandStream
from .timegrid import calendar_columns, calendar_decompose

DAILY_LAGS = 24
WEEKLY_LAGS = 4
HISTORY_HOURS = 7 * 24 * WEEKLY_LAGS  # 672: deepest lag any feature reads
DIFF_HISTORY = 192  # 24 + 168: history consumed by seasonal differencing


class ColdStartError(ValueError):
    """Raised when a feature vector would need history before stream start."""


@dataclass(frozen=True)
class FeatureLayout:
    """Column offsets of the fixed feature block order for K zones."""

    n_zones: int

    @property
    def zone_onehot(self) -> slice:
        return slice(0, self.n_zones)

    @property
    def weekday_onehot(self) -> slice:
        k = self.n_zones
        return slice(k, k + 7)

    @property
    def daily_lags(self) -> slice:
        k = self.n_zones + 7
        return slice(k, k + DAILY_LAGS)

    @property
    def weekly_lags(self) -> slice:
        k = self.n_zones + 7 + DAILY_LAGS
        return slice(k, k + WEEKLY_LAGS)

    @property
    def cyclical(self) -> slice:
        k = self.n_zones + 7 + DAILY_LAGS + WEEKLY_LAGS
        return slice(k, k + 4)

    @property
    def dim(self) -> int:
        return self.n_zones + 7 + DAILY_LAGS + WEEKLY_LAGS + 4

    @property
    def lag_1h_column(self) -> int:
        """Column holding demand at t-1 (the naive forecast)."""
        return self.daily_lags.start

    @property
    def lag_168h_column(self) -> int:
        """Column holding demand at t-168 (the seasonal-naive forecast)."""
        return self.weekly_lags.start


def build_features(stream: DemandStream, t: int, zone: int) -> np.ndarray:
    """Feature vector for one (hour, zone); raises ColdStartError when the
    stream lacks the 672 hours of history behind t."""
    if t - stream.start < HISTORY_HOURS:
        raise ColdStartError(
            f"hour {t} needs history back to {t - HISTORY_HOURS}, stream starts "
            f"at {stream.start}")
    if t >= stream.end:
        raise ColdStartError(f"hour {t} beyond stream end {stream.end}")
    layout = FeatureLayout(stream.n_zones)
    vec = np.zeros(layout.dim)
    hod, weekday, month, _, _ = calendar_decompose(t, stream.epoch)
    zcol = stream.zone_index(zone)
    series = stream.demand[:, zcol]
    i = t - stream.start
    vec[zcol] = 1.0
    vec[layout.weekday_onehot.start + weekday] = 1.0
    vec[layout.daily_lags] = series[i - DAILY_LAGS:i][::-1]
    weekly = [series[i - 168 * (w + 1)] for w in range(WEEKLY_LAGS)]
    vec[layout.weekly_lags] = weekly
    hour_angle = 2.0 * math.pi * hod / 24.0
    month_angle = 2.0 * math.pi * (month - 1) / 12.0
    vec[layout.cyclical] = (math.sin(hour_angle), math.cos(hour_angle),
                            math.sin(month_angle), math.cos(month_angle))
    return vec


@dataclass
class FeatureTable:
    """Precomputed feature rows for every scorable (hour, zone) cell.

    Rows are time-major with zones ascending inside each hour, so the rows
    of hour t live at ``(t - first_hour) * n_zones + zone_index``.
    """

    first_hour: int
    n_zones: int
    layout: FeatureLayout
    X: np.ndarray  # (n_hours * n_zones, dim)
    y: np.ndarray  # demand at the row's hour

    @property
    def end_hour(self) -> int:
        return self.first_hour + len(self.X) // self.n_zones

    def row_range(self, start_hour: int, end_hour: int) -> tuple[int, int]:
        lo = max(start_hour, self.first_hour)
        hi = min(end_hour, self.end_hour)
        if hi <= lo:
            return 0, 0
        return (lo - self.first_hour) * self.n_zones, (hi - self.first_hour) * self.n_zones

    def window(self, start_hour: int, end_hour: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.row_range(start_hour, end_hour)
        return self.X[lo:hi], self.y[lo:hi]

    def rows_at(self, t: int) -> np.ndarray:
        lo, hi = self.row_range(t, t + 1)
        return self.X[lo:hi]


def build_feature_table(stream: DemandStream, start: int | None = None,
                        end: int | None = None) -> FeatureTable:
    """Vectorized feature construction for all hours in [start, end).

    ``start`` defaults to the first hour with full lag history; asking for
    anything earlier raises ColdStartError.
    """
    first_valid = stream.start + HISTORY_HOURS
    start = first_valid if start is None else start
    end = stream.end if end is None else end
    if start < first_valid:
        raise ColdStartError(f"feature table cannot start before hour {first_valid}")
    if end > stream.end:
        raise ColdStartError(f"feature table cannot extend past stream end {stream.end}")
    if end <= start:
        raise ColdStartError("empty feature table requested")

    layout = FeatureLayout(stream.n_zones)
    hours = np.arange(start, end, dtype=np.int64)
    n_hours, k = len(hours), stream.n_zones
    cal = calendar_columns(hours, stream.epoch)

    X = np.zeros((n_hours * k, layout.dim))
    # zone one-hot: row order is time-major, zone ascending
    zone_cols = np.tile(np.arange(k), n_hours)
    X[np.arange(n_hours * k), zone_cols] = 1.0

    weekday = np.repeat(cal["weekday"], k)
    X[np.arange(n_hours * k), layout.weekday_onehot.start + weekday] = 1.0

    demand = stream.demand.astype(float)
    base = start - stream.start
    for lag in range(1, DAILY_LAGS + 1):
        col = layout.daily_lags.start + lag - 1
        X[:, col] = demand[base - lag:base - lag + n_hours].ravel()
    for w in range(WEEKLY_LAGS):
        lag = 168 * (w + 1)
        col = layout.weekly_lags.start + w
        X[:, col] = demand[base - lag:base - lag + n_hours].ravel()

    hour_angle = 2.0 * np.pi * cal["hour_of_day"] / 24.0
    month_angle = 2.0 * np.pi * (cal["month"] - 1) / 12.0
    c = layout.cyclical.start
    X[:, c + 0] = np.repeat(np.sin(hour_angle), k)
    X[:, c + 1] = np.repeat(np.cos(hour_angle), k)
    X[:, c + 2] = np.repeat(np.sin(month_angle), k)
    X[:, c + 3] = np.repeat(np.cos(month_angle), k)

    y = demand[base:base + n_hours].ravel()
    return FeatureTable(start, k, layout, X, y)


class Standardizer:
    """Per-column zero-mean unit-variance scaling with frozen statistics.

    Statistics come from the training window alone and are reused for
    incremental updates and prediction until the next full retrain, so no
    test-period information leaks into the scaling.
    """

    def __init__(self):
        self.mean_: np.ndarray | None = None
        self.scale_: np.ndarray | None = None

    def fit(self, X: np.ndarray) -> "Standardizer":
        self.mean_ = X.mean(axis=0)
        scale = X.std(axis=0)
        scale[scale == 0.0] = 1.0  # constant columns stay centered only
        self.scale_ = scale
        return self

    def transform(self, X: np.ndarray) -> np.ndarray:
        if self.mean_ is None:
            raise RuntimeError("standardizer used before fit")
        return (X - self.mean_) / self.scale_


def seasonal_difference(series: Sequence[float], lags: Sequence[int] = (24, 168)) -> np.ndarray:
    """Apply successive lag differencing; default removes the daily and
    weekly periodicity: y'(t) = (y(t) - y(t-24)) - (y(t-168) - y(t-192)).

    Output length is len(series) - sum(lags); integer input stays integer.
    """
    x = np.asarray(series)
    needed = sum(lags)
    if len(x) <= needed:
        raise ValueError(f"series of length {len(x)} too short for lags {tuple(lags)}")
    for lag in lags:
        x = x[lag:] - x[:-lag]
    return x


def differenced_matrix(stream: DemandStream) -> tuple[int, np.ndarray]:
    """Seasonally differenced demand for every zone, hour-aligned.

    Returns ``(first_hour, diff)`` where ``diff[i, j]`` is the differenced
    value of zone j at hour ``first_hour + i`` (first_hour = start + 192).
    """
    diff = np.stack([seasonal_difference(stream.demand[:, j])
                     for j in range(stream.n_zones)], axis=1)
    return stream.start + DIFF_HISTORY, diff
