"""Hourly UTC time grid shared by every stage of the pipeline.

All series live on an integer grid of hours since a fixed epoch
(2009-01-01 00:00 UTC by default). Keeping time as a plain integer makes
the seasonal lags (24 and 168 hours) exact offsets and sidesteps
daylight-saving ambiguity entirely: an index step is always one UTC hour.
Calendar quantities (weekday, month, quarter, year) are derived on demand
from the proleptic Gregorian calendar.
"""

from __future__ import annotations

import calendar as _calendar
from dataclasses import dataclass
from datetime import datetime, timedelta
from typing import Iterable, NamedTuple

import numpy as np

DEFAULT_EPOCH = datetime(2009, 1, 1)

HOURS_PER_DAY = 24
HOURS_PER_WEEK = 168

_HOUR = timedelta(hours=1)


def hour_to_datetime(hour: int, epoch: datetime = DEFAULT_EPOCH) -> datetime:
    """Map an hour index to the (naive, UTC) datetime it labels."""
    return epoch + int(hour) * _HOUR


def datetime_to_hour(dt: datetime, epoch: datetime = DEFAULT_EPOCH) -> int:
    """Inverse of :func:`hour_to_datetime`; ``dt`` must sit on the hour grid."""
    delta = dt - epoch
    seconds = delta.days * 86400 + delta.seconds
    if delta.microseconds or seconds % 3600:
        raise ValueError(f"{dt!r} is not aligned to the hourly grid")
    return seconds // 3600


def parse_hour(text: str, epoch: datetime = DEFAULT_EPOCH) -> int:
    """Parse an ISO-8601 hour ("2011-01-01T00", space separator and
    minute/second parts also accepted) to an hour index."""
    cleaned = text.strip().replace(" ", "T")
    for fmt in ("%Y-%m-%dT%H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%dT%H", "%Y-%m-%d"):
        try:
            return datetime_to_hour(datetime.strptime(cleaned, fmt), epoch)
        except ValueError:
            continue
    raise ValueError(f"unparseable hour timestamp: {text!r}")


def format_hour(hour: int, epoch: datetime = DEFAULT_EPOCH) -> str:
    return hour_to_datetime(hour, epoch).strftime("%Y-%m-%dT%H:%M:%S")


class CalendarFields(NamedTuple):
    hour_of_day: int
    weekday: int  # Monday == 0 .. Sunday == 6
    month: int
    quarter: int
    year: int


def calendar_decompose(hour: int, epoch: datetime = DEFAULT_EPOCH) -> CalendarFields:
    """Calendar fields of one grid hour (proleptic Gregorian, UTC)."""
    dt = hour_to_datetime(hour, epoch)
    return CalendarFields(dt.hour, dt.weekday(), dt.month, (dt.month - 1) // 3 + 1, dt.year)


def calendar_columns(hours: np.ndarray, epoch: datetime = DEFAULT_EPOCH) -> dict[str, np.ndarray]:
    """Vectorized calendar fields for an array of hour indices."""
    base = np.datetime64(epoch, "h")
    stamps = base + np.asarray(hours, dtype=np.int64).astype("timedelta64[h]")
    days = stamps.astype("datetime64[D]")
    months = stamps.astype("datetime64[M]")
    month = months.astype(np.int64) % 12 + 1
    return {
        "hour_of_day": (stamps - days).astype(np.int64),
        # 1970-01-01 was a Thursday, i.e. weekday 3 with Monday == 0.
        "weekday": (days.astype(np.int64) + 3) % 7,
        "month": month,
        "quarter": (month - 1) // 3 + 1,
        "year": stamps.astype("datetime64[Y]").astype(np.int64) + 1970,
    }


def _shift_months(dt: datetime, months: int) -> datetime:
    total = dt.year * 12 + (dt.month - 1) + months
    year, month = divmod(total, 12)
    month += 1
    day = min(dt.day, _calendar.monthrange(year, month)[1])
    return dt.replace(year=year, month=month, day=day)


def shift_years(hour: int, years: int, epoch: datetime = DEFAULT_EPOCH) -> int:
    """Shift by whole calendar years; Feb 29 clamps to Feb 28."""
    return datetime_to_hour(_shift_months(hour_to_datetime(hour, epoch), 12 * years), epoch)


def shift_quarters(hour: int, quarters: int, epoch: datetime = DEFAULT_EPOCH) -> int:
    """Shift by whole calendar quarters, clamping the day-of-month."""
    return datetime_to_hour(_shift_months(hour_to_datetime(hour, epoch), 3 * quarters), epoch)


def is_year_boundary(hour: int, epoch: datetime = DEFAULT_EPOCH) -> bool:
    dt = hour_to_datetime(hour, epoch)
    return dt.month == 1 and dt.day == 1 and dt.hour == 0


def is_quarter_boundary(hour: int, epoch: datetime = DEFAULT_EPOCH) -> bool:
    dt = hour_to_datetime(hour, epoch)
    return dt.month in (1, 4, 7, 10) and dt.day == 1 and dt.hour == 0


def period_start_hour(year: int, quarter: int = 1, epoch: datetime = DEFAULT_EPOCH) -> int:
    return datetime_to_hour(datetime(year, 3 * (quarter - 1) + 1, 1), epoch)


@dataclass(frozen=True)
class SlidingWindow:
    """Half-open calendar window [end - duration, end) on the hour grid.

    ``duration`` counts whole calendar units ("year" or "quarter") back
    from the exclusive ``end`` anchor, so a 2-year window anchored at
    2012-07-10 starts exactly at 2010-07-10.
    """

    duration: int
    unit: str  # "year" | "quarter"
    end: int

    def __post_init__(self) -> None:
        if self.duration <= 0:
            raise ValueError("window duration must be positive")
        if self.unit not in ("year", "quarter"):
            raise ValueError(f"unknown window unit: {self.unit!r}")

    def start(self, epoch: datetime = DEFAULT_EPOCH) -> int:
        if self.unit == "year":
            return shift_years(self.end, -self.duration, epoch)
        return shift_quarters(self.end, -self.duration, epoch)

    def bounds(self, epoch: datetime = DEFAULT_EPOCH) -> tuple[int, int]:
        return self.start(epoch), self.end

    def contains(self, hour: int, epoch: datetime = DEFAULT_EPOCH) -> bool:
        return self.start(epoch) <= hour < self.end


def slice_window(observations: Iterable, window: SlidingWindow, epoch: datetime = DEFAULT_EPOCH):
    """Select the observations whose ``time`` lies inside ``window``.

    Works on any time-sorted sequence of objects with a ``time`` attribute
    (or on a dense stream via its own ``slice`` method). An empty result is
    legal and signals insufficient history.
    """
    slicer = getattr(observations, "slice", None)
    if slicer is not None:
        return slicer(window)
    lo, hi = window.bounds(epoch)
    return [obs for obs in observations if lo <= obs.time < hi]
