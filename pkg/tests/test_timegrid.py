from datetime import datetime

import numpy as np
import pytest

from driftcast.timegrid import (SlidingWindow, calendar_columns,
                                calendar_decompose, datetime_to_hour,
                                format_hour, hour_to_datetime,
                                is_quarter_boundary, is_year_boundary,
                                parse_hour, period_start_hour, shift_quarters,
                                shift_years, slice_window)
from driftcast.stream import HourlyObservation


def test_epoch_identity():
    hod, weekday, month, quarter, year = calendar_decompose(0)
    assert (hod, month, quarter, year) == (0, 1, 1, 2009)
    assert weekday == 3  # 2009-01-01 was a Thursday


def test_one_day_offset():
    fields = calendar_decompose(24)
    assert fields.hour_of_day == 0
    assert fields.weekday == 4  # Friday
    assert (fields.month, fields.quarter, fields.year) == (1, 1, 2009)


def test_year_rollover_non_leap():
    # 2009 is not a leap year: hour 8760 is 2010-01-01, a Friday
    fields = calendar_decompose(8760)
    assert (fields.hour_of_day, fields.weekday, fields.year) == (0, 4, 2010)


def test_roundtrip_and_parsing():
    for hour in (0, 17520, 12345, 100000):
        assert datetime_to_hour(hour_to_datetime(hour)) == hour
    assert parse_hour("2011-01-01T00") == 17520
    assert parse_hour("2011-01-01 00:00:00") == 17520
    assert parse_hour(format_hour(4567)) == 4567
    with pytest.raises(ValueError):
        parse_hour("not a time")
    with pytest.raises(ValueError):
        datetime_to_hour(datetime(2009, 1, 1, 0, 30))


def test_weekly_period_preserves_weekday_and_hour():
    rng = np.random.default_rng(0)
    for hour in rng.integers(0, 200000, size=50):
        a = calendar_decompose(int(hour))
        b = calendar_decompose(int(hour) + 168)
        assert a.weekday == b.weekday
        assert a.hour_of_day == b.hour_of_day


def test_calendar_columns_match_scalar():
    hours = np.arange(17000, 18000, 37)
    cols = calendar_columns(hours)
    for i, hour in enumerate(hours):
        fields = calendar_decompose(int(hour))
        assert cols["hour_of_day"][i] == fields.hour_of_day
        assert cols["weekday"][i] == fields.weekday
        assert cols["month"][i] == fields.month
        assert cols["quarter"][i] == fields.quarter
        assert cols["year"][i] == fields.year


def test_shift_years_calendar_aware():
    # 2012-07-10 minus 2 years lands exactly on 2010-07-10
    anchor = datetime_to_hour(datetime(2012, 7, 10))
    assert hour_to_datetime(shift_years(anchor, -2)) == datetime(2010, 7, 10)
    # leap day clamps
    leap = datetime_to_hour(datetime(2012, 2, 29))
    assert hour_to_datetime(shift_years(leap, 1)) == datetime(2013, 2, 28)


def test_shift_quarters():
    q1 = datetime_to_hour(datetime(2011, 1, 1))
    assert hour_to_datetime(shift_quarters(q1, 1)) == datetime(2011, 4, 1)
    assert hour_to_datetime(shift_quarters(q1, -2)) == datetime(2010, 7, 1)
    month_end = datetime_to_hour(datetime(2011, 5, 31))
    assert hour_to_datetime(shift_quarters(month_end, -1)) == datetime(2011, 2, 28)


def test_boundaries():
    assert is_year_boundary(parse_hour("2012-01-01T00"))
    assert not is_year_boundary(parse_hour("2012-01-01T01"))
    assert is_quarter_boundary(parse_hour("2012-04-01T00"))
    assert is_quarter_boundary(parse_hour("2012-01-01T00"))
    assert not is_quarter_boundary(parse_hour("2012-02-01T00"))


def _obs_range(start, end, zone=1):
    return [HourlyObservation(t, zone, t % 7) for t in range(start, end)]


def test_slice_window_mid_stream_anchor():
    # two-year window anchored at 2012-07-10: [2010-07-10, 2012-07-10)
    anchor = datetime_to_hour(datetime(2012, 7, 10))
    lo = datetime_to_hour(datetime(2010, 7, 10))
    stream = _obs_range(lo - 100, anchor + 100)
    window = SlidingWindow(2, "year", anchor)
    sliced = slice_window(stream, window)
    assert sliced[0].time == lo
    assert sliced[-1].time == anchor - 1
    assert len(sliced) == anchor - lo


def test_slice_window_three_years_keeps_first_two():
    # 3 years of data, 2-year window anchored at the year-3 start
    y3 = parse_hour("2011-01-01T00")
    stream = _obs_range(0, parse_hour("2012-01-01T00"))
    sliced = slice_window(stream, SlidingWindow(2, "year", y3))
    assert sliced[0].time == 0
    assert sliced[-1].time == y3 - 1


def test_slice_window_before_start_is_empty():
    stream = _obs_range(20000, 21000)
    assert slice_window(stream, SlidingWindow(1, "year", 8760)) == []


def test_slice_window_idempotent():
    window = SlidingWindow(1, "quarter", parse_hour("2011-04-01T00"))
    stream = _obs_range(0, 30000)
    once = slice_window(stream, window)
    twice = slice_window(once, window)
    assert once == twice


def test_quarter_windows_tile_without_gap_or_overlap():
    boundaries = [period_start_hour(2011, q) for q in (1, 2, 3, 4)]
    boundaries.append(period_start_hour(2012, 1))
    windows = [SlidingWindow(1, "quarter", b) for b in boundaries[1:]]
    for earlier, later in zip(windows, windows[1:]):
        assert earlier.end == later.start()
    covered = sum(w.end - w.start() for w in windows)
    assert covered == boundaries[-1] - boundaries[0]
