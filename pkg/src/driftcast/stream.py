"""Dense hourly demand streams and the record types built on top of them.

The canonical interchange format is a CSV with header
``time_hour,zone,demand`` where ``time_hour`` is an ISO-8601 UTC hour.
Streams are dense by construction: every (hour, zone) cell exists, and
hours without any demand carry an explicit zero.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .timegrid import DEFAULT_EPOCH, SlidingWindow, format_hour, parse_hour

STREAM_HEADER = ("time_hour", "zone", "demand")


class StreamError(ValueError):
    pass


@dataclass(frozen=True)
class HourlyObservation:
    """One point of the aggregated stream: demand for a zone in one hour."""

    time: int
    zone: int
    demand: int


@dataclass(frozen=True)
class PredictionRecord:
    """Actual/predicted pair for one (hour, zone), plus the binary
    correctness flag consumed by the error-based drift detectors."""

    time: int
    zone: int
    actual: float
    predicted: float
    correct: bool


class DemandStream:
    """Dense (n_hours, n_zones) demand grid starting at ``start``."""

    def __init__(self, start: int, zones: Sequence[int], demand: np.ndarray,
                 epoch: datetime = DEFAULT_EPOCH):
        demand = np.asarray(demand, dtype=np.int64)
        if demand.ndim != 2 or demand.shape[1] != len(zones):
            raise StreamError(f"demand matrix shape {demand.shape} does not match "
                              f"{len(zones)} zones")
        if (demand < 0).any():
            raise StreamError("demand must be non-negative")
        if list(zones) != sorted(set(zones)):
            raise StreamError("zones must be unique and ascending")
        self.start = int(start)
        self.zones = tuple(int(z) for z in zones)
        self.demand = demand
        self.epoch = epoch
        self._zone_index = {z: i for i, z in enumerate(self.zones)}

    # -- basic geometry -------------------------------------------------

    @property
    def n_hours(self) -> int:
        return self.demand.shape[0]

    @property
    def n_zones(self) -> int:
        return self.demand.shape[1]

    @property
    def end(self) -> int:
        """Exclusive end hour."""
        return self.start + self.n_hours

    def hours(self) -> np.ndarray:
        return np.arange(self.start, self.end, dtype=np.int64)

    def zone_index(self, zone: int) -> int:
        try:
            return self._zone_index[zone]
        except KeyError:
            raise StreamError(f"unknown zone {zone}") from None

    # -- access ----------------------------------------------------------

    def value(self, time: int, zone: int) -> int:
        if not self.start <= time < self.end:
            raise StreamError(f"hour {time} outside stream [{self.start}, {self.end})")
        return int(self.demand[time - self.start, self.zone_index(zone)])

    def series(self, zone: int) -> np.ndarray:
        return self.demand[:, self.zone_index(zone)]

    def slice_hours(self, start: int, end: int) -> "DemandStream":
        lo = max(start, self.start)
        hi = min(end, self.end)
        if hi <= lo:
            return DemandStream(max(start, self.start), self.zones,
                                np.zeros((0, self.n_zones), dtype=np.int64), self.epoch)
        return DemandStream(lo, self.zones,
                            self.demand[lo - self.start:hi - self.start], self.epoch)

    def slice(self, window: SlidingWindow) -> "DemandStream":
        lo, hi = window.bounds(self.epoch)
        return self.slice_hours(lo, hi)

    def observations(self) -> Iterator[HourlyObservation]:
        """Iterate time-major, zones ascending within each hour."""
        for i in range(self.n_hours):
            t = self.start + i
            for j, z in enumerate(self.zones):
                yield HourlyObservation(t, z, int(self.demand[i, j]))

    def __len__(self) -> int:
        return self.n_hours * self.n_zones

    def __repr__(self) -> str:
        return (f"DemandStream(start={self.start}, hours={self.n_hours}, "
                f"zones={len(self.zones)})")


def stream_from_observations(observations: Sequence[HourlyObservation],
                             epoch: datetime = DEFAULT_EPOCH) -> DemandStream:
    """Assemble a dense stream, rejecting duplicate or missing cells."""
    if not observations:
        raise StreamError("cannot build a stream from zero observations")
    zones = sorted({obs.zone for obs in observations})
    times = [obs.time for obs in observations]
    start, last = min(times), max(times)
    n_hours = last - start + 1
    grid = np.full((n_hours, len(zones)), -1, dtype=np.int64)
    zidx = {z: i for i, z in enumerate(zones)}
    for obs in observations:
        row, col = obs.time - start, zidx[obs.zone]
        if grid[row, col] != -1:
            raise StreamError(f"duplicate cell (hour={obs.time}, zone={obs.zone})")
        grid[row, col] = obs.demand
    if (grid < 0).any():
        row, col = np.argwhere(grid < 0)[0]
        raise StreamError(f"missing cell (hour={start + row}, zone={zones[col]}); "
                          "streams must be dense")
    return DemandStream(start, zones, grid, epoch)


def write_stream_csv(stream: DemandStream, path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(STREAM_HEADER)
        for i in range(stream.n_hours):
            stamp = format_hour(stream.start + i, stream.epoch)
            row = stream.demand[i]
            for j, zone in enumerate(stream.zones):
                writer.writerow((stamp, zone, int(row[j])))


def read_stream_csv(path, epoch: datetime = DEFAULT_EPOCH) -> DemandStream:
    path = Path(path)
    observations = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != list(STREAM_HEADER):
            raise StreamError(f"{path}: expected header {','.join(STREAM_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                observations.append(HourlyObservation(
                    parse_hour(row[0], epoch), int(row[1]), int(row[2])))
            except (ValueError, IndexError) as exc:
                raise StreamError(f"{path}:{lineno}: bad row {row!r} ({exc})") from None
    return stream_from_observations(observations, epoch)
