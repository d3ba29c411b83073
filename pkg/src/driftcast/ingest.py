"""Turn raw trip-record CSVs into the canonical hourly demand stream.

Raw files are marshalled through a configurable column mapping because
trip-record schemas changed across years. Rows failing sanity checks
(negative metered distance, unknown zone, out-of-range timestamp,
unparseable fields) are counted per reason and skipped; the pipeline
never aborts on a malformed row, only on producing zero accepted rows.
"""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .stream import DemandStream
from .timegrid import DEFAULT_EPOCH, datetime_to_hour

DEFAULT_ZONES = frozenset(range(1, 264))  # 263 taxi zones


class IngestError(ValueError):
    pass


@dataclass(frozen=True)
class ColumnMap:
    """Logical-to-physical column names of a trip-record CSV."""

    pickup_datetime: str = "pickup_datetime"
    zone_id: str = "zone_id"
    trip_distance: str = "trip_distance"


@dataclass
class IngestReport:
    accepted: int = 0
    rejected: Counter = field(default_factory=Counter)

    @property
    def rejected_total(self) -> int:
        return sum(self.rejected.values())


_DT_FORMATS = ("%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M",
               "%Y-%m-%dT%H:%M")


def _parse_pickup(text: str) -> datetime:
    for fmt in _DT_FORMATS:
        try:
            return datetime.strptime(text.strip(), fmt)
        except ValueError:
            continue
    raise ValueError(text)


def _count_file(path: Path, columns: ColumnMap, known_zones: frozenset,
                time_range: tuple[datetime, datetime] | None,
                epoch: datetime, counts: Counter, report: IngestReport) -> None:
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise IngestError(f"{path}: empty file (no header)")
        missing = [c for c in (columns.pickup_datetime, columns.zone_id,
                               columns.trip_distance) if c not in reader.fieldnames]
        if missing:
            raise IngestError(f"{path}: missing columns {missing}")
        for row in reader:
            try:
                pickup = _parse_pickup(row[columns.pickup_datetime])
                zone = int(row[columns.zone_id])
                distance = float(row[columns.trip_distance])
            except (ValueError, TypeError, KeyError):
                report.rejected["malformed"] += 1
                continue
            if distance < 0:
                report.rejected["negative_distance"] += 1
                continue
            if zone not in known_zones:
                report.rejected["unknown_zone"] += 1
                continue
            if time_range is not None and not time_range[0] <= pickup < time_range[1]:
                report.rejected["out_of_range"] += 1
                continue
            pickup_hour = pickup.replace(minute=0, second=0, microsecond=0)
            counts[(datetime_to_hour(pickup_hour, epoch), zone)] += 1
            report.accepted += 1


def aggregate_trips(paths: Sequence, *, columns: ColumnMap | None = None,
                    known_zones: Iterable[int] = DEFAULT_ZONES,
                    time_range: tuple[datetime, datetime] | None = None,
                    top_k: int | None = None,
                    epoch: datetime = DEFAULT_EPOCH) -> tuple[DemandStream, IngestReport]:
    """Aggregate accepted trip records into a dense per-zone hourly stream.

    Counts from multiple files merge by plain addition, so file order does
    not affect the result. With ``top_k`` set, only the K zones with the
    largest total demand survive (ties broken by zone id).
    """
    columns = columns or ColumnMap()
    known = frozenset(int(z) for z in known_zones)
    counts: Counter = Counter()
    report = IngestReport()
    for path in paths:
        _count_file(Path(path), columns, known, time_range, epoch, counts, report)
    if report.accepted == 0:
        raise IngestError("zero accepted rows across all inputs")

    totals: Counter = Counter()
    for (_, zone), n in counts.items():
        totals[zone] += n
    zones = sorted(totals)
    if top_k is not None and top_k < len(zones):
        ranked = sorted(totals, key=lambda z: (-totals[z], z))
        zones = sorted(ranked[:top_k])

    first = min(hour for hour, _ in counts)
    last = max(hour for hour, _ in counts)
    grid = np.zeros((last - first + 1, len(zones)), dtype=np.int64)
    zidx = {z: i for i, z in enumerate(zones)}
    for (hour, zone), n in counts.items():
        if zone in zidx:
            grid[hour - first, zidx[zone]] = n
    return DemandStream(first, zones, grid, epoch), report
