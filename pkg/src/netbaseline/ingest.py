"""Trip, weather, and distance ingestion for bike-share style studies.

Inputs are three UTF-8 CSVs with headers:

    trips.csv       start_station,end_station,start_time   (ISO-8601 times)
    weather.csv     hour_start,temperature,precipitation
    distances.csv   i,j,minutes

The pipeline selects a directed active network from a reference window
(pairs with at least ``min_trips`` trips), builds a static-edge panel whose
events are trip starts and whose pair covariates are (log minutes,
log minutes squared), and assembles the 17-term baseline feature map from
hourly weather plus daily harmonics with weekend interactions.

Times inside the panel are decimal hours since a configurable study origin.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import PanelFormatError
from .model import BaselineSpec, SystemCovariates, weather_clock_baseline
from .panel import PairKey, PairPanel, PairRecord, build_panel
from .paths import PiecewisePath

DEFAULT_MIN_TRIPS = 10
DEFAULT_MAX_GAP_HOURS = 3.0
SECONDS_PER_HOUR = 3600.0


@dataclass(frozen=True)
class TripRecord:
    start_station: str
    end_station: str
    start_time: datetime


@dataclass(frozen=True)
class WeatherRecord:
    hour_start: datetime
    temperature: float
    precipitation: float


@dataclass(frozen=True)
class NetworkRule:
    """Directed pair (i, j) is active when the reference window contains at
    least ``min_trips`` trips from i to j."""

    window_start: datetime
    window_end: datetime
    min_trips: int = DEFAULT_MIN_TRIPS

    def __post_init__(self):
        if self.window_end <= self.window_start:
            raise ValueError("reference window must have positive length")
        if self.min_trips < 1:
            raise ValueError("min_trips must be at least 1")


@dataclass
class LoadReport:
    path: str
    n_rows: int = 0
    n_bad: int = 0
    errors: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    def error(self, line: int, message: str):
        self.n_bad += 1
        self.errors.append(f"{Path(self.path).name}:{line}: {message}")

    @property
    def ok(self) -> bool:
        return not self.errors


def parse_timestamp(text: str) -> datetime:
    text = text.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    return datetime.fromisoformat(text)


def hours_since(origin: datetime, ts: datetime) -> float:
    try:
        delta = ts - origin
    except TypeError as err:
        raise PanelFormatError(
            "timestamps mix timezone-aware and naive values"
        ) from err
    return delta.total_seconds() / SECONDS_PER_HOUR


def _dict_reader(path, required: tuple[str, ...]):
    path = Path(path)
    if not path.exists():
        raise PanelFormatError(f"missing required file {path}")
    fh = open(path, encoding="utf-8-sig", newline="")
    reader = csv.DictReader(fh)
    header = reader.fieldnames or []
    missing = [col for col in required if col not in header]
    if missing:
        fh.close()
        raise PanelFormatError(
            f"{path.name}: missing required columns {', '.join(missing)}"
        )
    return fh, reader


def load_trips(path) -> tuple[list[TripRecord], LoadReport]:
    report = LoadReport(path=str(path))
    records: list[TripRecord] = []
    fh, reader = _dict_reader(path, ("start_station", "end_station", "start_time"))
    with fh:
        for line, row in enumerate(reader, start=2):
            report.n_rows += 1
            start = (row["start_station"] or "").strip()
            end = (row["end_station"] or "").strip()
            if not start or not end:
                report.error(line, "empty station id")
                continue
            try:
                ts = parse_timestamp(row["start_time"] or "")
            except ValueError:
                report.error(line, f"unparseable start_time {row['start_time']!r}")
                continue
            records.append(TripRecord(start, end, ts))
    if report.n_rows == 0:
        report.warnings.append(f"{Path(str(path)).name}: no trip rows")
    return records, report


def load_weather(path) -> tuple[list[WeatherRecord], LoadReport]:
    report = LoadReport(path=str(path))
    records: list[WeatherRecord] = []
    fh, reader = _dict_reader(path, ("hour_start", "temperature", "precipitation"))
    with fh:
        for line, row in enumerate(reader, start=2):
            report.n_rows += 1
            try:
                ts = parse_timestamp(row["hour_start"] or "")
            except ValueError:
                report.error(line, f"unparseable hour_start {row['hour_start']!r}")
                continue
            try:
                temp = float(row["temperature"])
                precip = float(row["precipitation"])
            except (TypeError, ValueError):
                report.error(line, "temperature/precipitation not numeric")
                continue
            if not (math.isfinite(temp) and math.isfinite(precip)):
                report.error(line, "temperature/precipitation not finite")
                continue
            if precip < 0:
                report.error(line, f"negative precipitation {precip}")
                continue
            records.append(WeatherRecord(ts, temp, precip))
    records.sort(key=lambda r: r.hour_start)
    if report.n_rows == 0:
        report.warnings.append(f"{Path(str(path)).name}: no weather rows")
    return records, report


def load_distances(path) -> tuple[dict[tuple[str, str], float], LoadReport]:
    report = LoadReport(path=str(path))
    table: dict[tuple[str, str], float] = {}
    fh, reader = _dict_reader(path, ("i", "j", "minutes"))
    with fh:
        for line, row in enumerate(reader, start=2):
            report.n_rows += 1
            a = (row["i"] or "").strip()
            b = (row["j"] or "").strip()
            if not a or not b:
                report.error(line, "empty station id")
                continue
            try:
                minutes = float(row["minutes"])
            except (TypeError, ValueError):
                report.error(line, f"minutes not numeric: {row['minutes']!r}")
                continue
            if not (math.isfinite(minutes) and minutes > 0):
                report.error(line, f"minutes must be positive, got {minutes}")
                continue
            table[(a, b)] = minutes
    return table, report


def build_active_network(trips, rule: NetworkRule) -> set[tuple[str, str]]:
    """Directed station pairs meeting the reference-window trip threshold."""
    counts: dict[tuple[str, str], int] = {}
    for trip in trips:
        if trip.start_station == trip.end_station:
            continue
        if rule.window_start <= trip.start_time < rule.window_end:
            key = (trip.start_station, trip.end_station)
            counts[key] = counts.get(key, 0) + 1
    return {key for key, c in counts.items() if c >= rule.min_trips}


@dataclass(frozen=True)
class IngestStats:
    n_trips: int
    n_events: int
    n_dropped_inactive: int
    n_dropped_outside: int
    n_stations: int
    n_pairs: int
    tie_adjustments: int

    def to_dict(self) -> dict:
        return {
            "n_trips": self.n_trips,
            "n_events": self.n_events,
            "n_dropped_inactive": self.n_dropped_inactive,
            "n_dropped_outside": self.n_dropped_outside,
            "n_stations": self.n_stations,
            "n_pairs": self.n_pairs,
            "tie_adjustments": self.tie_adjustments,
        }


def build_pair_panel(
    trips,
    network: set[tuple[str, str]],
    distances: dict[tuple[str, str], float],
    horizon: float,
    origin: datetime,
) -> tuple[PairPanel, IngestStats, list[str]]:
    """Static-edge directed panel: every active pair is connected on all of
    [0, horizon]; events are trip starts falling inside (0, horizon]."""
    if not network:
        raise PanelFormatError("active network is empty; lower the trip threshold")
    missing = sorted(key for key in network if key not in distances)
    if missing:
        shown = ", ".join(f"{a}->{b}" for a, b in missing[:5])
        raise PanelFormatError(
            f"{len(missing)} active pairs lack distances (first: {shown})"
        )

    stations = sorted({s for pair in network for s in pair})
    index = {s: k for k, s in enumerate(stations)}

    events: dict[tuple[str, str], list[float]] = {key: [] for key in network}
    dropped_inactive = 0
    dropped_outside = 0
    for trip in trips:
        key = (trip.start_station, trip.end_station)
        if key not in events:
            dropped_inactive += 1
            continue
        t = hours_since(origin, trip.start_time)
        if not 0.0 < t <= horizon:
            dropped_outside += 1
            continue
        events[key].append(t)

    records = []
    for a, b in sorted(network):
        d = math.log(distances[(a, b)])
        records.append(
            PairRecord(
                key=PairKey(index[a], index[b]),
                edge=PiecewisePath.constant(1.0),
                covariates=PiecewisePath(np.zeros(1), np.asarray([[d, d * d]])),
                events=np.sort(np.asarray(events[(a, b)], dtype=float)),
            )
        )
    panel = build_panel(
        records, n_vertices=len(stations), directed=True, horizon=horizon
    )
    stats = IngestStats(
        n_trips=len(trips),
        n_events=panel.n_events,
        n_dropped_inactive=dropped_inactive,
        n_dropped_outside=dropped_outside,
        n_stations=len(stations),
        n_pairs=len(network),
        tie_adjustments=panel.tie_adjustments,
    )
    return panel, stats, stations


def build_baseline_features(
    weather,
    horizon: float,
    origin: datetime,
    temperature_offset: float = 0.0,
    max_gap_hours: float = DEFAULT_MAX_GAP_HOURS,
) -> tuple[BaselineSpec, SystemCovariates]:
    """17-term feature map from hourly weather.

    Component 0 of the system path is log(temperature + offset), component 1
    is precipitation; both step hourly and forward-fill across short gaps.
    """
    if not weather:
        raise PanelFormatError("no weather records")
    rows = []
    for rec in weather:
        t = hours_since(origin, rec.hour_start)
        temp = rec.temperature + temperature_offset
        if temp <= 0:
            raise PanelFormatError(
                f"log-temperature undefined for {rec.temperature} at "
                f"{rec.hour_start.isoformat()}; pass a positive "
                f"temperature_offset to shift the unit"
            )
        rows.append((t, math.log(temp), rec.precipitation))
    rows.sort(key=lambda r: r[0])

    if rows[0][0] > 0:
        raise PanelFormatError(
            "weather coverage starts after the study origin; earliest record "
            f"is at {rows[0][0]:.2f} h"
        )
    last_needed = horizon
    prev = None
    kept = []
    for t, z0, z1 in rows:
        if prev is not None and t - prev > max_gap_hours and prev < last_needed:
            raise PanelFormatError(
                f"weather gap of {t - prev:.2f} h starting at {prev:.2f} h "
                f"exceeds the {max_gap_hours:.2f} h maximum"
            )
        if prev is not None and t <= prev:
            continue
        kept.append((t, z0, z1))
        prev = t
    if prev is None or prev + max_gap_hours < last_needed:
        raise PanelFormatError("weather coverage ends before the horizon")

    # clip leading records so the path starts exactly at 0 with the value
    # in force at the origin
    times = np.asarray([t for t, _, _ in kept])
    vals = np.asarray([(z0, z1) for _, z0, z1 in kept])
    start_idx = int(np.searchsorted(times, 0.0, side="right") - 1)
    times = times[start_idx:].copy()
    vals = vals[start_idx:]
    times[0] = 0.0
    inside = times <= horizon
    times, vals = times[inside], vals[inside]

    system = SystemCovariates(
        path=PiecewisePath(times, vals),
        names=("log_temperature", "precipitation"),
    )
    spec = weather_clock_baseline(system, origin_weekday=origin.weekday())
    return spec, system
