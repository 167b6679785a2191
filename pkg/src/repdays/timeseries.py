"""Hourly load/wind ingestion and day-vector construction."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

log = logging.getLogger(__name__)

HOURS = 24


class IngestError(ValueError):
    """Raised for malformed or inconsistent hourly input."""


@dataclass(frozen=True)
class CsvSchema:
    """Column mapping for :func:`load_hourly_csv`.

    With ``load_columns``/``wind_columns`` left empty, every header
    ``load_<zone>`` / ``wind_<zone>`` is picked up in file order.
    """

    timestamp: str = "timestamp"
    load_columns: Dict[str, str] = field(default_factory=dict)
    wind_columns: Dict[str, str] = field(default_factory=dict)


@dataclass
class HourlyRecordSet:
    """Whole days of hourly data, arrays shaped ``[day, hour, zone]``."""

    load_zones: List[str]
    wind_zones: List[str]
    load: np.ndarray
    wind: np.ndarray
    dates: List[date] = field(default_factory=list)
    partial_days_dropped: int = 0

    def __post_init__(self):
        self.load = np.asarray(self.load, dtype=float)
        self.wind = np.asarray(self.wind, dtype=float)
        if self.load.ndim != 3 or self.load.shape[1] != HOURS:
            raise IngestError(f"load must be [day, 24, zone], got {self.load.shape}")
        if self.wind.ndim != 3 or self.wind.shape[1] != HOURS:
            raise IngestError(f"wind must be [day, 24, zone], got {self.wind.shape}")
        if self.load.shape[0] != self.wind.shape[0]:
            raise IngestError("load and wind cover different numbers of days")
        if self.load.shape[2] != len(self.load_zones) or self.wind.shape[2] != len(self.wind_zones):
            raise IngestError("zone labels do not match array widths")
        if np.isnan(self.load).any() or np.isnan(self.wind).any():
            raise IngestError("missing entries")
        if (self.load < 0).any() or (self.wind < 0).any():
            raise IngestError("negative load or wind value")

    @property
    def n_days(self) -> int:
        return int(self.load.shape[0])

    @property
    def zones(self) -> List[str]:
        return list(self.load_zones) + list(self.wind_zones)

    def subset(self, days: Sequence[int]) -> "HourlyRecordSet":
        days = list(days)
        return HourlyRecordSet(list(self.load_zones), list(self.wind_zones),
                               self.load[days], self.wind[days],
                               [self.dates[d] for d in days] if self.dates else [])

    def peaks(self) -> Tuple[Dict[str, float], Dict[str, float]]:
        """Historical maximum of each zone, used to express profiles per unit."""
        lp = {z: float(self.load[:, :, k].max()) for k, z in enumerate(self.load_zones)}
        wp = {z: float(self.wind[:, :, k].max()) for k, z in enumerate(self.wind_zones)}
        return lp, wp


def _parse_ts(text: str, lineno: int) -> datetime:
    try:
        ts = datetime.fromisoformat(text.strip())
    except ValueError:
        raise IngestError(f"line {lineno}: bad timestamp {text!r}") from None
    if ts.minute or ts.second or ts.microsecond:
        raise IngestError(f"line {lineno}: timestamp {text!r} is not on the hour")
    return ts.replace(tzinfo=None)


def load_hourly_csv(path: str, schema: Optional[CsvSchema] = None) -> HourlyRecordSet:
    """Read an hourly CSV and group it into complete calendar days.

    Incomplete days at the start or end are dropped and counted in
    ``partial_days_dropped``; a hole anywhere else is an error.
    """
    schema = schema or CsvSchema()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise IngestError(f"{path}: empty file") from None
        if schema.timestamp not in header:
            raise IngestError(f"{path}: no timestamp column {schema.timestamp!r}")
        load_cols = dict(schema.load_columns) or {h[5:]: h for h in header if h.startswith("load_")}
        wind_cols = dict(schema.wind_columns) or {h[5:]: h for h in header if h.startswith("wind_")}
        if not load_cols or not wind_cols:
            raise IngestError(f"{path}: need at least one load and one wind column")
        for col in list(load_cols.values()) + list(wind_cols.values()):
            if col not in header:
                raise IngestError(f"{path}: missing column {col!r}")
        t_idx = header.index(schema.timestamp)
        l_idx = [header.index(c) for c in load_cols.values()]
        w_idx = [header.index(c) for c in wind_cols.values()]

        stamps: List[datetime] = []
        rows: List[List[float]] = []
        seen = set()
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise IngestError(f"line {lineno}: expected {len(header)} fields, got {len(row)}")
            ts = _parse_ts(row[t_idx], lineno)
            if ts in seen:
                raise IngestError(f"line {lineno}: duplicated timestamp {ts.isoformat()}")
            seen.add(ts)
            try:
                vals = [float(row[i]) for i in l_idx + w_idx]
            except ValueError:
                raise IngestError(f"line {lineno}: non-numeric value") from None
            if any(v != v for v in vals):
                raise IngestError(f"line {lineno}: missing value")
            if any(v < 0 for v in vals):
                raise IngestError(f"line {lineno}: negative value")
            stamps.append(ts)
            rows.append(vals)

    if not stamps:
        raise IngestError(f"{path}: no data rows")
    for k in range(1, len(stamps)):
        if stamps[k] - stamps[k - 1] != timedelta(hours=1):
            raise IngestError(
                f"timestamps {stamps[k - 1].isoformat()} -> {stamps[k].isoformat()} are not consecutive hours")

    by_day: Dict[date, List[int]] = {}
    for k, ts in enumerate(stamps):
        by_day.setdefault(ts.date(), []).append(k)
    days = sorted(by_day)
    complete = [d for d in days if len(by_day[d]) == HOURS]
    dropped = len(days) - len(complete)
    if dropped:
        log.warning("%s: dropped %d partial day(s)", path, dropped)
    if not complete:
        raise IngestError(f"{path}: no complete day")
    data = np.array([[rows[k] for k in by_day[d]] for d in complete], dtype=float)
    nl = len(load_cols)
    return HourlyRecordSet(list(load_cols), list(wind_cols), data[:, :, :nl], data[:, :, nl:],
                           complete, dropped)


def write_hourly_csv(records: HourlyRecordSet, path: str, start: Optional[datetime] = None) -> None:
    start = start or datetime.combine(records.dates[0] if records.dates else date(2016, 1, 1),
                                      datetime.min.time())
    header = ["timestamp"] + [f"load_{z}" for z in records.load_zones] + [f"wind_{z}" for z in records.wind_zones]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        t = start
        for d in range(records.n_days):
            for h in range(HOURS):
                vals = list(records.load[d, h]) + list(records.wind[d, h])
                w.writerow([t.isoformat(timespec="minutes")] + [f"{v:.6f}" for v in vals])
                t += timedelta(hours=1)


# -- observations ------------------------------------------------------------

@dataclass(frozen=True)
class ScalingParams:
    lo: np.ndarray
    hi: np.ndarray

    @property
    def constant(self) -> np.ndarray:
        return self.hi <= self.lo


@dataclass(frozen=True)
class FeatureLayout:
    """Order of 24-hour blocks inside a day vector, plus per-zone peaks."""

    load_zones: Tuple[str, ...]
    wind_zones: Tuple[str, ...]
    load_peaks: Tuple[float, ...]
    wind_peaks: Tuple[float, ...]

    @property
    def n_features(self) -> int:
        return len(self.load_zones) + len(self.wind_zones)

    def block(self, feature: str, zone: str) -> slice:
        if feature == "load":
            k = self.load_zones.index(zone)
        else:
            k = len(self.load_zones) + self.wind_zones.index(zone)
        return slice(k * HOURS, (k + 1) * HOURS)


@dataclass(frozen=True)
class DayObservation:
    day_index: int
    vector: np.ndarray


@dataclass
class ObservationSet:
    observations: List[DayObservation]
    scaling: ScalingParams
    layout: FeatureLayout

    @property
    def n_features(self) -> int:
        return self.layout.n_features

    @property
    def matrix(self) -> np.ndarray:
        return np.vstack([o.vector for o in self.observations])

    def __len__(self) -> int:
        return len(self.observations)


def normalize(raw: np.ndarray) -> Tuple[np.ndarray, ScalingParams]:
    """Min-max map every dimension onto [0, 1]; constant dimensions go to 0."""
    raw = np.atleast_2d(np.asarray(raw, dtype=float))
    if raw.shape[0] == 0:
        raise ValueError("cannot normalise an empty set")
    lo = raw.min(axis=0)
    hi = raw.max(axis=0)
    span = hi - lo
    safe = np.where(span > 0, span, 1.0)
    out = np.where(span > 0, (raw - lo) / safe, 0.0)
    return out, ScalingParams(lo, hi)


def denormalize(normed: np.ndarray, scaling: ScalingParams) -> np.ndarray:
    normed = np.asarray(normed, dtype=float)
    return scaling.lo + normed * (scaling.hi - scaling.lo)


def day_vectors(records: HourlyRecordSet) -> np.ndarray:
    """Raw day vectors: load zones then wind zones, 24 hours per block."""
    blocks = [records.load[:, :, k] for k in range(len(records.load_zones))]
    blocks += [records.wind[:, :, k] for k in range(len(records.wind_zones))]
    return np.hstack(blocks)


def build_day_observations(records: HourlyRecordSet) -> ObservationSet:
    if records.n_days < 1:
        raise ValueError("need at least one day")
    normed, scaling = normalize(day_vectors(records))
    lp, wp = records.peaks()
    layout = FeatureLayout(tuple(records.load_zones), tuple(records.wind_zones),
                           tuple(lp[z] for z in records.load_zones),
                           tuple(wp[z] for z in records.wind_zones))
    obs = [DayObservation(d, normed[d]) for d in range(records.n_days)]
    return ObservationSet(obs, scaling, layout)
