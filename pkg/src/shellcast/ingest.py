"""Raw observation files to per-estuary sample matrices.

A sample is one (production zone, ISO week) pair.  Inputs are everything
measured during the week (station aggregates, weekly upwelling mean, the
zone's Friday open/closed state, the zone one-hot); the label is the
zone's state on the Monday of the following week.  Weekly aggregation:
chlorophylls and plankton counts by maximum, nutrients by mean,
temperature/salinity/oxygen by mean over all depths and sampling events,
plus thermocline/halocline stratification indices from the depth profiles.
"""

from __future__ import annotations

import bisect
import csv
import datetime as dt
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError, ParseError

PROFILE_HEADER = ["station_id", "date", "depth_m", "temperature_c", "salinity", "oxygen_ml_l"]
SURFACE_HEADER = [
    "station_id", "date",
    "chl_a", "chl_b", "chl_c",
    "d_acuminata", "d_acuta", "d_caudata", "d_spp",
    "ammonium", "phosphate", "nitrate", "nitrite",
]
STATUS_HEADER = ["zone_id", "date", "state"]
UPWELLING_HEADER = ["date", "index"]

# Order of the 16 per-station features inside a sample vector.
STATION_FEATURES = [
    "chl_a_max", "chl_b_max", "chl_c_max",
    "d_acuminata", "d_acuta", "d_caudata", "d_spp",
    "ammonium", "phosphate", "nitrate", "nitrite",
    "temp_mean", "salinity_mean", "oxygen_mean",
    "thermocline_index", "halocline_index",
]

PLANKTON_FIELDS = ("d_acuminata", "d_acuta", "d_caudata", "d_spp")


@dataclass(frozen=True)
class ProfileRecord:
    station_id: str
    date: dt.date
    depth_m: float
    temperature: float | None
    salinity: float | None
    oxygen: float | None


@dataclass(frozen=True)
class SurfaceRecord:
    station_id: str
    date: dt.date
    chl_a: float | None
    chl_b: float | None
    chl_c: float | None
    d_acuminata: float | None
    d_acuta: float | None
    d_caudata: float | None
    d_spp: float | None
    ammonium: float | None
    phosphate: float | None
    nitrate: float | None
    nitrite: float | None


@dataclass(frozen=True)
class ZoneStatusRecord:
    zone_id: str
    date: dt.date
    state: int  # 0 = open, 1 = closed


@dataclass(frozen=True)
class UpwellingRecord:
    date: dt.date
    index: float


@dataclass(frozen=True)
class EstuaryConfig:
    """Station and zone rosters; list order is the canonical feature order."""

    name: str
    stations: tuple[str, ...]
    zones: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.stations or not self.zones:
            raise ConfigError(f"estuary {self.name!r}: stations and zones must be non-empty")
        if len(set(self.stations)) != len(self.stations):
            raise ConfigError(f"estuary {self.name!r}: duplicate station ids")
        if len(set(self.zones)) != len(self.zones):
            raise ConfigError(f"estuary {self.name!r}: duplicate zone ids")

    @classmethod
    def from_json(cls, path) -> "EstuaryConfig":
        with open(path) as fh:
            obj = json.load(fh)
        try:
            return cls(name=obj["name"], stations=tuple(obj["stations"]), zones=tuple(obj["zones"]))
        except KeyError as exc:
            raise ConfigError(f"{path}: missing config key {exc}") from exc

    def to_json_dict(self) -> dict:
        return {"name": self.name, "stations": list(self.stations), "zones": list(self.zones)}


@dataclass(frozen=True)
class StationWeekRecord:
    """Weekly aggregate of one station's observations.  Any field may be None."""

    station_id: str
    iso_year: int
    iso_week: int
    chl_a_max: float | None = None
    chl_b_max: float | None = None
    chl_c_max: float | None = None
    d_acuminata: float | None = None
    d_acuta: float | None = None
    d_caudata: float | None = None
    d_spp: float | None = None
    ammonium: float | None = None
    phosphate: float | None = None
    nitrate: float | None = None
    nitrite: float | None = None
    temp_mean: float | None = None
    salinity_mean: float | None = None
    oxygen_mean: float | None = None
    thermocline_index: float | None = None
    halocline_index: float | None = None

    def feature_values(self) -> list[float | None]:
        return [getattr(self, name) for name in STATION_FEATURES]


@dataclass(frozen=True)
class CandidateSample:
    """One (zone, week) sample before null filtering; features may hold NaN."""

    zone_id: str
    iso_year: int
    iso_week: int
    features: np.ndarray
    label: int


@dataclass(frozen=True)
class DropEntry:
    zone_id: str
    iso_year: int
    iso_week: int
    reason: str


@dataclass
class EstuaryDataset:
    """Complete sample matrix for one estuary: no missing values anywhere."""

    X: np.ndarray
    y: np.ndarray
    feature_names: list[str]
    keys: list[tuple[str, int, int]] | None = None  # (zone_id, iso_year, iso_week)
    name: str = ""

    def __post_init__(self) -> None:
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.int64)
        if self.X.ndim != 2 or self.X.shape[0] != self.y.shape[0]:
            raise DataError("dataset matrix and labels disagree in shape")
        if self.X.shape[1] != len(self.feature_names):
            raise DataError(
                f"dataset width {self.X.shape[1]} != {len(self.feature_names)} feature names"
            )
        if not np.all(np.isfinite(self.X)):
            raise DataError("dataset contains missing or non-finite values")
        if not np.all((self.y == 0) | (self.y == 1)):
            raise DataError("labels must be 0 or 1")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    def save_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.feature_names + ["label"])
            for row, label in zip(self.X, self.y):
                writer.writerow([_fmt(v) for v in row] + [int(label)])

    @classmethod
    def load_csv(cls, path, name: str = "") -> "EstuaryDataset":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if not header or header[-1] != "label":
                raise ParseError(f"{path}: expected a feature header ending in 'label'")
            X, y = [], []
            for i, row in enumerate(reader, start=2):
                if len(row) != len(header):
                    raise ParseError(f"{path}:{i}: expected {len(header)} cells, got {len(row)}")
                try:
                    X.append([float(v) for v in row[:-1]])
                    y.append(int(row[-1]))
                except ValueError as exc:
                    raise ParseError(f"{path}:{i}: {exc}") from exc
        if not X:
            raise DataError(f"{path}: dataset has no rows")
        return cls(
            X=np.array(X), y=np.array(y), feature_names=header[:-1],
            keys=None, name=name or Path(path).stem,
        )


def feature_names(config: EstuaryConfig) -> list[str]:
    """Canonical feature layout for one estuary."""
    names = ["week_of_year", "upwelling"]
    for station in config.stations:
        names.extend(f"{station}_{feat}" for feat in STATION_FEATURES)
    names.extend(f"zone_{zone}" for zone in config.zones)
    names.append("friday_state")
    return names


def _fmt(value) -> str:
    return repr(float(value))


def _parse_float(cell: str, path, line: int, column: str) -> float | None:
    cell = cell.strip()
    if cell == "":
        return None
    try:
        value = float(cell)
    except ValueError as exc:
        raise ParseError(f"{path}:{line}: column {column!r}: not a number: {cell!r}") from exc
    if not math.isfinite(value):
        raise ParseError(f"{path}:{line}: column {column!r}: non-finite value {cell!r}")
    return value


def _parse_date(cell: str, path, line: int) -> dt.date:
    try:
        return dt.date.fromisoformat(cell.strip())
    except ValueError as exc:
        raise ParseError(f"{path}:{line}: bad date {cell!r}") from exc


def _open_reader(path, expected_header: list[str]):
    fh = open(path, newline="")
    reader = csv.reader(fh)
    header = next(reader, None)
    if header != expected_header:
        fh.close()
        raise ParseError(f"{path}:1: expected header {','.join(expected_header)!r}")
    return fh, reader


def parse_profiles(path, config: EstuaryConfig | None = None) -> list[ProfileRecord]:
    fh, reader = _open_reader(path, PROFILE_HEADER)
    records = []
    with fh:
        for i, row in enumerate(reader, start=2):
            if len(row) != len(PROFILE_HEADER):
                raise ParseError(f"{path}:{i}: expected {len(PROFILE_HEADER)} cells, got {len(row)}")
            station = row[0].strip()
            if config is not None and station not in config.stations:
                raise ConfigError(f"{path}:{i}: unknown station id {station!r}")
            depth = _parse_float(row[2], path, i, "depth_m")
            if depth is None or depth <= 0:
                raise ParseError(f"{path}:{i}: depth_m must be a positive number, got {row[2]!r}")
            records.append(ProfileRecord(
                station_id=station,
                date=_parse_date(row[1], path, i),
                depth_m=depth,
                temperature=_parse_float(row[3], path, i, "temperature_c"),
                salinity=_parse_float(row[4], path, i, "salinity"),
                oxygen=_parse_float(row[5], path, i, "oxygen_ml_l"),
            ))
    return records


def parse_surface(path, config: EstuaryConfig | None = None) -> list[SurfaceRecord]:
    fh, reader = _open_reader(path, SURFACE_HEADER)
    records = []
    with fh:
        for i, row in enumerate(reader, start=2):
            if len(row) != len(SURFACE_HEADER):
                raise ParseError(f"{path}:{i}: expected {len(SURFACE_HEADER)} cells, got {len(row)}")
            station = row[0].strip()
            if config is not None and station not in config.stations:
                raise ConfigError(f"{path}:{i}: unknown station id {station!r}")
            values = {}
            for col, cell in zip(SURFACE_HEADER[2:], row[2:]):
                value = _parse_float(cell, path, i, col)
                if col in PLANKTON_FIELDS and value is not None and value < 0:
                    raise ParseError(f"{path}:{i}: plankton count {col} must be >= 0, got {value}")
                values[col] = value
            records.append(SurfaceRecord(station_id=station, date=_parse_date(row[1], path, i), **values))
    return records


def parse_status(path, config: EstuaryConfig | None = None) -> list[ZoneStatusRecord]:
    fh, reader = _open_reader(path, STATUS_HEADER)
    records = []
    with fh:
        for i, row in enumerate(reader, start=2):
            if len(row) != len(STATUS_HEADER):
                raise ParseError(f"{path}:{i}: expected {len(STATUS_HEADER)} cells, got {len(row)}")
            zone = row[0].strip()
            if config is not None and zone not in config.zones:
                raise ConfigError(f"{path}:{i}: unknown zone id {zone!r}")
            state = row[2].strip().lower()
            if state not in ("open", "closed"):
                raise ParseError(f"{path}:{i}: state must be open or closed, got {row[2]!r}")
            records.append(ZoneStatusRecord(
                zone_id=zone, date=_parse_date(row[1], path, i), state=int(state == "closed"),
            ))
    return records


def parse_upwelling(path) -> list[UpwellingRecord]:
    fh, reader = _open_reader(path, UPWELLING_HEADER)
    records = []
    with fh:
        for i, row in enumerate(reader, start=2):
            if len(row) != len(UPWELLING_HEADER):
                raise ParseError(f"{path}:{i}: expected {len(UPWELLING_HEADER)} cells, got {len(row)}")
            value = _parse_float(row[1], path, i, "index")
            if value is None:
                raise ParseError(f"{path}:{i}: upwelling index is required")
            records.append(UpwellingRecord(date=_parse_date(row[0], path, i), index=value))
    return records


def parse_raw(profile_path, surface_path, status_path, upwelling_path,
              config: EstuaryConfig | None = None):
    """Parse the four raw CSVs; ids are checked against config when given."""
    return (
        parse_profiles(profile_path, config),
        parse_surface(surface_path, config),
        parse_status(status_path, config),
        parse_upwelling(upwelling_path),
    )


def week_of_year(date: dt.date) -> int:
    """ISO-8601 week number, 1..53."""
    return date.isocalendar()[1]


def iso_week_key(date: dt.date) -> tuple[int, int]:
    iso = date.isocalendar()
    return iso[0], iso[1]


def stratification_index(values_by_depth) -> float | None:
    """Absolute difference between the mean over depths <= 6 m and the
    mean over depths in (6, 12] m; None when either bin is empty."""
    upper = [v for d, v in values_by_depth if d <= 6.0]
    lower = [v for d, v in values_by_depth if 6.0 < d <= 12.0]
    if not upper or not lower:
        return None
    return abs(sum(upper) / len(upper) - sum(lower) / len(lower))


def _mean(values: list[float]) -> float | None:
    return sum(values) / len(values) if values else None


def _max(values: list[float]) -> float | None:
    return max(values) if values else None


def aggregate_week(profiles, surfaces, station_id: str, iso_year: int, iso_week: int) -> StationWeekRecord:
    """Aggregate one station's observations for one ISO week."""
    key = (iso_year, iso_week)
    profs = sorted(
        (p for p in profiles if p.station_id == station_id and iso_week_key(p.date) == key),
        key=lambda p: (p.date, p.depth_m),
    )
    surfs = sorted(
        (s for s in surfaces if s.station_id == station_id and iso_week_key(s.date) == key),
        key=lambda s: s.date,
    )

    def collect(attr):
        return [getattr(s, attr) for s in surfs if getattr(s, attr) is not None]

    temp_pairs = [(p.depth_m, p.temperature) for p in profs if p.temperature is not None]
    sal_pairs = [(p.depth_m, p.salinity) for p in profs if p.salinity is not None]
    return StationWeekRecord(
        station_id=station_id,
        iso_year=iso_year,
        iso_week=iso_week,
        chl_a_max=_max(collect("chl_a")),
        chl_b_max=_max(collect("chl_b")),
        chl_c_max=_max(collect("chl_c")),
        d_acuminata=_max(collect("d_acuminata")),
        d_acuta=_max(collect("d_acuta")),
        d_caudata=_max(collect("d_caudata")),
        d_spp=_max(collect("d_spp")),
        ammonium=_mean(collect("ammonium")),
        phosphate=_mean(collect("phosphate")),
        nitrate=_mean(collect("nitrate")),
        nitrite=_mean(collect("nitrite")),
        temp_mean=_mean([v for _, v in temp_pairs]),
        salinity_mean=_mean([v for _, v in sal_pairs]),
        oxygen_mean=_mean([p.oxygen for p in profs if p.oxygen is not None]),
        thermocline_index=stratification_index(temp_pairs),
        halocline_index=stratification_index(sal_pairs),
    )


def one_hot(zone_id: str, zone_list) -> np.ndarray:
    """Binary indicator vector over zone_list."""
    zones = list(zone_list)
    if zone_id not in zones:
        raise ConfigError(f"unknown zone id {zone_id!r}, expected one of {zones}")
    vec = np.zeros(len(zones), dtype=np.float64)
    vec[zones.index(zone_id)] = 1.0
    return vec


def _week_range(dates) -> list[tuple[int, int]]:
    """All ISO (year, week) pairs spanning the given dates, contiguous."""
    dates = list(dates)
    if not dates:
        raise DataError("no dated records to derive the week range from")
    first, last = min(dates), max(dates)
    monday = dt.date.fromisocalendar(*iso_week_key(first), 1)
    weeks = []
    while monday <= last:
        weeks.append(iso_week_key(monday))
        monday += dt.timedelta(days=7)
    return weeks


def build_samples(config: EstuaryConfig, station_weeks, zone_statuses, upwelling_records):
    """Assemble one candidate sample per (zone, week).

    Returns (samples, drops).  friday_state is the most recent status on
    or before the week's Friday (states persist between regulatory
    decisions); the label needs a status record dated exactly the
    following Monday, otherwise the pair is dropped with reason
    'no_label'.  Missing features are NaN; they are removed later by
    drop_nulls.
    """
    week_index: dict[tuple[str, int, int], StationWeekRecord] = {}
    for rec in station_weeks:
        if rec.station_id not in config.stations:
            raise ConfigError(f"station week for unknown station {rec.station_id!r}")
        week_index[(rec.station_id, rec.iso_year, rec.iso_week)] = rec

    upwelling_by_week: dict[tuple[int, int], list[float]] = {}
    for rec in sorted(upwelling_records, key=lambda r: r.date):
        upwelling_by_week.setdefault(iso_week_key(rec.date), []).append(rec.index)

    status_by_zone: dict[str, dict[dt.date, int]] = {zone: {} for zone in config.zones}
    for rec in sorted(zone_statuses, key=lambda r: (r.zone_id, r.date)):
        if rec.zone_id not in config.zones:
            raise ConfigError(f"status record for unknown zone {rec.zone_id!r}")
        existing = status_by_zone[rec.zone_id].get(rec.date)
        if existing is not None and existing != rec.state:
            raise DataError(f"conflicting status for zone {rec.zone_id} on {rec.date}")
        status_by_zone[rec.zone_id][rec.date] = rec.state
    status_dates = {zone: sorted(dates) for zone, dates in status_by_zone.items()}

    def state_on_or_before(zone: str, day: dt.date) -> int | None:
        dates = status_dates[zone]
        pos = bisect.bisect_right(dates, day)
        if pos == 0:
            return None
        return status_by_zone[zone][dates[pos - 1]]

    all_dates = [rec.date for rec in zone_statuses]
    all_dates += [rec.date for rec in upwelling_records]
    all_dates += [
        dt.date.fromisocalendar(rec.iso_year, rec.iso_week, 1) for rec in station_weeks
    ]
    weeks = _week_range(all_dates)

    samples: list[CandidateSample] = []
    drops: list[DropEntry] = []
    for iso_year, iso_week in weeks:
        friday = dt.date.fromisocalendar(iso_year, iso_week, 5)
        next_monday = friday + dt.timedelta(days=3)
        upwelling = _mean(upwelling_by_week.get((iso_year, iso_week), []))
        station_part: list[float] = []
        for station in config.stations:
            rec = week_index.get((station, iso_year, iso_week))
            values = rec.feature_values() if rec is not None else [None] * len(STATION_FEATURES)
            station_part.extend(np.nan if v is None else v for v in values)
        for zone in config.zones:
            friday_state = state_on_or_before(zone, friday)
            if friday_state is None:
                drops.append(DropEntry(zone, iso_year, iso_week, "no_friday_status"))
                continue
            label = status_by_zone[zone].get(next_monday)
            if label is None:
                drops.append(DropEntry(zone, iso_year, iso_week, "no_label"))
                continue
            features = np.concatenate([
                [float(iso_week), np.nan if upwelling is None else upwelling],
                station_part,
                one_hot(zone, config.zones),
                [float(friday_state)],
            ])
            samples.append(CandidateSample(
                zone_id=zone, iso_year=iso_year, iso_week=iso_week,
                features=features, label=int(label),
            ))
    return samples, drops


def drop_nulls(samples, config: EstuaryConfig) -> EstuaryDataset:
    """Remove candidate samples with any missing feature."""
    samples = list(samples)
    if not samples:
        raise DataError("no candidate samples to filter")
    kept = [s for s in samples if np.all(np.isfinite(s.features))]
    if not kept:
        raise DataError("no complete samples after null filtering")
    return EstuaryDataset(
        X=np.stack([s.features for s in kept]),
        y=np.array([s.label for s in kept]),
        feature_names=feature_names(config),
        keys=[(s.zone_id, s.iso_year, s.iso_week) for s in kept],
        name=config.name,
    )


def write_drop_log(drops, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["zone_id", "iso_year", "iso_week", "reason"])
        for d in drops:
            writer.writerow([d.zone_id, d.iso_year, d.iso_week, d.reason])


def build_dataset(config: EstuaryConfig, profiles, surfaces, statuses, upwelling):
    """Full pipeline from parsed records to a complete dataset.

    Returns (dataset, drops, null_drop_count).  Records are sorted before
    aggregation so rebuilding from re-ordered files is byte-identical.
    """
    profiles = sorted(profiles, key=lambda p: (p.station_id, p.date, p.depth_m))
    surfaces = sorted(surfaces, key=lambda s: (s.station_id, s.date))
    prof_groups: dict[tuple[str, int, int], list[ProfileRecord]] = {}
    for rec in profiles:
        y, w = iso_week_key(rec.date)
        prof_groups.setdefault((rec.station_id, y, w), []).append(rec)
    surf_groups: dict[tuple[str, int, int], list[SurfaceRecord]] = {}
    for rec in surfaces:
        y, w = iso_week_key(rec.date)
        surf_groups.setdefault((rec.station_id, y, w), []).append(rec)
    needed_weeks = sorted({key[1:] for key in prof_groups} | {key[1:] for key in surf_groups})
    station_weeks = []
    for iso_year, iso_week in needed_weeks:
        for station in config.stations:
            key = (station, iso_year, iso_week)
            station_weeks.append(aggregate_week(
                prof_groups.get(key, []), surf_groups.get(key, []),
                station, iso_year, iso_week,
            ))
    samples, drops = build_samples(config, station_weeks, statuses, upwelling)
    dataset = drop_nulls(samples, config)
    return dataset, drops, len(samples) - dataset.n
