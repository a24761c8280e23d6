"""Building/weather time series: dataset directory I/O, validation and a
synthetic generator that writes the same schema.

Dataset directory layout::

    district.toml         district config (buildings, storage, PV, calendar)
    building_<id>.csv     hour_index,cooling_demand_kwh,dhw_demand_kwh,
                          non_shiftable_load_kwh,solar_gen_kwh_per_kw
    weather.csv           hour_index,t_out_c,direct_solar_w_m2

Absent DHW demand or PV generation is written as empty column values.
"""

from __future__ import annotations

import csv
import enum
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

CONFIG_NAME = "district.toml"
WEATHER_NAME = "weather.csv"
BUILDING_COLUMNS = [
    "hour_index",
    "cooling_demand_kwh",
    "dhw_demand_kwh",
    "non_shiftable_load_kwh",
    "solar_gen_kwh_per_kw",
]
WEATHER_COLUMNS = ["hour_index", "t_out_c", "direct_solar_w_m2"]
HOURS_PER_YEAR = 8760
YEAR_MONTH_HOURS = 730
MONTH_DAYS = 30


class DataError(ValueError):
    """Base class for dataset problems."""


class MissingFile(DataError):
    pass


class SchemaMismatch(DataError):
    pass


class LengthMismatch(DataError):
    pass


class NegativeDemand(DataError):
    pass


class NoSuchStorage(DataError):
    pass


class BuildingType(str, enum.Enum):
    COMMERCIAL = "Commercial"
    RESIDENTIAL = "Residential"


class StorageKind(str, enum.Enum):
    COOLING = "cooling"
    DHW = "dhw"


@dataclass(frozen=True, eq=False)
class BuildingSpec:
    id: int
    building_type: BuildingType
    cooling_demand: np.ndarray
    non_shiftable_load: np.ndarray
    dhw_demand: np.ndarray | None = None
    solar_gen_per_kw: np.ndarray | None = None
    pv_kw: float = 0.0
    cooling_storage_factor: float = 0.0
    dhw_storage_factor: float = 0.0

    @property
    def hours(self):
        return len(self.cooling_demand)

    @property
    def has_pv(self):
        return self.pv_kw > 0

    @property
    def has_dhw_storage(self):
        return self.dhw_storage_factor > 0

    def validate(self):
        series = {
            "cooling_demand": self.cooling_demand,
            "non_shiftable_load": self.non_shiftable_load,
            "dhw_demand": self.dhw_demand,
            "solar_gen_per_kw": self.solar_gen_per_kw,
        }
        n = self.hours
        if n == 0 or n % 24:
            raise LengthMismatch(f"building {self.id}: length {n} is not a positive multiple of 24")
        for name, s in series.items():
            if s is None:
                continue
            if len(s) != n:
                raise LengthMismatch(f"building {self.id}: {name} has {len(s)} values, expected {n}")
            if not np.all(np.isfinite(s)):
                raise DataError(f"building {self.id}: {name} contains non-finite values")
            if np.any(s < 0):
                raise NegativeDemand(f"building {self.id}: {name} has negative values")
        if self.pv_kw < 0 or self.cooling_storage_factor < 0 or self.dhw_storage_factor < 0:
            raise DataError(f"building {self.id}: PV size and storage factors must be >= 0")
        if self.dhw_storage_factor > 0 and self.dhw_demand is None:
            raise SchemaMismatch(f"building {self.id}: DHW storage without a DHW demand series")
        if self.pv_kw > 0 and self.solar_gen_per_kw is None:
            raise SchemaMismatch(f"building {self.id}: PV capacity without a generation series")


@dataclass(frozen=True, eq=False)
class WeatherSeries:
    t_out: np.ndarray
    direct_solar_rad: np.ndarray

    def validate(self, hours):
        for name, s in (("t_out", self.t_out), ("direct_solar_rad", self.direct_solar_rad)):
            if len(s) != hours:
                raise LengthMismatch(f"weather {name} has {len(s)} values, buildings have {hours}")
            if not np.all(np.isfinite(s)):
                raise DataError(f"weather {name} contains non-finite values")
        if np.any(self.direct_solar_rad < 0):
            raise NegativeDemand("weather direct_solar_rad has negative values")


@dataclass(frozen=True, eq=False)
class Dataset:
    climate_zone_label: str
    buildings: list
    weather: WeatherSeries
    start_month: int = 1
    start_weekday: int = 1
    extra: dict = field(default_factory=dict)

    @property
    def hours(self):
        return self.buildings[0].hours

    @property
    def month_blocks(self):
        return month_blocks(self.hours)

    def validate(self):
        if not self.buildings:
            raise DataError("a dataset needs at least one building")
        if not 1 <= self.start_month <= 12:
            raise DataError(f"start_month {self.start_month} outside 1-12")
        if not 1 <= self.start_weekday <= 7:
            raise DataError(f"start_weekday {self.start_weekday} outside 1-7")
        ids = [b.id for b in self.buildings]
        if len(set(ids)) != len(ids):
            raise DataError(f"duplicate building ids {ids}")
        for b in self.buildings:
            b.validate()
        hours = self.hours
        for b in self.buildings:
            if b.hours != hours:
                raise LengthMismatch(f"building {b.id} has {b.hours} hours, building {self.buildings[0].id} has {hours}")
        self.weather.validate(hours)
        return self


def month_blocks(hours):
    """Month index ranges: 730-hour blocks for a full year, 30-day blocks otherwise.

    The final block may be shorter than the others.
    """
    size = YEAR_MONTH_HOURS if hours == HOURS_PER_YEAR else MONTH_DAYS * 24
    return [(start, min(start + size, hours)) for start in range(0, hours, size)]


def storage_capacity(spec, kind):
    """Storage size in kWh: scaling factor times the peak demand it serves."""
    kind = StorageKind(kind)
    if kind is StorageKind.COOLING:
        factor, series = spec.cooling_storage_factor, spec.cooling_demand
    else:
        factor, series = spec.dhw_storage_factor, spec.dhw_demand
    if factor <= 0 or series is None:
        raise NoSuchStorage(f"building {spec.id} has no {kind.value} storage")
    return float(factor) * float(np.max(series))


# ---------------------------------------------------------------------------
# directory I/O


def _fmt(x):
    return format(float(x), ".10g")


def _parse_float(text, where):
    try:
        return float(text)
    except ValueError:
        raise SchemaMismatch(f"{where}: cannot parse {text!r} as a number") from None


def _read_csv(path, columns):
    if not path.is_file():
        raise MissingFile(f"missing {path}")
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != columns:
        got = rows[0] if rows else []
        raise SchemaMismatch(f"{path.name}: header {got} != expected {columns}")
    body = rows[1:]
    for i, row in enumerate(body):
        if len(row) != len(columns):
            raise SchemaMismatch(f"{path.name} row {i + 2}: {len(row)} fields, expected {len(columns)}")
        if row[0].strip() != str(i):
            raise SchemaMismatch(f"{path.name} row {i + 2}: hour_index {row[0]!r}, expected {i}")
    return body


def _column(body, j, path, optional=False):
    cells = [row[j].strip() for row in body]
    empty = [c == "" for c in cells]
    if optional and all(empty):
        return None
    if any(empty):
        raise SchemaMismatch(f"{path.name}: column {j} mixes empty and numeric values")
    return np.array([_parse_float(c, path.name) for c in cells], dtype=np.float64)


def _read_building(path, entry):
    body = _read_csv(path, BUILDING_COLUMNS)
    return BuildingSpec(
        id=int(entry["id"]),
        building_type=BuildingType(entry.get("type", "Commercial")),
        cooling_demand=_column(body, 1, path),
        dhw_demand=_column(body, 2, path, optional=True),
        non_shiftable_load=_column(body, 3, path),
        solar_gen_per_kw=_column(body, 4, path, optional=True),
        pv_kw=float(entry.get("pv_kw", 0.0)),
        cooling_storage_factor=float(entry.get("cooling_storage_factor", 0.0)),
        dhw_storage_factor=float(entry.get("dhw_storage_factor", 0.0)),
    )


def read_district_config(root):
    path = Path(root) / CONFIG_NAME
    if not path.is_file():
        raise MissingFile(f"missing {path}")
    with path.open("rb") as fh:
        try:
            return tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise SchemaMismatch(f"{path}: {exc}") from None


def load_dataset(root_path):
    """Load and validate a dataset directory."""
    root = Path(root_path)
    if not root.is_dir():
        raise MissingFile(f"dataset directory {root} does not exist")
    cfg = read_district_config(root)
    entries = cfg.get("buildings")
    if not entries:
        raise SchemaMismatch(f"{root / CONFIG_NAME}: no [[buildings]] entries")
    buildings = [_read_building(root / f"building_{int(e['id'])}.csv", e) for e in entries]
    body = _read_csv(root / WEATHER_NAME, WEATHER_COLUMNS)
    weather_path = root / WEATHER_NAME
    weather = WeatherSeries(t_out=_column(body, 1, weather_path), direct_solar_rad=_column(body, 2, weather_path))
    extra = {k: v for k, v in cfg.items() if isinstance(v, dict)}
    ds = Dataset(
        climate_zone_label=str(cfg.get("climate_zone_label", "")),
        buildings=buildings,
        weather=weather,
        start_month=int(cfg.get("start_month", 1)),
        start_weekday=int(cfg.get("start_weekday", 1)),
        extra=extra,
    )
    return ds.validate()


def _toml_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_csv(path, header, columns):
    n = len(columns[0])
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for t in range(n):
            w.writerow([t] + ["" if c is None else _fmt(c[t]) for c in columns[1:]])


def save_dataset(dataset, root_path):
    """Write ``dataset`` as a dataset directory (created if needed)."""
    dataset.validate()
    root = Path(root_path)
    root.mkdir(parents=True, exist_ok=True)
    lines = [
        f"climate_zone_label = {_toml_value(dataset.climate_zone_label)}",
        f"start_month = {dataset.start_month}",
        f"start_weekday = {dataset.start_weekday}",
        "",
    ]
    for b in dataset.buildings:
        lines += [
            "[[buildings]]",
            f"id = {b.id}",
            f"type = {_toml_value(b.building_type.value)}",
            f"cooling_storage_factor = {_toml_value(float(b.cooling_storage_factor))}",
            f"dhw_storage_factor = {_toml_value(float(b.dhw_storage_factor))}",
            f"pv_kw = {_toml_value(float(b.pv_kw))}",
            "",
        ]
    for name, table in dataset.extra.items():
        lines.append(f"[{name}]")
        lines += [f"{k} = {_toml_value(v)}" for k, v in table.items()]
        lines.append("")
    (root / CONFIG_NAME).write_text("\n".join(lines))
    hours = dataset.hours
    for b in dataset.buildings:
        _write_csv(
            root / f"building_{b.id}.csv",
            BUILDING_COLUMNS,
            [range(hours), b.cooling_demand, b.dhw_demand, b.non_shiftable_load, b.solar_gen_per_kw],
        )
    _write_csv(root / WEATHER_NAME, WEATHER_COLUMNS, [range(hours), dataset.weather.t_out, dataset.weather.direct_solar_rad])
    return root


# ---------------------------------------------------------------------------
# synthetic generator

# (type, cooling peak kWh, dhw peak kWh or None, non-shiftable base kWh,
#  cooling factor, dhw factor, pv kW); mirrors the nine-building design district
BUILDING_TEMPLATES = [
    (BuildingType.COMMERCIAL, 260.0, 12.0, 110.0, 3.0, 3.0, 120.0),
    (BuildingType.COMMERCIAL, 70.0, 30.0, 45.0, 3.0, 3.0, 0.0),
    (BuildingType.COMMERCIAL, 140.0, None, 70.0, 3.0, 0.0, 0.0),
    (BuildingType.COMMERCIAL, 120.0, None, 65.0, 3.0, 0.0, 40.0),
    (BuildingType.RESIDENTIAL, 90.0, 28.0, 35.0, 3.0, 3.0, 25.0),
    (BuildingType.RESIDENTIAL, 85.0, 26.0, 33.0, 3.0, 3.0, 20.0),
    (BuildingType.RESIDENTIAL, 95.0, 30.0, 36.0, 3.0, 3.0, 0.0),
    (BuildingType.RESIDENTIAL, 80.0, 24.0, 31.0, 3.0, 3.0, 0.0),
    (BuildingType.RESIDENTIAL, 88.0, 27.0, 34.0, 3.0, 3.0, 0.0),
]

# annual mean / seasonal amplitude / diurnal amplitude of t_out (deg C),
# clear-sky direct radiation peak (W/m2)
CLIMATES = {
    "1": (21.0, 7.0, 4.5, 850.0),
    "2": (17.0, 9.5, 5.5, 820.0),
    "3": (15.0, 11.5, 5.5, 800.0),
    "4": (10.0, 14.0, 5.0, 760.0),
}

_MONTH_START_DOY = [0, 31, 59, 90, 120, 151, 181, 212, 243, 273, 304, 334]


def _bump(hour, center, width):
    d = (hour - center + 12.0) % 24.0 - 12.0
    return np.exp(-0.5 * (d / width) ** 2)


def _ar1(rng, n, rho, sigma):
    e = rng.normal(0.0, sigma, size=n)
    out = np.empty(n)
    acc = 0.0
    for i in range(n):
        acc = rho * acc + e[i]
        out[i] = acc
    return out


def generate_synthetic(n_buildings, days, seed, *, climate="1", start_month=1, start_weekday=1, t_out_shift=0.0):
    """Deterministic synthetic district with the dataset schema.

    Buildings cycle through a nine-building template (office, restaurant,
    retail, strip mall, five multi-family residences). ``climate`` selects
    one of four temperature regimes ("1" hot ... "4" cold); ``t_out_shift``
    offsets the whole temperature series.
    """
    if n_buildings < 1:
        raise ValueError("n_buildings must be >= 1")
    if days < 2:
        raise ValueError("days must be >= 2")
    if climate not in CLIMATES:
        raise ValueError(f"unknown climate {climate!r}; choose from {sorted(CLIMATES)}")
    rng = np.random.default_rng(seed)
    t_mean, t_season, t_diurnal, rad_peak = CLIMATES[climate]
    hours = 24 * days
    t = np.arange(hours)
    hour = t % 24
    doy = (_MONTH_START_DOY[start_month - 1] + t / 24.0) % 365.0
    weekday = (start_weekday - 1 + t // 24) % 7  # 0..6, 5/6 = weekend

    season = np.cos(2 * np.pi * (doy - 200.0) / 365.0)
    t_out = (
        t_mean
        + t_season * season
        + t_diurnal * np.cos(2 * np.pi * (hour - 15.0) / 24.0)
        + _ar1(rng, hours, 0.97, 0.45)
    )
    t_out = np.round(t_out + t_out_shift, 2)

    # sun up 06:00-19:00, longer days in summer
    half_day = 6.5 + 1.5 * season
    sun = np.cos(np.pi * (hour + 0.5 - 12.5) / (2 * half_day))
    sun = np.where(np.abs(hour + 0.5 - 12.5) < half_day, np.clip(sun, 0.0, None), 0.0)
    daily_cloud = np.repeat(np.clip(rng.beta(5.0, 2.0, size=days), 0.05, 1.0), 24)
    direct = np.round(rad_peak * (0.8 + 0.2 * season) * sun * daily_cloud, 1)
    direct[direct < 1.0] = 0.0
    solar_per_kw = np.round(direct / 1000.0 * 0.85, 4)

    buildings = []
    for i in range(n_buildings):
        btype, cool_peak, dhw_peak, nsl_base, cfac, dfac, pv = BUILDING_TEMPLATES[i % len(BUILDING_TEMPLATES)]
        scale = float(np.exp(rng.normal(0.0, 0.1))) if i >= len(BUILDING_TEMPLATES) else 1.0
        if btype is BuildingType.COMMERCIAL:
            occ = np.where(weekday < 5, 1.0, 0.55) * (0.25 + 0.75 * _bump(hour, 14.0, 4.0))
        else:
            occ = 0.55 + 0.25 * _bump(hour, 8.0, 2.0) + 0.45 * _bump(hour, 19.5, 2.5)
        heat = np.clip((t_out - 12.0) / 20.0, 0.03, 1.6)
        diurnal = 1.0 + 0.5 * np.cos(2 * np.pi * (hour - 15.0) / 24.0)
        noise = 1.0 + rng.normal(0.0, 0.06, size=hours)
        cooling = cool_peak * scale * heat * diurnal * (0.6 + 0.4 * occ) * noise / 1.6
        cooling = np.round(np.clip(cooling, 0.0, None), 4)

        dhw = None
        if dhw_peak is not None:
            shape = 0.08 + _bump(hour, 7.5, 1.3) + 0.8 * _bump(hour, 19.0, 1.8)
            dhw = dhw_peak * scale * shape * (1.0 + rng.normal(0.0, 0.1, size=hours)) / 1.1
            dhw = np.round(np.clip(dhw, 0.0, None), 4)

        nsl = nsl_base * scale * (0.45 + 0.55 * occ) * (1.0 + rng.normal(0.0, 0.05, size=hours))
        nsl = np.round(np.clip(nsl, 0.0, None), 4)

        buildings.append(
            BuildingSpec(
                id=i + 1,
                building_type=btype,
                cooling_demand=cooling,
                dhw_demand=dhw,
                non_shiftable_load=nsl,
                solar_gen_per_kw=solar_per_kw.copy() if pv > 0 else None,
                pv_kw=pv,
                cooling_storage_factor=cfac,
                dhw_storage_factor=dfac if dhw is not None else 0.0,
            )
        )
    weather = WeatherSeries(t_out=t_out, direct_solar_rad=direct)
    return Dataset(
        climate_zone_label=climate,
        buildings=buildings,
        weather=weather,
        start_month=start_month,
        start_weekday=start_weekday,
    ).validate()
