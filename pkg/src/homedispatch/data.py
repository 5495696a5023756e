"""Hourly dataset: ingestion, validation, and the bundled synthetic series.

The on-disk format is a single CSV with five columns: timestamp (UTC,
ISO-8601), demand_kw, pv_kw, tou_imp_eur_kwh, tou_exp_eur_kwh.  Tariffs ride
along as data columns so one file fully specifies a simulation.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import (
    STREAM_SYNTH_DEM,
    STREAM_SYNTH_PV,
    PlantConfig,
    TariffDay,
    spawn_rng,
)
from .solar import GeoLocation, clear_sky_power, day_of_year_index

COLUMNS = ("timestamp", "demand_kw", "pv_kw", "tou_imp_eur_kwh", "tou_exp_eur_kwh")

_HOUR = np.timedelta64(1, "h")


class DataError(ValueError):
    """Malformed or inconsistent input data."""


@dataclass(frozen=True)
class Dataset:
    """Aligned hourly series; timestamps are naive UTC at hour resolution."""

    timestamps: np.ndarray   # datetime64[h], strictly increasing, gap-free
    demand_kw: np.ndarray
    pv_kw: np.ndarray
    tou_imp: np.ndarray      # EUR/kWh
    tou_exp: np.ndarray      # EUR/kWh

    def __post_init__(self) -> None:
        ts = np.asarray(self.timestamps, dtype="datetime64[h]")
        n = ts.size
        if n == 0:
            raise DataError("dataset is empty")
        series = {}
        for name in ("demand_kw", "pv_kw", "tou_imp", "tou_exp"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != (n,):
                raise DataError(f"{name} length {v.shape} does not match timestamps")
            if not np.all(np.isfinite(v)):
                raise DataError(f"{name} contains non-finite values")
            if (v < 0).any():
                bad = int(np.argmax(v < 0))
                raise DataError(f"negative {name} at {ts[bad]}")
            series[name] = v
        steps = np.diff(ts)
        if (steps <= np.timedelta64(0, "h")).any():
            bad = int(np.argmax(steps <= np.timedelta64(0, "h")))
            raise DataError(f"non-increasing timestamp at {ts[bad + 1]}")
        if (steps != _HOUR).any():
            bad = int(np.argmax(steps != _HOUR))
            raise DataError(f"gap after {ts[bad]}")
        object.__setattr__(self, "timestamps", ts)
        for name, v in series.items():
            object.__setattr__(self, name, v)

    @property
    def n_hours(self) -> int:
        return self.timestamps.size

    def dates(self) -> np.ndarray:
        """Distinct calendar days fully covered (00:00 through 23:00)."""
        days = self.timestamps.astype("datetime64[D]")
        uniq, counts = np.unique(days, return_counts=True)
        return uniq[counts == 24]

    def day_index(self, date: np.datetime64) -> np.ndarray:
        """Row indices of the 24 hours of `date`; DataError when incomplete."""
        d0 = np.datetime64(date, "h")
        i0 = int(np.searchsorted(self.timestamps, d0))
        if (i0 + 24 > self.n_hours or self.timestamps[i0] != d0
                or self.timestamps[i0 + 23] != d0 + 23 * _HOUR):
            raise DataError(f"day {date} is not fully present")
        return np.arange(i0, i0 + 24)

    def day_tariffs(self, date: np.datetime64) -> TariffDay:
        idx = self.day_index(date)
        return TariffDay(self.tou_imp[idx], self.tou_exp[idx])

    def slice_hours(self, idx: np.ndarray) -> "Dataset":
        return Dataset(self.timestamps[idx], self.demand_kw[idx],
                       self.pv_kw[idx], self.tou_imp[idx], self.tou_exp[idx])


def _parse_timestamp(raw: str, row: int) -> np.datetime64:
    s = raw.strip()
    if s.endswith("Z"):
        s = s[:-1]
    try:
        ts = np.datetime64(s)
    except ValueError:
        raise DataError(f"row {row}: bad timestamp {raw!r}") from None
    whole_hour = np.datetime64(ts, "h")
    if np.datetime64(ts, "s") != np.datetime64(whole_hour, "s"):
        raise DataError(f"row {row}: timestamp {raw!r} not on the hour")
    return whole_hour


def ingest(source) -> Dataset:
    """Read and validate one dataset CSV from a path or open text stream.

    Errors carry the offending row number or timestamp.
    """
    if hasattr(source, "read"):
        return _ingest_stream(source, getattr(source, "name", "<stream>"))
    with open(Path(source), newline="") as fh:
        return _ingest_stream(fh, str(source))


def _ingest_stream(fh, label: str) -> Dataset:
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        raise DataError(f"{label}: empty file") from None
    if tuple(h.strip() for h in header) != COLUMNS:
        raise DataError(f"{label}: header {header} does not match {list(COLUMNS)}")
    ts_list, rows = [], []
    for row_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(COLUMNS):
            raise DataError(f"row {row_no}: expected {len(COLUMNS)} fields, got {len(row)}")
        ts_list.append(_parse_timestamp(row[0], row_no))
        try:
            rows.append([float(v) for v in row[1:]])
        except ValueError:
            raise DataError(f"row {row_no}: non-numeric value in {row[1:]}") from None
    if not rows:
        raise DataError(f"{label}: no data rows")
    ts = np.array(ts_list, dtype="datetime64[h]")
    dup = np.nonzero(np.diff(ts) == np.timedelta64(0, "h"))[0]
    if dup.size:
        raise DataError(f"duplicated timestamp {ts[dup[0]]}")
    vals = np.array(rows, dtype=float)
    return Dataset(ts, vals[:, 0], vals[:, 1], vals[:, 2], vals[:, 3])


def write_csv(dataset: Dataset, target) -> None:
    """Write the dataset to a path or open text stream."""
    if hasattr(target, "write"):
        _write_stream(dataset, target)
    else:
        with open(target, "w", newline="") as fh:
            _write_stream(dataset, fh)


def _write_stream(dataset: Dataset, fh) -> None:
    # shortest-round-trip float formatting so ingest(write_csv(ds)) == ds
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(COLUMNS)
    for i in range(dataset.n_hours):
        w.writerow([
            f"{np.datetime_as_string(dataset.timestamps[i], unit='h')}:00:00Z",
            repr(float(dataset.demand_kw[i])),
            repr(float(dataset.pv_kw[i])),
            repr(float(dataset.tou_imp[i])),
            repr(float(dataset.tou_exp[i])),
        ])


# -- bundled synthetic dataset ------------------------------------------------

SYNTH_START = np.datetime64("2023-07-01", "D")
SYNTH_DAYS = 120          # 90 history + 30 evaluation
EVAL_DAYS = 30


def default_tariffs() -> tuple[np.ndarray, np.ndarray]:
    """Hour-of-day import/export price profiles."""
    h = np.arange(24)
    imp = np.where(h < 6, 0.10, np.where((h >= 17) & (h < 20), 0.32, 0.18))
    exp = np.full(24, 0.06)
    return imp.astype(float), exp


def synthetic_dataset(seed: int = 42, plant: PlantConfig | None = None,
                      loc: GeoLocation | None = None,
                      n_days: int = SYNTH_DAYS) -> Dataset:
    """Deterministic single-building series over a summer-into-autumn window.

    PV is the clear-sky profile scaled by an AR(1) daily clearness state with
    hourly texture noise; demand has morning and evening peaks with weekday
    scaling.  The evaluation window sits in autumn, where clear-sky peaks
    stay below the grid connection limit, so day-ahead plans can always
    route the whole PV output.
    """
    plant = plant or PlantConfig()
    loc = loc or GeoLocation(51.5, -0.1)
    rng_pv = spawn_rng(seed, STREAM_SYNTH_PV)
    rng_dem = spawn_rng(seed, STREAM_SYNTH_DEM)

    n = n_days * 24
    ts = np.datetime64(SYNTH_START, "h") + np.arange(n) * _HOUR
    doy = day_of_year_index(ts)
    hour = (ts - ts.astype("datetime64[D]")).astype(int)

    clear = np.array([
        clear_sky_power(loc, plant, int(doy[i]), int(hour[i]))
        for i in range(n)
    ])

    # daily clearness: AR(1) around 0.55, clipped to [0.08, 1]
    k = np.empty(n_days)
    state = 0.55
    for d in range(n_days):
        state = 0.7 * state + 0.3 * (0.55 + 0.45 * rng_pv.standard_normal())
        k[d] = np.clip(state, 0.08, 1.0)
    texture = np.clip(1.0 + 0.12 * rng_pv.standard_normal(n), 0.5, 1.0)
    pv = clear * np.repeat(k, 24) * texture

    base = np.array([0.35, 0.30, 0.28, 0.28, 0.30, 0.40,
                     0.70, 1.10, 1.20, 0.90, 0.70, 0.65,
                     0.70, 0.65, 0.60, 0.70, 1.00, 1.60,
                     2.10, 2.20, 1.80, 1.30, 0.80, 0.50])
    weekday = ts.astype("datetime64[D]").astype(int) % 7  # 0 = Saturday for 2023-07-01
    wk_scale = np.where(weekday < 2, 1.15, 1.0)           # weekend bump
    noise = np.clip(1.0 + 0.25 * rng_dem.standard_normal(n), 0.3, 2.2)
    dem = base[hour] * wk_scale * noise

    imp_prof, exp_prof = default_tariffs()
    return Dataset(ts, dem, pv, imp_prof[hour], exp_prof[hour])


def eval_window(dataset: Dataset, n_eval: int = EVAL_DAYS) -> tuple[np.ndarray, np.ndarray]:
    """(history_dates, eval_dates): the last n_eval full days are evaluated."""
    dates = dataset.dates()
    if dates.size <= n_eval:
        raise DataError(f"need more than {n_eval} full days, have {dates.size}")
    return dates[:-n_eval], dates[-n_eval:]
