"""Sun position, clear-sky irradiance and the feasible PV envelope.

The envelope gives, for every (day of year, hour), the theoretical maximum PV
output from clear-sky geometry and the lowest output recorded in a +-30 day
window around that day.  Normalizing PV records against this envelope removes
the seasonal trend, so records from different months become comparable.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from .config import PlantConfig

log = logging.getLogger(__name__)

ENVELOPE_WINDOW_DAYS = 30
MIN_HISTORY_DAYS = 61


@dataclass(frozen=True)
class GeoLocation:
    """Site coordinates in degrees."""

    latitude: float
    longitude: float

    def __post_init__(self) -> None:
        if not (-90.0 <= self.latitude <= 90.0):
            raise ValueError("latitude outside [-90, 90]")
        if not (-180.0 <= self.longitude <= 180.0):
            raise ValueError("longitude outside [-180, 180]")


@dataclass(frozen=True)
class SolarPosition:
    declination: float  # degrees
    hour_angle: float   # degrees
    cos_zenith: float


@dataclass(frozen=True)
class PvEnvelope:
    """Feasible PV band per (day_of_year 1..366, hour 0..23), both in kW.

    Arrays are indexed [day_of_year, hour]; row 0 is unused padding.
    """

    p_max: np.ndarray  # shape (367, 24)
    p_min: np.ndarray  # shape (367, 24)

    def __post_init__(self) -> None:
        if self.p_max.shape != (367, 24) or self.p_min.shape != (367, 24):
            raise ValueError("envelope arrays must have shape (367, 24)")

    def span(self, day_of_year: int) -> np.ndarray:
        return self.p_max[day_of_year] - self.p_min[day_of_year]


def solar_position(loc: GeoLocation, day_of_year: int, hour_of_day: int) -> SolarPosition:
    """Sun position from the sinusoidal declination approximation.

    Parameters
    ----------
    loc : GeoLocation
    day_of_year : int in [1, 366]
    hour_of_day : int in [0, 23], treated as local solar time

    Returns
    -------
    SolarPosition
        declination delta = 23.45 * sin(360 * (284 + n) / 365) degrees,
        hour angle omega = 15 * (h - 12) degrees, and
        cos(zenith) = sin(phi) sin(delta) + cos(phi) cos(delta) cos(omega).
    """
    if not (1 <= int(day_of_year) <= 366):
        raise ValueError("day_of_year outside [1, 366]")
    if not (0 <= int(hour_of_day) <= 23):
        raise ValueError("hour_of_day outside [0, 23]")
    n = int(day_of_year)
    decl = 23.45 * math.sin(math.radians(360.0 * (284 + n) / 365.0))
    omega = 15.0 * (int(hour_of_day) - 12)
    phi = math.radians(loc.latitude)
    d = math.radians(decl)
    w = math.radians(omega)
    cz = math.sin(phi) * math.sin(d) + math.cos(phi) * math.cos(d) * math.cos(w)
    return SolarPosition(declination=decl, hour_angle=omega, cos_zenith=cz)


def cos_zenith_day(loc: GeoLocation, day_of_year: int) -> np.ndarray:
    """cos(zenith) for all 24 hours of one day."""
    return np.array(
        [solar_position(loc, day_of_year, h).cos_zenith for h in range(24)]
    )


def clear_sky_ghi(pos: SolarPosition) -> float:
    """Haurwitz global horizontal irradiance in W/m^2.

    Zero whenever the sun is at or below the horizon.
    """
    cz = pos.cos_zenith
    if cz <= 0.0:
        return 0.0
    return 1098.0 * cz * math.exp(-0.057 / cz)


def pv_power_from_ghi(ghi: float, plant: "PlantConfig") -> float:
    """Convert irradiance to AC PV power with a single derate factor."""
    if ghi < 0.0:
        raise ValueError("ghi must be >= 0")
    return min(plant.pv_stc * (ghi / 1000.0) * plant.pv_derate, plant.p_pv_max)


def clear_sky_power(loc: GeoLocation, plant: "PlantConfig", day_of_year: int, hour: int) -> float:
    return pv_power_from_ghi(clear_sky_ghi(solar_position(loc, day_of_year, hour)), plant)


def day_of_year_index(timestamps: np.ndarray) -> np.ndarray:
    """Day-of-year (1..366) for an array of datetime64 timestamps."""
    ts = np.asarray(timestamps, dtype="datetime64[h]")
    days = ts.astype("datetime64[D]")
    years = days.astype("datetime64[Y]")
    return (days - years).astype(int) + 1


def build_envelope(
    timestamps: np.ndarray,
    pv_kw: np.ndarray,
    loc: GeoLocation,
    plant: "PlantConfig",
) -> PvEnvelope:
    """Build the feasible PV band from hourly history.

    p_max is purely geometric (clear-sky power), so it exists for every day of
    the year.  p_min[d, h] is the lowest recorded value at hour h over the
    days d-30 .. d+30 that are present in the history; the window wraps across
    the year boundary.  Observations above p_max are clamped to p_max, with a
    single summary warning.
    """
    ts = np.asarray(timestamps, dtype="datetime64[h]")
    pv = np.asarray(pv_kw, dtype=float).copy()
    if ts.shape != pv.shape:
        raise ValueError("timestamps and pv series must be aligned")
    if len(ts) < MIN_HISTORY_DAYS * 24:
        raise ValueError(f"need at least {MIN_HISTORY_DAYS} days of hourly history")
    steps = np.diff(ts).astype(int)
    if not np.all(steps == 1):
        raise ValueError("history must be hourly with no gaps")

    p_max = np.zeros((367, 24))
    for d in range(1, 367):
        for h in range(24):
            p_max[d, h] = clear_sky_power(loc, plant, d, h)

    doy = day_of_year_index(ts)
    hours = (ts - ts.astype("datetime64[D]")).astype(int)

    # Clamp sensor spikes above the theoretical maximum.
    limit = p_max[doy, hours]
    over = pv > limit + 1e-12
    if over.any():
        log.warning(
            "%d PV observations exceed the clear-sky maximum; clamped", int(over.sum())
        )
        pv = np.minimum(pv, limit)

    # Per (day-of-year, hour) minimum of the recorded values.
    rec_min = np.full((367, 24), np.inf)
    np.minimum.at(rec_min, (doy, hours), pv)

    covered = np.isfinite(rec_min).any(axis=1)
    p_min = np.zeros((367, 24))
    for d in range(1, 367):
        lo = d - ENVELOPE_WINDOW_DAYS
        window = (np.arange(lo, d + ENVELOPE_WINDOW_DAYS + 1) - 1) % 366 + 1
        window = window[covered[window]]
        if window.size == 0:
            continue  # day far outside coverage; p_min stays 0
        w_min = np.min(np.where(np.isfinite(rec_min[window]), rec_min[window], np.inf), axis=0)
        p_min[d] = np.where(np.isfinite(w_min), w_min, 0.0)

    p_min = np.minimum(p_min, p_max)
    return PvEnvelope(p_max=p_max, p_min=p_min)
