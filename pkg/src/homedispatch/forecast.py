"""Day-ahead mean forecasts for PV and demand.

Real deployments would plug in learned forecasters here; these synthetic
providers keep the error level controllable, which is what the policy
benchmark actually needs.  Each provider yields one 24-value mean pair per
day; forecast noise comes from a generator the caller passes in, so the same
(seed, day) always gives the same forecast regardless of policy order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import DataError, Dataset
from .probability import HourlyStats
from .solar import GeoLocation, cos_zenith_day, day_of_year_index

# heuristic noise levels: demand is markedly harder to predict than PV
DEFAULT_ALPHA_GEN = 0.15
DEFAULT_ALPHA_DEM = 0.35


@dataclass(frozen=True)
class DayAheadForecast:
    gen_mean: np.ndarray  # kW, (24,)
    dem_mean: np.ndarray  # kW, (24,)

    def __post_init__(self) -> None:
        g = np.asarray(self.gen_mean, dtype=float)
        d = np.asarray(self.dem_mean, dtype=float)
        if g.shape != (24,) or d.shape != (24,):
            raise ValueError("forecasts carry 24 hourly values")
        if (g < 0).any() or (d < 0).any():
            raise ValueError("forecast values must be nonnegative")
        object.__setattr__(self, "gen_mean", g)
        object.__setattr__(self, "dem_mean", d)


def _day_arrays(dataset: Dataset, date: np.datetime64) -> tuple[np.ndarray, np.ndarray]:
    idx = dataset.day_index(date)
    return dataset.pv_kw[idx].copy(), dataset.demand_kw[idx].copy()


def _night_mask(gen: np.ndarray, loc: GeoLocation, date: np.datetime64) -> np.ndarray:
    doy = int(day_of_year_index(np.array([np.datetime64(date, "h")]))[0])
    gen = gen.copy()
    gen[cos_zenith_day(loc, doy) <= 0.0] = 0.0
    return gen


class Oracle:
    """Returns the actual day: the perfect-information provider."""

    def __init__(self, loc: GeoLocation):
        self.loc = loc

    def forecast(self, dataset: Dataset, date: np.datetime64,
                 rng: np.random.Generator | None = None) -> DayAheadForecast:
        gen, dem = _day_arrays(dataset, date)
        return DayAheadForecast(_night_mask(gen, self.loc, date), dem)


class NoisyOracle:
    """Actuals plus clipped Gaussian noise scaled by each hour's history spread.

    The hour-h error is N(0, (alpha * sigma_h)^2) with sigma_h the historical
    standard deviation of that hour in raw kW, so noise is largest where the
    data genuinely varies.
    """

    def __init__(self, loc: GeoLocation, gen_stats: HourlyStats, dem_stats: HourlyStats,
                 alpha_gen: float = DEFAULT_ALPHA_GEN,
                 alpha_dem: float = DEFAULT_ALPHA_DEM):
        if alpha_gen < 0 or alpha_dem < 0:
            raise ValueError("noise scales must be nonnegative")
        self.loc = loc
        self.gen_sigma = gen_stats.sigma
        self.dem_sigma = dem_stats.sigma
        self.alpha_gen = float(alpha_gen)
        self.alpha_dem = float(alpha_dem)

    def forecast(self, dataset: Dataset, date: np.datetime64,
                 rng: np.random.Generator | None = None) -> DayAheadForecast:
        if rng is None:
            raise ValueError("NoisyOracle needs a random generator")
        gen, dem = _day_arrays(dataset, date)
        gen = np.maximum(0.0, gen + self.alpha_gen * self.gen_sigma * rng.standard_normal(24))
        dem = np.maximum(0.0, dem + self.alpha_dem * self.dem_sigma * rng.standard_normal(24))
        return DayAheadForecast(_night_mask(gen, self.loc, date), dem)


class Persistence:
    """Yesterday repeats: the classic no-skill baseline."""

    def __init__(self, loc: GeoLocation):
        self.loc = loc

    def forecast(self, dataset: Dataset, date: np.datetime64,
                 rng: np.random.Generator | None = None) -> DayAheadForecast:
        prev = np.datetime64(date, "D") - np.timedelta64(1, "D")
        try:
            gen, dem = _day_arrays(dataset, prev)
        except DataError:
            raise DataError(f"persistence forecast for {date} needs day {prev}") from None
        return DayAheadForecast(_night_mask(gen, self.loc, date), dem)
