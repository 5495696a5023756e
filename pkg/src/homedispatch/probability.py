"""Per-hour discrete probability distributions over power bins.

Two sources feed each distribution: the empirical history of the quantity,
clustered by hour of day, and a truncated Gaussian centered on the day-ahead
forecast.  A convex blend of the two gives the total matrix that scenario
generation consumes.  PV matrices live in the normalized [0, 1] class space
induced by the clear-sky envelope so that records from different seasons land
on a common scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .solar import PvEnvelope, day_of_year_index

NIGHT_EPS = 1e-6  # kW; envelope spans below this are treated as night

HOURS = 24


@dataclass(frozen=True)
class RangeSpec:
    """Value range [lo, hi] divided into `bins` equal sections."""

    lo: float
    hi: float
    bins: int = 100

    def __post_init__(self) -> None:
        if not self.lo < self.hi:
            raise ValueError("require lo < hi")
        if self.bins < 2:
            raise ValueError("require bins >= 2")

    @property
    def width(self) -> float:
        return (self.hi - self.lo) / self.bins

    def bin_of(self, x: np.ndarray | float) -> np.ndarray:
        """Bin index of a value, clamped to [0, bins-1]."""
        idx = np.floor((np.asarray(x, dtype=float) - self.lo) / self.width)
        return np.clip(idx, 0, self.bins - 1).astype(int)

    def midpoints(self) -> np.ndarray:
        return self.lo + (np.arange(self.bins) + 0.5) * self.width

    def edges(self) -> np.ndarray:
        e = self.lo + np.arange(self.bins + 1) * self.width
        e[-1] = self.hi  # exact endpoint regardless of rounding
        return e


UNIT_RANGE = RangeSpec(0.0, 1.0, 100)


@dataclass(frozen=True)
class HourlyStats:
    """Sample mean and standard deviation per hour of day."""

    mean: np.ndarray   # shape (24,)
    sigma: np.ndarray  # shape (24,)

    def __post_init__(self) -> None:
        if self.mean.shape != (HOURS,) or self.sigma.shape != (HOURS,):
            raise ValueError("stats arrays must have 24 entries")
        if (self.sigma < 0).any():
            raise ValueError("sigma must be nonnegative")


@dataclass(frozen=True)
class ProbabilityMatrix:
    """R x 24 column-stochastic matrix; column h is the distribution at hour h."""

    values: np.ndarray
    kind: str       # forecast | historical | total
    quantity: str   # generation | demand
    range: RangeSpec

    def __post_init__(self) -> None:
        v = self.values
        if v.shape != (self.range.bins, HOURS):
            raise ValueError("matrix shape must be (bins, 24)")
        if (v < 0).any():
            raise ValueError("probabilities must be nonnegative")
        colsums = v.sum(axis=0)
        if np.max(np.abs(colsums - 1.0)) > 1e-9:
            raise ValueError("every column must sum to 1 within 1e-9")
        if self.kind not in ("forecast", "historical", "total"):
            raise ValueError(f"unknown kind {self.kind!r}")
        if self.quantity not in ("generation", "demand"):
            raise ValueError(f"unknown quantity {self.quantity!r}")

    def column_mean(self) -> np.ndarray:
        """Expected value per hour under the bin-midpoint representative."""
        return self.range.midpoints() @ self.values

    def column_std(self) -> np.ndarray:
        mids = self.range.midpoints()
        m1 = mids @ self.values
        m2 = (mids ** 2) @ self.values
        return np.sqrt(np.maximum(m2 - m1 ** 2, 0.0))


def hourly_stats(
    timestamps: np.ndarray, values: np.ndarray, sigma_floor: float = 0.0
) -> HourlyStats:
    """Sample mean and standard deviation of a series per hour of day.

    Requires at least two samples for every hour.  `sigma_floor` lifts
    degenerate standard deviations (e.g. of a constant series) to a usable
    minimum; pass one bin width when the stats feed a Gaussian discretizer.
    """
    ts = np.asarray(timestamps, dtype="datetime64[h]")
    x = np.asarray(values, dtype=float)
    hours = (ts - ts.astype("datetime64[D]")).astype(int)
    mean = np.empty(HOURS)
    sigma = np.empty(HOURS)
    for h in range(HOURS):
        xs = x[hours == h]
        if xs.size < 2:
            raise ValueError(f"need >= 2 samples for hour {h}, got {xs.size}")
        mean[h] = xs.mean()
        sigma[h] = xs.std(ddof=1)
    sigma = np.maximum(sigma, float(sigma_floor))
    return HourlyStats(mean=mean, sigma=sigma)


def truncated_gaussian_column(mean: float, sigma: float, rng: RangeSpec) -> np.ndarray:
    """Bin probabilities of a Gaussian truncated to [lo, hi].

    Probability of a bin is the normal CDF difference across its edges,
    renormalized by the total mass inside the range.
    """
    sd = max(float(sigma), rng.width)  # degenerate-variance guard
    edges = rng.edges()
    cdf = ndtr((edges - mean) / sd)
    p = np.diff(cdf)
    total = p.sum()
    if total < 1e-300:  # mean far outside the range; snap to the nearest bin
        p = np.zeros(rng.bins)
        p[rng.bin_of(np.clip(mean, rng.lo, rng.hi))] = 1.0
        return p
    return p / total


def forecast_matrix(
    forecast: np.ndarray, stats: HourlyStats, rng: RangeSpec, quantity: str
) -> ProbabilityMatrix:
    """Gaussian forecast distribution per hour, truncated to the range.

    The hour-h column is a Gaussian with mean forecast[h] (clamped into the
    range) and the historical standard deviation of that hour, floored at one
    bin width.
    """
    f = np.clip(np.asarray(forecast, dtype=float), rng.lo, rng.hi)
    if f.shape != (HOURS,):
        raise ValueError("forecast must have 24 values")
    cols = np.empty((rng.bins, HOURS))
    for h in range(HOURS):
        cols[:, h] = truncated_gaussian_column(f[h], stats.sigma[h], rng)
    return ProbabilityMatrix(values=cols, kind="forecast", quantity=quantity, range=rng)


def historical_demand_matrix(
    timestamps: np.ndarray, demand_kw: np.ndarray, rng: RangeSpec
) -> ProbabilityMatrix:
    """Empirical per-hour frequency of demand samples over the bins."""
    ts = np.asarray(timestamps, dtype="datetime64[h]")
    x = np.asarray(demand_kw, dtype=float)
    if ts.size == 0:
        raise ValueError("history must be non-empty")
    hours = (ts - ts.astype("datetime64[D]")).astype(int)
    bins = rng.bin_of(x)
    counts = np.zeros((rng.bins, HOURS))
    np.add.at(counts, (bins, hours), 1.0)
    col_tot = counts.sum(axis=0)
    if (col_tot == 0).any():
        missing = int(np.argmin(col_tot))
        raise ValueError(f"no demand samples at hour {missing}")
    return ProbabilityMatrix(
        values=counts / col_tot, kind="historical", quantity="demand", range=rng
    )


def historical_pv_matrix(
    timestamps: np.ndarray,
    pv_kw: np.ndarray,
    env: PvEnvelope,
    n_bins: int = 100,
) -> ProbabilityMatrix:
    """Empirical PV distribution in envelope-normalized class space.

    Each daytime sample maps to class floor(R * (x - p_min) / (p_max - p_min))
    for its own day's envelope; classes sharing an hour label aggregate across
    all days.  Hours where every sample is night become a point mass at class
    0, which keeps the column stochastic.
    """
    ts = np.asarray(timestamps, dtype="datetime64[h]")
    x = np.asarray(pv_kw, dtype=float)
    rng = RangeSpec(0.0, 1.0, n_bins)
    doy = day_of_year_index(ts)
    hours = (ts - ts.astype("datetime64[D]")).astype(int)
    p_min = env.p_min[doy, hours]
    span = env.p_max[doy, hours] - p_min
    day_mask = span > NIGHT_EPS
    counts = np.zeros((n_bins, HOURS))
    if day_mask.any():
        cls = np.floor(n_bins * (x[day_mask] - p_min[day_mask]) / span[day_mask])
        cls = np.clip(cls, 0, n_bins - 1).astype(int)
        np.add.at(counts, (cls, hours[day_mask]), 1.0)
    col_tot = counts.sum(axis=0)
    night_cols = col_tot == 0
    counts[0, night_cols] = 1.0
    col_tot[night_cols] = 1.0
    return ProbabilityMatrix(
        values=counts / col_tot, kind="historical", quantity="generation", range=rng
    )


def normalized_pv_series(
    timestamps: np.ndarray, pv_kw: np.ndarray, env: PvEnvelope
) -> tuple[np.ndarray, np.ndarray]:
    """(hour-of-day, normalized value) pairs of the daytime PV samples."""
    ts = np.asarray(timestamps, dtype="datetime64[h]")
    x = np.asarray(pv_kw, dtype=float)
    doy = day_of_year_index(ts)
    hours = (ts - ts.astype("datetime64[D]")).astype(int)
    p_min = env.p_min[doy, hours]
    span = env.p_max[doy, hours] - p_min
    mask = span > NIGHT_EPS
    v = np.clip((x[mask] - p_min[mask]) / span[mask], 0.0, 1.0)
    return hours[mask], v


def normalized_pv_stats(
    timestamps: np.ndarray, pv_kw: np.ndarray, env: PvEnvelope, n_bins: int = 100
) -> HourlyStats:
    """Per-hour stats of envelope-normalized PV; sample-free hours get mean 0.

    Sigma is floored at one bin width everywhere, so the result is directly
    usable by forecast_matrix on the unit range.
    """
    hours, v = normalized_pv_series(timestamps, pv_kw, env)
    floor = 1.0 / n_bins
    mean = np.zeros(HOURS)
    sigma = np.full(HOURS, floor)
    for h in range(HOURS):
        vs = v[hours == h]
        if vs.size >= 2:
            mean[h] = vs.mean()
            sigma[h] = max(vs.std(ddof=1), floor)
        elif vs.size == 1:
            mean[h] = vs[0]
    return HourlyStats(mean=mean, sigma=sigma)


def combine(f: ProbabilityMatrix, h: ProbabilityMatrix, weight: float = 0.5) -> ProbabilityMatrix:
    """Convex blend weight*f + (1-weight)*h of forecast and historical matrices."""
    if not (0.0 <= weight <= 1.0):
        raise ValueError("weight must be in [0, 1]")
    if f.quantity != h.quantity:
        raise ValueError("cannot combine matrices of different quantities")
    if f.range != h.range:
        raise ValueError("cannot combine matrices over different ranges")
    values = weight * f.values + (1.0 - weight) * h.values
    return ProbabilityMatrix(values=values, kind="total", quantity=f.quantity, range=f.range)


def matrix_to_csv(matrix: ProbabilityMatrix, path) -> None:
    """Write the matrix as R rows x 24 columns with an hour header."""
    header = ",".join(str(h) for h in range(HOURS))
    rows = [",".join(f"{v:.12g}" for v in row) for row in matrix.values]
    with open(path, "w", newline="") as fh:
        fh.write(header + "\n")
        fh.write("\n".join(rows) + "\n")
