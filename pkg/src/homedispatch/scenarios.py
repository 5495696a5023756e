"""Stratified scenario generation from total probability matrices.

Each scenario is a paired 24-hour (generation, demand) trajectory.  Sampling
is stratified: the [0, 1] probability axis is split into S equal slices, one
uniform draw lands in each slice, and the per-hour CDF is inverted onto bin
midpoints.  A scenario keeps the same stratum index at every hour, which
produces coherent percentile bands instead of hour-to-hour jitter; a shuffled
variant is available behind a flag.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .probability import HOURS, ProbabilityMatrix, RangeSpec
from .solar import GeoLocation, PvEnvelope, cos_zenith_day


@dataclass(frozen=True)
class HourCdf:
    """Cumulative distribution over one hour's bins; edges[k] = P(bin < k)."""

    edges: np.ndarray  # shape (bins + 1,), edges[0] = 0, edges[-1] = 1
    range: RangeSpec

    def __post_init__(self) -> None:
        e = self.edges
        if e.shape != (self.range.bins + 1,):
            raise ValueError("edges must have bins + 1 entries")
        if e[0] != 0.0 or e[-1] != 1.0:
            raise ValueError("CDF endpoints must be exactly 0 and 1")
        if (np.diff(e) < -1e-12).any():
            raise ValueError("CDF must be nondecreasing")


@dataclass(frozen=True)
class ScenarioSet:
    """gen[s, h] and dem[s, h] profiles with per-scenario probabilities.

    The generation pipeline always produces 24-hour scenarios; shorter
    horizons are permitted so dispatch toys stay cheap to cross-check.
    """

    gen: np.ndarray    # shape (S, H)
    dem: np.ndarray    # shape (S, H)
    probs: np.ndarray  # shape (S,)

    def __post_init__(self) -> None:
        s = self.probs.shape[0]
        if self.gen.ndim != 2 or self.gen.shape[0] != s or self.gen.shape[1] < 1:
            raise ValueError("gen must be a (S, H) array")
        if self.dem.shape != self.gen.shape:
            raise ValueError("dem must match gen's shape")
        if (self.probs < 0).any():
            raise ValueError("probabilities must be nonnegative")

    @property
    def n_scenarios(self) -> int:
        return int(self.probs.shape[0])

    @property
    def n_hours(self) -> int:
        return int(self.gen.shape[1])


def build_cdf(column: np.ndarray, rng: RangeSpec) -> HourCdf:
    """Prefix sums of one probability column, with the last edge snapped to 1."""
    col = np.asarray(column, dtype=float)
    if col.shape != (rng.bins,):
        raise ValueError("column length must equal the number of bins")
    if abs(col.sum() - 1.0) > 1e-9 or (col < 0).any():
        raise ValueError("column is not a probability distribution")
    edges = np.empty(rng.bins + 1)
    edges[0] = 0.0
    np.cumsum(col, out=edges[1:])
    edges[-1] = 1.0
    return HourCdf(edges=edges, range=rng)


def sample_stratified(cdf: HourCdf, n_samples: int, rng: np.random.Generator) -> np.ndarray:
    """One inverse-CDF draw per equal probability slice, on bin midpoints.

    Stratum s draws u ~ Uniform((s-1)/S, s/S) and maps to the first bin whose
    upper CDF edge reaches u.  Results are nondecreasing in the stratum index.
    """
    if n_samples < 1:
        raise ValueError("need at least one sample")
    s = np.arange(n_samples)
    u = (s + rng.uniform(size=n_samples)) / n_samples
    u = np.maximum(u, 1e-12)  # a draw of exactly 0 would skip zero-mass bins
    # first bin with upper edge >= u
    idx = np.searchsorted(cdf.edges[1:], u, side="left")
    idx = np.minimum(idx, cdf.range.bins - 1)
    return cdf.range.midpoints()[idx]


def generate(
    gen_matrix: ProbabilityMatrix,
    dem_matrix: ProbabilityMatrix,
    n_samples: int,
    rng: np.random.Generator,
    shuffle_strata: bool = False,
) -> ScenarioSet:
    """Draw S paired scenarios from the two total matrices.

    The stratum index is shared between all hours of a scenario (and between
    its generation and demand components); `shuffle_strata` re-permutes the
    strata independently per hour and per quantity instead.
    """
    for m in (gen_matrix, dem_matrix):
        if m.kind != "total":
            raise ValueError("scenario generation expects total-kind matrices")
    gen = np.empty((n_samples, HOURS))
    dem = np.empty((n_samples, HOURS))
    for h in range(HOURS):
        g = sample_stratified(build_cdf(gen_matrix.values[:, h], gen_matrix.range), n_samples, rng)
        d = sample_stratified(build_cdf(dem_matrix.values[:, h], dem_matrix.range), n_samples, rng)
        if shuffle_strata:
            g = g[rng.permutation(n_samples)]
            d = d[rng.permutation(n_samples)]
        gen[:, h] = g
        dem[:, h] = d
    probs = np.full(n_samples, 1.0 / n_samples)
    return ScenarioSet(gen=gen, dem=dem, probs=probs)


def score(
    scen: ScenarioSet, gen_matrix: ProbabilityMatrix, dem_matrix: ProbabilityMatrix
) -> np.ndarray:
    """Scenario probabilities: mean over hours of the gen x dem pair probability.

    The per-hour pair probability is the product of the two matrix entries at
    the sampled bins; the scenario score accumulates these across the day and
    divides by 24 (mean, not product, so a single zero hour only removes its
    own term).
    """
    g_bins = gen_matrix.range.bin_of(scen.gen)
    d_bins = dem_matrix.range.bin_of(scen.dem)
    hours = np.arange(HOURS)
    p_gen = gen_matrix.values[g_bins, hours]
    p_dem = dem_matrix.values[d_bins, hours]
    return (p_gen * p_dem).mean(axis=1)


def select_top(scen: ScenarioSet, probs: np.ndarray, n_selected: int) -> ScenarioSet:
    """Keep the n_selected most probable scenarios and renormalize.

    Ties break toward the lower original index, which keeps selection
    reproducible across runs.
    """
    if n_selected > scen.n_scenarios:
        raise ValueError("cannot select more scenarios than exist")
    p = np.asarray(probs, dtype=float)
    order = np.argsort(-p, kind="stable")[:n_selected]
    order = np.sort(order)  # keep original ordering among the selected
    kept = p[order]
    total = kept.sum()
    if total <= 0.0:
        raise ValueError("selected scenarios have zero total probability")
    return ScenarioSet(gen=scen.gen[order], dem=scen.dem[order], probs=kept / total)


def apply_night_mask(scen: ScenarioSet, loc: GeoLocation, day_of_year: int) -> ScenarioSet:
    """Zero the generation component for hours with the sun at or below horizon."""
    cz = cos_zenith_day(loc, day_of_year)
    gen = scen.gen.copy()
    gen[:, cz <= 0.0] = 0.0
    return ScenarioSet(gen=gen, dem=scen.dem, probs=scen.probs)


def denormalize_generation(scen: ScenarioSet, env: PvEnvelope, day_of_year: int) -> ScenarioSet:
    """Map normalized [0, 1] generation values onto the day's kW envelope."""
    span = env.span(day_of_year)
    p_min = env.p_min[day_of_year]
    gen = p_min[None, :] + scen.gen * span[None, :]
    return ScenarioSet(gen=gen, dem=scen.dem, probs=scen.probs)


def scenarios_to_csv(scen: ScenarioSet, path) -> None:
    """hour, scenario_id, gen_kw, dem_kw, scenario_prob rows."""
    lines = ["hour,scenario_id,gen_kw,dem_kw,scenario_prob"]
    for s in range(scen.n_scenarios):
        for h in range(HOURS):
            lines.append(
                f"{h},{s},{scen.gen[s, h]:.12g},{scen.dem[s, h]:.12g},{scen.probs[s]:.12g}"
            )
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
