"""The four benchmark decision policies.

RuleBased acts hour by hour with fixed priorities and produces no day-ahead
plan.  The three planning policies all reduce to the dispatch model: the
deterministic pair treats one trajectory (forecast or actuals) as certain,
while the proposed method builds per-hour probability distributions, samples
paired scenarios, keeps the most probable ones, and solves the
scenario-weighted problem.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .config import PlantConfig, TariffDay
from .dispatch import DaySchedule, plan_deterministic, solve_day
from .forecast import DayAheadForecast
from .probability import (
    HourlyStats,
    ProbabilityMatrix,
    RangeSpec,
    combine,
    forecast_matrix,
)
from .scenarios import (
    ScenarioSet,
    apply_night_mask,
    denormalize_generation,
    generate,
    score,
    select_top,
)
from .solar import GeoLocation, PvEnvelope
from .solver import Basis, SolverOptions


class PolicyKind(enum.Enum):
    RULE_BASED = "rule-based"
    DETERMINISTIC = "deterministic"
    IDEAL_FORECAST = "ideal-forecast"
    STOCHASTIC = "stochastic"


@dataclass(frozen=True)
class HourDecision:
    """Realized flows of one hour, all in kW, all nonnegative."""

    pv_ld: float = 0.0
    pv_es: float = 0.0
    pv_gr: float = 0.0
    gr_ld: float = 0.0
    gr_es: float = 0.0
    es_ld: float = 0.0
    es_gr: float = 0.0
    shed: float = 0.0
    curtail: float = 0.0


def rule_based_step(pv: float, load: float, soc: float, plant: PlantConfig) -> HourDecision:
    """Fixed-priority rule: PV serves load, then battery, then grid.

    Surplus PV charges the battery up to converter power and SoC headroom,
    exports up to the grid limit, and curtails the rest.  Deficit draws the
    battery down to soc_min, then imports, then sheds.  The battery is never
    charged from the grid.
    """
    if pv < 0 or load < 0:
        raise ValueError("pv and load must be nonnegative")
    pv_ld = min(pv, load)
    surplus = pv - pv_ld
    deficit = load - pv_ld
    dt = plant.delta_t

    pv_es = pv_gr = curtail = 0.0
    if surplus > 0:
        headroom = (plant.soc_max - soc) * plant.e_cap / (100.0 * plant.eta_c * dt)
        pv_es = min(surplus, plant.p_es_max, max(headroom, 0.0))
        rest = surplus - pv_es
        pv_gr = min(rest, plant.p_gr_max)
        curtail = rest - pv_gr

    es_ld = gr_ld = shed = 0.0
    if deficit > 0:
        available = (soc - plant.soc_min) * plant.e_cap * plant.eta_d / (100.0 * dt)
        es_ld = min(deficit, plant.p_es_max, max(available, 0.0))
        rest = deficit - es_ld
        gr_ld = min(rest, plant.p_gr_max)
        shed = rest - gr_ld

    return HourDecision(pv_ld=pv_ld, pv_es=pv_es, pv_gr=pv_gr, gr_ld=gr_ld,
                        es_ld=es_ld, shed=shed, curtail=curtail)


@dataclass(frozen=True)
class PlanContext:
    """Distribution inputs the stochastic planner needs beyond the forecast.

    Holds the historical matrices and stats (PV in envelope-normalized class
    space, demand in kW), the PV envelope for mapping classes back to power,
    and the sampling configuration.
    """

    hist_gen: ProbabilityMatrix     # normalized PV classes, kind historical
    hist_dem: ProbabilityMatrix     # kW bins, kind historical
    gen_stats: HourlyStats          # sigma in normalized class space
    dem_stats: HourlyStats          # sigma in kW
    envelope: PvEnvelope
    location: GeoLocation
    n_samples: int = 100
    n_selected: int = 10
    forecast_weight: float = 0.5
    shuffle_strata: bool = False

    @property
    def gen_range(self) -> RangeSpec:
        return self.hist_gen.range

    @property
    def dem_range(self) -> RangeSpec:
        return self.hist_dem.range


def normalize_forecast_gen(forecast_gen: np.ndarray, ctx: PlanContext,
                           day_of_year: int) -> np.ndarray:
    """Map a kW PV forecast into the day's envelope-normalized class space."""
    span = ctx.envelope.span(day_of_year)
    p_min = ctx.envelope.p_min[day_of_year]
    out = np.zeros(24)
    day = span > 1e-9
    out[day] = np.clip((forecast_gen[day] - p_min[day]) / span[day], 0.0, 1.0)
    return out


def stochastic_matrices(forecast: DayAheadForecast, ctx: PlanContext,
                        day_of_year: int) -> tuple[ProbabilityMatrix, ProbabilityMatrix]:
    """Blend forecast-derived and historical distributions per quantity."""
    gen_norm = normalize_forecast_gen(forecast.gen_mean, ctx, day_of_year)
    f_gen = forecast_matrix(gen_norm, ctx.gen_stats, ctx.gen_range, "generation")
    f_dem = forecast_matrix(forecast.dem_mean, ctx.dem_stats, ctx.dem_range, "demand")
    total_gen = combine(f_gen, ctx.hist_gen, ctx.forecast_weight)
    total_dem = combine(f_dem, ctx.hist_dem, ctx.forecast_weight)
    return total_gen, total_dem


def build_scenarios(forecast: DayAheadForecast, ctx: PlanContext,
                    day_of_year: int, rng: np.random.Generator) -> ScenarioSet:
    """Sample the blended matrices and keep the highest-probability draws.

    The returned set is in physical units (kW) with night hours zeroed, ready
    for dispatch or for writing out.
    """
    total_gen, total_dem = stochastic_matrices(forecast, ctx, day_of_year)
    scen = generate(total_gen, total_dem, ctx.n_samples, rng,
                    shuffle_strata=ctx.shuffle_strata)
    probs = score(scen, total_gen, total_dem)
    kept = select_top(scen, probs, ctx.n_selected)
    kept = denormalize_generation(kept, ctx.envelope, day_of_year)
    return apply_night_mask(kept, ctx.location, day_of_year)


def plan_stochastic(forecast: DayAheadForecast, ctx: PlanContext, day_of_year: int,
                    tariffs: TariffDay, plant: PlantConfig, soc0: float,
                    rng: np.random.Generator, opts: SolverOptions | None = None,
                    warm: Basis | None = None) -> DaySchedule:
    """Full pipeline: distributions -> scenarios -> scenario-weighted dispatch."""
    kept = build_scenarios(forecast, ctx, day_of_year, rng)
    return solve_day(kept, tariffs, plant, soc0, opts, warm=warm)


def make_day_plan(kind: PolicyKind, forecast: DayAheadForecast,
                  actuals: DayAheadForecast, ctx: PlanContext | None,
                  day_of_year: int, tariffs: TariffDay, plant: PlantConfig,
                  soc0: float, rng: np.random.Generator | None,
                  opts: SolverOptions | None = None,
                  warm: Basis | None = None) -> DaySchedule | None:
    """Day-ahead plan for one policy; None for the plan-free rule."""
    if kind is PolicyKind.RULE_BASED:
        return None
    if kind is PolicyKind.DETERMINISTIC:
        return plan_deterministic(forecast.gen_mean, forecast.dem_mean,
                                  tariffs, plant, soc0, opts, warm=warm)
    if kind is PolicyKind.IDEAL_FORECAST:
        return plan_deterministic(actuals.gen_mean, actuals.dem_mean,
                                  tariffs, plant, soc0, opts, warm=warm)
    if kind is PolicyKind.STOCHASTIC:
        if ctx is None or rng is None:
            raise ValueError("stochastic planning needs a PlanContext and rng")
        return plan_stochastic(forecast, ctx, day_of_year, tariffs, plant,
                               soc0, rng, opts, warm=warm)
    raise ValueError(f"unhandled policy {kind}")
