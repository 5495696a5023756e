"""Closed-loop execution of daily plans against actual data.

The planner commits only the battery setpoint u[h]; everything else is
recomputed each hour from what actually happened.  Shortfalls import (then
shed), excess generation charges the battery first, then exports, then
curtails.  The battery pool also tracks what share of its stored energy came
from PV, so self-consumption can credit energy that took the storage detour.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np

from .config import (
    STREAM_FORECAST,
    STREAM_SCENARIO,
    PlantConfig,
    RunConfig,
    TariffDay,
    spawn_rng,
)
from .data import DataError, Dataset
from .dispatch import DaySchedule
from .forecast import Oracle
from .policies import HourDecision, PlanContext, PolicyKind, make_day_plan, rule_based_step
from .probability import (
    RangeSpec,
    historical_demand_matrix,
    historical_pv_matrix,
    hourly_stats,
    normalized_pv_stats,
)
from .solar import GeoLocation, build_envelope, day_of_year_index
from .solver import SolverOptions


@dataclass(frozen=True)
class SimState:
    """Battery state carried across hours (and across days)."""

    soc: float                  # percent
    pv_fraction: float = 0.0    # share of stored energy that came from PV

    def __post_init__(self) -> None:
        if not 0.0 <= self.pv_fraction <= 1.0:
            raise ValueError("pv_fraction must lie in [0, 1]")


@dataclass(frozen=True)
class HourRecord:
    """One executed hour: realized flows, updated state, and billed cost."""

    timestamp: np.datetime64
    pv: float
    load: float
    flows: HourDecision
    soc_after: float
    cost: float                 # EUR, imports minus export revenue
    pv_via_storage_kwh: float   # PV-attributed battery energy delivered to load


@dataclass(frozen=True)
class MetricsReport:
    sfr: float    # percent of PV production consumed on site
    aeb: float    # EUR over the horizon
    abcl: float   # mean hourly state of charge, percent
    tieg: float   # kWh imported
    teeg: float   # kWh exported


def execute_hour(u_planned: float | None, pv: float, load: float,
                 state: SimState, plant: PlantConfig, tariffs: TariffDay,
                 h: int) -> tuple[HourRecord, SimState]:
    """Apply one hour of the plan (or the rule) to the actual pv/load pair.

    ``u_planned`` is the scheduled net battery power (positive charges);
    None delegates the hour to the rule-based policy.
    """
    if pv < 0 or load < 0:
        raise ValueError("actual pv and load must be nonnegative")
    dt = plant.delta_t
    headroom = max(plant.soc_max - state.soc, 0.0) * plant.e_cap / (100.0 * plant.eta_c * dt)
    available = max(state.soc - plant.soc_min, 0.0) * plant.e_cap * plant.eta_d / (100.0 * dt)

    if u_planned is None:
        dec = rule_based_step(pv, load, state.soc, plant)
    else:
        pv_ld = min(pv, load)
        surplus = pv - pv_ld
        deficit = load - pv_ld
        if u_planned >= 0:
            charge = min(u_planned, plant.p_es_max, headroom)
            pv_es = min(surplus, charge)
            gr_ld = min(deficit, plant.p_gr_max)
            shed = deficit - gr_ld
            # load outranks planned grid charging on the import limit
            gr_es = max(min(charge - pv_es, plant.p_gr_max - gr_ld), 0.0)
            rest = surplus - pv_es
            pv_gr = min(rest, plant.p_gr_max)
            rest -= pv_gr
            # surplus with nowhere to go charges past the setpoint rather
            # than curtailing; it never displaces a planned export
            extra = max(min(rest, min(plant.p_es_max, headroom) - pv_es - gr_es), 0.0)
            pv_es += extra
            dec = HourDecision(pv_ld=pv_ld, pv_es=pv_es, pv_gr=pv_gr,
                               gr_ld=gr_ld, gr_es=gr_es, shed=shed,
                               curtail=rest - extra)
        else:
            discharge = min(-u_planned, plant.p_es_max, available)
            es_ld = min(discharge, deficit)
            rem = deficit - es_ld
            gr_ld = min(rem, plant.p_gr_max)
            shed = rem - gr_ld
            # PV export outranks battery export when the feeder is tight
            pv_gr = min(surplus, plant.p_gr_max)
            es_gr = max(min(discharge - es_ld, plant.p_gr_max - pv_gr), 0.0)
            rest = surplus - pv_gr
            pv_es = 0.0
            if es_ld + es_gr == 0.0 and rest > 0:
                # discharge fully displaced: the hour may charge instead
                pv_es = min(rest, plant.p_es_max, headroom)
                rest -= pv_es
            dec = HourDecision(pv_ld=pv_ld, pv_es=pv_es, pv_gr=pv_gr,
                               gr_ld=gr_ld, es_ld=es_ld, es_gr=es_gr,
                               shed=shed, curtail=rest)

    charge_kw = dec.pv_es + dec.gr_es
    discharge_kw = dec.es_ld + dec.es_gr
    stored = state.soc * plant.e_cap / 100.0
    pv_stored = state.pv_fraction * stored
    pv_via_storage = state.pv_fraction * dec.es_ld * dt
    if charge_kw > 0:
        added = plant.eta_c * charge_kw * dt
        pv_added = plant.eta_c * dec.pv_es * dt
        stored += added
        pv_stored += pv_added
    if discharge_kw > 0:
        stored -= discharge_kw * dt / plant.eta_d
        pv_stored = state.pv_fraction * stored  # pool drains proportionally

    soc_after = stored * 100.0 / plant.e_cap
    if soc_after > plant.soc_max + 1e-7 or soc_after < plant.soc_min - 1e-7:
        raise AssertionError(f"soc update escaped bounds: {soc_after}")
    soc_after = min(max(soc_after, plant.soc_min), plant.soc_max)
    fraction = min(max(pv_stored / stored, 0.0), 1.0) if stored > 0 else 0.0

    cost = dt * ((dec.gr_ld + dec.gr_es) * tariffs.tou_imp[h]
                 - (dec.pv_gr + dec.es_gr) * tariffs.tou_exp[h])
    record = HourRecord(timestamp=np.datetime64("NaT", "h"), pv=pv, load=load,
                        flows=dec, soc_after=soc_after, cost=cost,
                        pv_via_storage_kwh=pv_via_storage)
    return record, SimState(soc=soc_after, pv_fraction=fraction)


def _history_before(dataset: Dataset, start: np.datetime64) -> Dataset:
    idx = np.nonzero(dataset.timestamps < np.datetime64(start, "h"))[0]
    if idx.size == 0:
        raise DataError(f"no history before {start}")
    return dataset.slice_hours(idx)


def _snap_up(value: float, step: float) -> float:
    return float(np.ceil(value / step) * step)


def build_plan_context(dataset: Dataset, start: np.datetime64,
                       loc: GeoLocation, plant: PlantConfig,
                       config: RunConfig) -> PlanContext:
    """Historical distributions from every full day before `start`."""
    hist = _history_before(dataset, start)
    env = build_envelope(hist.timestamps, hist.pv_kw, loc, plant)
    gen_matrix = historical_pv_matrix(hist.timestamps, hist.pv_kw, env,
                                      config.n_bins)
    gen_stats = normalized_pv_stats(hist.timestamps, hist.pv_kw, env,
                                    config.n_bins)
    dem_hi = _snap_up(1.25 * float(hist.demand_kw.max()), 0.5)
    dem_range = RangeSpec(0.0, max(dem_hi, 0.5), config.n_bins)
    dem_matrix = historical_demand_matrix(hist.timestamps, hist.demand_kw,
                                          dem_range)
    dem_stats = hourly_stats(hist.timestamps, hist.demand_kw,
                             sigma_floor=dem_range.width)
    return PlanContext(hist_gen=gen_matrix, hist_dem=dem_matrix,
                       gen_stats=gen_stats, dem_stats=dem_stats,
                       envelope=env, location=loc,
                       n_samples=config.n_samples,
                       n_selected=config.n_selected,
                       forecast_weight=config.forecast_weight,
                       shuffle_strata=config.shuffle_strata)


def run_horizon(dataset: Dataset, policy: PolicyKind, forecaster,
                plant: PlantConfig, config: RunConfig,
                start: np.datetime64 | None = None,
                end: np.datetime64 | None = None,
                tariffs: TariffDay | None = None,
                opts: SolverOptions | None = None,
                ) -> tuple[MetricsReport, list[HourRecord]]:
    """Simulate one policy over consecutive days, carrying battery state.

    Tariffs default to the dataset's own columns, so a single CSV specifies
    the whole experiment.  `start`/`end` bound the simulated days
    (inclusive); planning history is everything before `start`.
    """
    dates = dataset.dates()
    if dates.size == 0:
        raise DataError("dataset holds no complete day")
    lo = dates[0] if start is None else np.datetime64(start, "D")
    hi = dates[-1] if end is None else np.datetime64(end, "D")
    days = dates[(dates >= lo) & (dates <= hi)]
    if days.size == 0:
        raise DataError(f"no complete days between {lo} and {hi}")

    loc = GeoLocation(latitude=config.latitude, longitude=config.longitude)
    ctx = None
    if policy is PolicyKind.STOCHASTIC:
        ctx = build_plan_context(dataset, days[0], loc, plant, config)

    oracle = Oracle(loc)
    state = SimState(soc=plant.soc_init)
    records: list[HourRecord] = []
    warm = None
    e_pv = e_pv_direct = e_pv_via_es = 0.0
    e_imp = e_exp = 0.0
    cost_total = 0.0
    soc_sum = 0.0
    dt = plant.delta_t

    for date in days:
        idx = dataset.day_index(date)
        day_tariffs = dataset.day_tariffs(date) if tariffs is None else tariffs
        ordinal = int(date.astype("datetime64[D]").astype(int))
        doy = int(day_of_year_index(date))
        forecast = None
        if policy in (PolicyKind.DETERMINISTIC, PolicyKind.STOCHASTIC):
            rng_fc = spawn_rng(config.seed, STREAM_FORECAST, ordinal)
            forecast = forecaster.forecast(dataset, date, rng_fc)
        actuals = oracle.forecast(dataset, date)
        rng_scen = spawn_rng(config.seed, STREAM_SCENARIO, ordinal)
        plan = make_day_plan(policy, forecast, actuals, ctx, doy, day_tariffs,
                             plant, state.soc, rng_scen, opts, warm=warm)
        if isinstance(plan, DaySchedule):
            warm = plan.basis

        pv_day = dataset.pv_kw[idx]
        dem_day = dataset.demand_kw[idx]
        for h in range(24):
            u = None if plan is None else float(plan.u[h])
            rec, state = execute_hour(u, float(pv_day[h]), float(dem_day[h]),
                                      state, plant, day_tariffs, h)
            rec = replace(rec, timestamp=dataset.timestamps[idx[h]])
            records.append(rec)
            e_pv += rec.pv * dt
            e_pv_direct += rec.flows.pv_ld * dt
            e_pv_via_es += rec.pv_via_storage_kwh
            e_imp += (rec.flows.gr_ld + rec.flows.gr_es) * dt
            e_exp += (rec.flows.pv_gr + rec.flows.es_gr) * dt
            cost_total += rec.cost
            soc_sum += rec.soc_after

    sfr = 100.0 * (e_pv_direct + e_pv_via_es) / e_pv if e_pv > 0 else 0.0
    report = MetricsReport(sfr=sfr, aeb=cost_total,
                           abcl=soc_sum / len(records),
                           tieg=e_imp, teeg=e_exp)
    return report, records


_LOG_FIELDS = ("pv_ld", "pv_es", "pv_gr", "gr_ld", "gr_es", "es_ld", "es_gr",
               "shed", "curtail")


def hourly_log_to_csv(records: list[HourRecord], policy: PolicyKind, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["timestamp", "policy", "pv_kw", "load_kw"]
               + [f"{n}_kw" for n in _LOG_FIELDS] + ["soc_pct", "cost_eur"])
    for r in records:
        ts = f"{np.datetime_as_string(r.timestamp, unit='h')}:00:00Z"
        w.writerow([ts, policy.value, _fmt(r.pv), _fmt(r.load)]
                   + [_fmt(getattr(r.flows, n)) for n in _LOG_FIELDS]
                   + [_fmt(r.soc_after), _fmt(r.cost)])


def metrics_to_csv(reports: dict[PolicyKind, MetricsReport], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["policy", "sfr_pct", "aeb_eur", "abcl_pct", "tieg_kwh", "teeg_kwh"])
    for kind, m in reports.items():
        w.writerow([kind.value, _fmt(m.sfr), _fmt(m.aeb), _fmt(m.abcl),
                    _fmt(m.tieg), _fmt(m.teeg)])


def _fmt(v: float) -> str:
    return f"{v:.12g}"
