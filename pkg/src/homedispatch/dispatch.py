"""Probability-weighted multi-scenario battery dispatch planning.

One model instance covers S scenarios over an H-hour horizon.  Grid and PV
routing are scenario-specific recourse; the battery net charge power u[h] is
a shared first-stage decision tied to every scenario by an equality row, so
the planned storage schedule never anticipates which scenario occurs.

Per scenario-hour the model carries seven nonnegative flows, a load-shed
slack, the battery state of charge, and four indicator binaries that forbid
simultaneous import/export and charge/discharge.  Load shed is penalized
unweighted across scenarios so even vanishing-probability scenarios cannot
absorb demand for free.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .config import PlantConfig, TariffDay
from .scenarios import ScenarioSet
from .solver import (
    EQ,
    GE,
    LE,
    NODE_LIMIT,
    OPTIMAL,
    Basis,
    LinearProgram,
    LpSolution,
    SolverError,
    SolverOptions,
    solve_lp,
    solve_milp,
)

log = logging.getLogger(__name__)

# variable slots per scenario-hour
V_PV_LD, V_PV_ES, V_PV_GR, V_GR_LD, V_GR_ES, V_ES_LD, V_ES_GR, \
    V_SHED, V_SOC, V_B_IMP, V_B_EXP, V_B_CHG, V_B_DCH = range(13)
N_VAR_SLOTS = 13
N_ROW_SLOTS = 14

FLOW_NAMES = ("pv_ld", "pv_es", "pv_gr", "gr_ld", "gr_es", "es_ld", "es_gr", "shed")


@dataclass(frozen=True)
class DispatchModel:
    """Assembled problem plus the metadata needed to unpack a solution."""

    lp: LinearProgram
    n_scenarios: int
    n_hours: int
    plant: PlantConfig
    probs: np.ndarray
    gen: np.ndarray          # clipped to p_pv_max, shape (S, H)
    dem: np.ndarray          # shape (S, H)
    imp_price: np.ndarray    # shape (H,)
    exp_price: np.ndarray    # shape (H,)
    soc0: float

    def var(self, scenario: int, hour: int, slot: int) -> int:
        return (scenario * self.n_hours + hour) * N_VAR_SLOTS + slot

    def u_index(self, hour: int) -> int:
        return self.n_scenarios * self.n_hours * N_VAR_SLOTS + hour


@dataclass
class DaySchedule:
    """First-stage battery plan with the per-scenario recourse it came from.

    u[h] > 0 charges the battery, u[h] < 0 discharges; soc is the planned
    end-of-hour state of charge (identical across scenarios because u is
    shared and charge/discharge cannot overlap).
    """

    u: np.ndarray                  # (H,) kW
    soc: np.ndarray                # (H,) percent, end of hour
    planned_soc: np.ndarray        # (S, H) percent
    flows: dict                    # name -> (S, H) kW
    probs: np.ndarray              # (S,)
    expected_cost: float           # EUR, tariff terms only
    objective: float               # EUR, includes shed penalty
    status: str
    nodes_explored: int = 0
    iterations: int = 0
    basis: Basis | None = None


def _assemble(scenarios: ScenarioSet, tariffs: TariffDay, plant: PlantConfig,
              soc0: float) -> DispatchModel:
    n_s = scenarios.n_scenarios
    n_h = scenarios.n_hours
    if n_s < 1:
        raise ValueError("empty scenario set")
    if np.any(scenarios.gen < 0) or np.any(scenarios.dem < 0):
        raise ValueError("scenario powers must be nonnegative")
    probs = np.asarray(scenarios.probs, dtype=float)
    if probs.sum() <= 0:
        raise ValueError("scenario probabilities must have positive total")
    if tariffs.tou_imp.size < n_h or tariffs.tou_exp.size < n_h:
        raise ValueError(f"tariffs cover {tariffs.tou_imp.size} hours, need {n_h}")
    if not plant.soc_min - 1e-9 <= soc0 <= plant.soc_max + 1e-9:
        raise ValueError(f"soc0 {soc0} outside [{plant.soc_min}, {plant.soc_max}]")
    soc0 = float(np.clip(soc0, plant.soc_min, plant.soc_max))

    gen = np.minimum(scenarios.gen, plant.p_pv_max)  # inverter clips excess input
    dem = scenarios.dem
    imp_price = tariffs.tou_imp[:n_h]
    exp_price = tariffs.tou_exp[:n_h]
    dt = plant.delta_t
    k_c = 100.0 * dt * plant.eta_c / plant.e_cap
    k_d = 100.0 * dt / (plant.eta_d * plant.e_cap)

    n_block = n_s * n_h * N_VAR_SLOTS
    n_vars = n_block + n_h
    m_rows = n_s * n_h * N_ROW_SLOTS

    lo = np.zeros(n_vars)
    ub = np.empty(n_vars)
    c = np.zeros(n_vars)
    is_bin = np.zeros(n_vars, dtype=bool)

    ub_blk = ub[:n_block].reshape(n_s, n_h, N_VAR_SLOTS)
    lo_blk = lo[:n_block].reshape(n_s, n_h, N_VAR_SLOTS)
    c_blk = c[:n_block].reshape(n_s, n_h, N_VAR_SLOTS)
    bin_blk = is_bin[:n_block].reshape(n_s, n_h, N_VAR_SLOTS)

    ub_blk[:, :, V_PV_LD] = gen
    ub_blk[:, :, V_PV_ES] = np.minimum(gen, plant.p_es_max)
    ub_blk[:, :, V_PV_GR] = np.minimum(gen, plant.p_gr_max)
    ub_blk[:, :, V_GR_LD] = np.minimum(dem, plant.p_gr_max)
    ub_blk[:, :, V_GR_ES] = min(plant.p_gr_max, plant.p_es_max)
    ub_blk[:, :, V_ES_LD] = np.minimum(dem, plant.p_es_max)
    ub_blk[:, :, V_ES_GR] = min(plant.p_es_max, plant.p_gr_max)
    ub_blk[:, :, V_SHED] = dem
    lo_blk[:, :, V_SOC] = plant.soc_min
    ub_blk[:, :, V_SOC] = plant.soc_max
    ub_blk[:, :, V_B_IMP:] = 1.0
    bin_blk[:, :, V_B_IMP:] = True
    lo[n_block:] = -plant.p_es_max
    ub[n_block:] = plant.p_es_max

    c_blk[:, :, V_GR_LD] = probs[:, None] * dt * imp_price[None, :]
    c_blk[:, :, V_GR_ES] = probs[:, None] * dt * imp_price[None, :]
    c_blk[:, :, V_PV_GR] = -probs[:, None] * dt * exp_price[None, :]
    c_blk[:, :, V_ES_GR] = -probs[:, None] * dt * exp_price[None, :]
    c_blk[:, :, V_SHED] = plant.shed_penalty * dt  # deliberately unweighted

    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    relations = np.empty(m_rows, dtype=np.int8)
    rhs = np.empty(m_rows)

    def put(r, j, v):
        rows.append(r)
        cols.append(j)
        vals.append(v)

    for i in range(n_s):
        for h in range(n_h):
            base_v = (i * n_h + h) * N_VAR_SLOTS
            base_r = (i * n_h + h) * N_ROW_SLOTS
            uj = n_block + h

            r = base_r + 0   # PV inverter cap
            for k in (V_PV_LD, V_PV_ES, V_PV_GR):
                put(r, base_v + k, 1.0)
            relations[r], rhs[r] = LE, plant.p_pv_max

            r = base_r + 1   # all scenario PV is routed somewhere
            for k in (V_PV_LD, V_PV_ES, V_PV_GR):
                put(r, base_v + k, 1.0)
            relations[r], rhs[r] = EQ, gen[i, h]

            r = base_r + 2   # grid import converter cap
            put(r, base_v + V_GR_LD, 1.0)
            put(r, base_v + V_GR_ES, 1.0)
            relations[r], rhs[r] = LE, plant.p_gr_max

            r = base_r + 3   # battery charge cap
            put(r, base_v + V_PV_ES, 1.0)
            put(r, base_v + V_GR_ES, 1.0)
            relations[r], rhs[r] = LE, plant.p_es_max

            r = base_r + 4   # battery discharge cap
            put(r, base_v + V_ES_LD, 1.0)
            put(r, base_v + V_ES_GR, 1.0)
            relations[r], rhs[r] = LE, plant.p_es_max

            r = base_r + 5   # load balance with shed slack
            for k in (V_PV_LD, V_GR_LD, V_ES_LD, V_SHED):
                put(r, base_v + k, 1.0)
            relations[r], rhs[r] = EQ, dem[i, h]

            r = base_r + 6   # SoC recursion
            put(r, base_v + V_SOC, 1.0)
            put(r, base_v + V_PV_ES, -k_c)
            put(r, base_v + V_GR_ES, -k_c)
            put(r, base_v + V_ES_LD, k_d)
            put(r, base_v + V_ES_GR, k_d)
            if h == 0:
                relations[r], rhs[r] = EQ, soc0
            else:
                put(r, base_v - N_VAR_SLOTS + V_SOC, -1.0)
                relations[r], rhs[r] = EQ, 0.0

            r = base_r + 7   # import only when its indicator is set
            put(r, base_v + V_GR_LD, 1.0)
            put(r, base_v + V_GR_ES, 1.0)
            put(r, base_v + V_B_IMP, -plant.p_gr_max)
            relations[r], rhs[r] = LE, 0.0

            r = base_r + 8   # export only when its indicator is set
            put(r, base_v + V_PV_GR, 1.0)
            put(r, base_v + V_ES_GR, 1.0)
            put(r, base_v + V_B_EXP, -plant.p_gr_max)
            relations[r], rhs[r] = LE, 0.0

            r = base_r + 9   # import and export are mutually exclusive
            put(r, base_v + V_B_IMP, 1.0)
            put(r, base_v + V_B_EXP, 1.0)
            relations[r], rhs[r] = LE, 1.0

            r = base_r + 10  # charge only when its indicator is set
            put(r, base_v + V_PV_ES, 1.0)
            put(r, base_v + V_GR_ES, 1.0)
            put(r, base_v + V_B_CHG, -plant.p_es_max)
            relations[r], rhs[r] = LE, 0.0

            r = base_r + 11  # discharge only when its indicator is set
            put(r, base_v + V_ES_LD, 1.0)
            put(r, base_v + V_ES_GR, 1.0)
            put(r, base_v + V_B_DCH, -plant.p_es_max)
            relations[r], rhs[r] = LE, 0.0

            r = base_r + 12  # charge and discharge are mutually exclusive
            put(r, base_v + V_B_CHG, 1.0)
            put(r, base_v + V_B_DCH, 1.0)
            relations[r], rhs[r] = LE, 1.0

            r = base_r + 13  # first-stage battery net power is shared
            put(r, base_v + V_PV_ES, 1.0)
            put(r, base_v + V_GR_ES, 1.0)
            put(r, base_v + V_ES_LD, -1.0)
            put(r, base_v + V_ES_GR, -1.0)
            put(r, uj, -1.0)
            relations[r], rhs[r] = EQ, 0.0

    a = sp.coo_matrix((vals, (rows, cols)), shape=(m_rows, n_vars))
    lp = LinearProgram(c=c, a_matrix=a, relations=relations, rhs=rhs,
                       lo=lo, ub=ub, is_binary=is_bin)
    return DispatchModel(lp=lp, n_scenarios=n_s, n_hours=n_h, plant=plant,
                         probs=probs, gen=gen, dem=dem, imp_price=imp_price,
                         exp_price=exp_price, soc0=soc0)


def build_model(scenarios: ScenarioSet, tariffs: TariffDay, plant: PlantConfig,
                soc0: float) -> LinearProgram:
    """Assemble the scenario dispatch problem as a plain LinearProgram."""

    return _assemble(scenarios, tariffs, plant, soc0).lp


def _complete_from_relaxation(model: DispatchModel, opts: SolverOptions,
                              warm: Basis | None, backend) -> LpSolution | None:
    """Try to lift the LP relaxation optimum to an integral solution.

    The indicator binaries carry no objective weight, so the relaxation
    often leaves them fractional even when the flows themselves already
    satisfy the exclusivity the binaries encode (export below import price
    and converter losses make the overlapping modes uneconomical).  In that
    case setting each indicator from its flow yields a feasible integral
    point with the relaxation's own objective, which is a lower bound, so
    the completion is optimal and branch and bound is unnecessary.  Returns
    None when the relaxation does not admit the lift.
    """

    relax = solve_lp(model.lp, opts, warm=warm, backend=backend)
    if relax.status != OPTIMAL:
        return None
    n_s, n_h = model.n_scenarios, model.n_hours
    x = relax.x.copy()
    blk = x[: n_s * n_h * N_VAR_SLOTS].reshape(n_s, n_h, N_VAR_SLOTS)
    imp = blk[:, :, V_GR_LD] + blk[:, :, V_GR_ES]
    exp = blk[:, :, V_PV_GR] + blk[:, :, V_ES_GR]
    chg = blk[:, :, V_PV_ES] + blk[:, :, V_GR_ES]
    dch = blk[:, :, V_ES_LD] + blk[:, :, V_ES_GR]
    tol = opts.integrality_tol
    if max(np.max(np.minimum(imp, exp)), np.max(np.minimum(chg, dch))) > tol:
        return None
    blk[:, :, V_B_IMP] = (imp > tol).astype(float)
    blk[:, :, V_B_EXP] = (exp > tol).astype(float)
    blk[:, :, V_B_CHG] = (chg > tol).astype(float)
    blk[:, :, V_B_DCH] = (dch > tol).astype(float)

    # full row-wise feasibility audit of the lifted point
    lp = model.lp
    act = lp.a_matrix @ x
    viol = np.where(lp.relations == LE, act - lp.rhs,
                    np.where(lp.relations == GE, lp.rhs - act,
                             np.abs(act - lp.rhs)))
    if viol.max() > opts.feasibility_tol:
        return None
    obj = float(lp.c @ x)
    if abs(obj - relax.objective) > 1e-9 * max(1.0, abs(obj)):
        return None
    return LpSolution(OPTIMAL, x, obj, nodes_explored=0,
                      iterations=relax.iterations, basis=relax.basis)


def solve_day(scenarios: ScenarioSet, tariffs: TariffDay, plant: PlantConfig,
              soc0: float, opts: SolverOptions | None = None,
              warm: Basis | None = None, backend=None) -> DaySchedule:
    """Solve the day-ahead dispatch and unpack the plan.

    ``warm`` may carry the previous day's basis; daily tariff structure
    repeats, so the old optimal basis is usually a few pivots from the new
    optimum.
    """

    model = _assemble(scenarios, tariffs, plant, soc0)
    opts = opts or SolverOptions()
    sol = _complete_from_relaxation(model, opts, warm, backend)
    if sol is None:
        sol = solve_milp(model.lp, opts, warm=warm, backend=backend)
    if sol.status == NODE_LIMIT and sol.x is not None:
        log.warning("dispatch hit node limit %d; using incumbent", opts.max_nodes)
    elif sol.status != OPTIMAL:
        raise SolverError(
            f"dispatch solve ended with status {sol.status}; "
            "the shed slack should make every instance feasible"
        )

    n_s, n_h = model.n_scenarios, model.n_hours
    blk = sol.x[: n_s * n_h * N_VAR_SLOTS].reshape(n_s, n_h, N_VAR_SLOTS)
    u = sol.x[n_s * n_h * N_VAR_SLOTS:].copy()
    flows = {name: blk[:, :, k].copy() for k, name in enumerate(FLOW_NAMES)}
    planned_soc = blk[:, :, V_SOC].copy()

    dt = plant.delta_t
    imports = flows["gr_ld"] + flows["gr_es"]
    exports = flows["pv_gr"] + flows["es_gr"]
    per_scen = dt * (imports @ model.imp_price - exports @ model.exp_price)
    expected_cost = float(model.probs @ per_scen)

    return DaySchedule(
        u=u,
        soc=planned_soc[0].copy(),
        planned_soc=planned_soc,
        flows=flows,
        probs=model.probs.copy(),
        expected_cost=expected_cost,
        objective=float(sol.objective),
        status=sol.status,
        nodes_explored=sol.nodes_explored,
        iterations=sol.iterations,
        basis=sol.basis,
    )


def plan_deterministic(forecast_gen: np.ndarray, forecast_dem: np.ndarray,
                       tariffs: TariffDay, plant: PlantConfig, soc0: float,
                       opts: SolverOptions | None = None,
                       warm: Basis | None = None, backend=None) -> DaySchedule:
    """Plan against a single trajectory taken as certain (probability 1)."""

    gen = np.asarray(forecast_gen, dtype=float)
    dem = np.asarray(forecast_dem, dtype=float)
    if gen.ndim != 1 or gen.shape != dem.shape:
        raise ValueError("forecasts must be equal-length 1-d arrays")
    scen = ScenarioSet(gen=gen[None, :], dem=dem[None, :], probs=np.array([1.0]))
    return solve_day(scen, tariffs, plant, soc0, opts, warm=warm, backend=backend)


def schedule_to_csv(schedule: DaySchedule, fh) -> None:
    """Write the plan: first-stage u and SoC plus probability-weighted flows."""

    writer = csv.writer(fh, lineterminator="\n")
    p = schedule.probs / schedule.probs.sum()
    writer.writerow(["hour", "u_kw", "soc_pct"] + [f"{n}_kw" for n in FLOW_NAMES])
    for h in range(schedule.u.size):
        row = [h, _fmt(schedule.u[h]), _fmt(schedule.soc[h])]
        row += [_fmt(float(p @ schedule.flows[n][:, h])) for n in FLOW_NAMES]
        writer.writerow(row)


def _fmt(v: float) -> str:
    return f"{v:.12g}"
