#!/usr/bin/env python3
"""Compare the jit-compiled and pure-numpy solver kernels on dispatch days.

Run:  python3 benchmarks/bench_solver.py [--repeats 5]

Both backends solve the identical instances; objectives must agree to 1e-8.
The first numba solve includes jit compilation and is excluded via a warm-up
pass.  Setting HOMEDISPATCH_NO_NUMBA=1 makes the whole package use the numpy
kernels; here both are exercised explicitly regardless of the flag.
"""

import argparse
import time

import numpy as np

from homedispatch.config import STREAM_SCENARIO, RunConfig, spawn_rng
from homedispatch.data import eval_window, synthetic_dataset
from homedispatch.dispatch import solve_day
from homedispatch.forecast import Oracle
from homedispatch.policies import build_scenarios
from homedispatch.scenarios import ScenarioSet
from homedispatch.simulate import build_plan_context
from homedispatch.solar import GeoLocation, day_of_year_index
from homedispatch.solver import get_backend


def _instances():
    """One deterministic and one stochastic dispatch day from the bundled data."""
    cfg = RunConfig()
    ds = synthetic_dataset(seed=cfg.seed)
    _, ev = eval_window(ds)
    date = ev[0]
    loc = GeoLocation(cfg.latitude, cfg.longitude)
    ctx = build_plan_context(ds, date, loc, cfg.plant, cfg)
    forecast = Oracle(loc).forecast(ds, date)
    ordinal = int(date.astype(int))
    doy = int(day_of_year_index(date))
    scen = build_scenarios(forecast, ctx, doy,
                           spawn_rng(cfg.seed, STREAM_SCENARIO, ordinal))
    det = ScenarioSet(gen=forecast.gen_mean[None, :],
                      dem=forecast.dem_mean[None, :], probs=np.array([1.0]))
    tariffs = ds.day_tariffs(date)
    return cfg, tariffs, [
        ("deterministic day (1 scenario)", det),
        (f"stochastic day ({scen.n_scenarios} scenarios)", scen),
    ]


def main() -> None:
    ap = argparse.ArgumentParser(
        description="benchmark the simplex kernels on dispatch instances")
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()

    cfg, tariffs, instances = _instances()
    plant = cfg.plant

    print(f"{'instance':<34}{'backend':<9}{'best s':>9}{'median s':>10}{'iters':>8}")
    for label, scen in instances:
        objectives = {}
        for name in ("numba", "numpy"):
            backend = get_backend(name)
            solve_day(scen, tariffs, plant, plant.soc_init, backend=backend)
            times = []
            for _ in range(args.repeats):
                t0 = time.perf_counter()
                sched = solve_day(scen, tariffs, plant, plant.soc_init,
                                  backend=backend)
                times.append(time.perf_counter() - t0)
            objectives[name] = sched.objective
            print(f"{label:<34}{name:<9}{min(times):>9.4f}"
                  f"{float(np.median(times)):>10.4f}{sched.iterations:>8}")
        gap = abs(objectives["numba"] - objectives["numpy"])
        if gap > 1e-8 * max(1.0, abs(objectives["numpy"])):
            raise SystemExit(f"backend objectives differ by {gap:.3e}")
        print(f"{'':<34}objectives agree (gap {gap:.2e})")


if __name__ == "__main__":
    main()
