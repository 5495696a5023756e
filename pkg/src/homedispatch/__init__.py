"""Forecast-driven stochastic battery dispatch for PV + storage buildings."""

from .config import PlantConfig, RunConfig, TariffDay, load_config, spawn_rng
from .data import (
    DataError,
    Dataset,
    eval_window,
    ingest,
    synthetic_dataset,
    write_csv,
)
from .dispatch import DaySchedule, plan_deterministic, solve_day
from .forecast import DayAheadForecast, NoisyOracle, Oracle, Persistence
from .policies import PolicyKind, make_day_plan
from .simulate import MetricsReport, run_horizon

__version__ = "0.1.0"

__all__ = [
    "PlantConfig",
    "RunConfig",
    "TariffDay",
    "load_config",
    "spawn_rng",
    "DataError",
    "Dataset",
    "ingest",
    "write_csv",
    "synthetic_dataset",
    "eval_window",
    "DaySchedule",
    "solve_day",
    "plan_deterministic",
    "DayAheadForecast",
    "Oracle",
    "NoisyOracle",
    "Persistence",
    "PolicyKind",
    "make_day_plan",
    "MetricsReport",
    "run_horizon",
    "__version__",
]
