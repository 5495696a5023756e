"""Plant, tariff and run configuration.

All defaults correspond to the reference single-building setup: a 10 kWp PV
array behind a 12 kW inverter, a 10 kWh battery with a 5 kW converter, a 5 kW
grid connection and SoC kept between 15 and 90 percent.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

# RNG stream ids; keep stable, they are part of the determinism contract.
STREAM_FORECAST = 1
STREAM_SCENARIO = 3
STREAM_SYNTH_PV = 10
STREAM_SYNTH_DEM = 11


def spawn_rng(seed: int, stream: int, day_ordinal: int = 0) -> np.random.Generator:
    """Deterministic per-(seed, stream, day) generator.

    Forecast noise drawn through this scheme is identical across policies
    evaluated on the same day, so policy comparisons are paired.
    """
    ss = np.random.SeedSequence(entropy=(int(seed), int(stream), int(day_ordinal)))
    return np.random.default_rng(ss)


@dataclass(frozen=True)
class PlantConfig:
    """Physical limits and battery parameters of the building network."""

    pv_stc: float = 10.0        # kWp at standard test conditions
    p_pv_max: float = 12.0      # kW, PV inverter limit
    p_es_max: float = 5.0       # kW, battery converter limit
    p_gr_max: float = 5.0       # kW, grid connection limit
    e_cap: float = 10.0         # kWh, battery capacity
    soc_min: float = 15.0       # percent
    soc_max: float = 90.0       # percent
    soc_init: float = 50.0      # percent
    eta_c: float = 0.95
    eta_d: float = 0.95
    delta_t: float = 1.0        # hours per step
    pv_derate: float = 0.85
    shed_penalty: float = 10.0  # EUR/kWh, planner slack penalty

    def __post_init__(self) -> None:
        if not (0.0 <= self.soc_min < self.soc_max <= 100.0):
            raise ValueError("require 0 <= soc_min < soc_max <= 100")
        if not (self.soc_min <= self.soc_init <= self.soc_max):
            raise ValueError("soc_init outside [soc_min, soc_max]")
        for name in ("pv_stc", "p_pv_max", "p_es_max", "p_gr_max", "e_cap", "delta_t"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be > 0")
        for name in ("eta_c", "eta_d"):
            v = getattr(self, name)
            if not (0.0 < v <= 1.0):
                raise ValueError(f"{name} must be in (0, 1]")


@dataclass(frozen=True)
class TariffDay:
    """Per-hour import/export prices in EUR/kWh.

    The data pipeline always carries 24 hourly values; shorter horizons are
    allowed so reduced dispatch problems can reuse the same type.
    """

    tou_imp: np.ndarray  # shape (H,)
    tou_exp: np.ndarray  # shape (H,)

    def __post_init__(self) -> None:
        imp = np.asarray(self.tou_imp, dtype=float)
        exp = np.asarray(self.tou_exp, dtype=float)
        if imp.ndim != 1 or imp.size < 1 or imp.shape != exp.shape:
            raise ValueError("tariffs must be equal-length 1-d arrays")
        if not (np.all(np.isfinite(imp)) and np.all(np.isfinite(exp))):
            raise ValueError("tariffs must be finite")
        if (imp < 0).any() or (exp < 0).any():
            raise ValueError("tariffs must be nonnegative")
        object.__setattr__(self, "tou_imp", imp)
        object.__setattr__(self, "tou_exp", exp)


@dataclass(frozen=True)
class RunConfig:
    """Everything a pipeline run needs besides the dataset itself."""

    plant: PlantConfig = field(default_factory=PlantConfig)
    latitude: float = 51.5
    longitude: float = -0.1
    n_bins: int = 100           # R, probability bins per hour
    n_samples: int = 100        # S, stratified samples per hour
    n_selected: int = 10        # scenarios kept after ranking
    forecast_weight: float = 0.5  # weight of the forecast matrix in the blend
    seed: int = 42
    provider: str = "noisy"     # oracle | noisy | persistence
    alpha_gen: float = 0.15
    alpha_dem: float = 0.35
    shuffle_strata: bool = False
    sim_start: str | None = None  # ISO date; None means the default window
    sim_end: str | None = None

    def __post_init__(self) -> None:
        if self.n_bins < 2:
            raise ValueError("n_bins must be >= 2")
        if not (1 <= self.n_selected <= self.n_samples):
            raise ValueError("need 1 <= n_selected <= n_samples")
        if not (0.0 <= self.forecast_weight <= 1.0):
            raise ValueError("forecast_weight must be in [0, 1]")
        if self.provider not in ("oracle", "noisy", "persistence"):
            raise ValueError(f"unknown provider {self.provider!r}")
        for name in ("sim_start", "sim_end"):
            v = getattr(self, name)
            if v is not None:
                np.datetime64(str(v), "D")  # raises ValueError on bad dates
        if self.sim_start is not None and self.sim_end is not None:
            if np.datetime64(str(self.sim_start)) > np.datetime64(str(self.sim_end)):
                raise ValueError("sim_start after sim_end")


def load_config(path: str | Path | None = None) -> RunConfig:
    """Load a RunConfig from YAML, falling back to defaults for absent keys."""
    if path is None:
        return RunConfig()
    raw = yaml.safe_load(Path(path).read_text()) or {}
    plant_raw = raw.pop("plant", {}) or {}
    plant = PlantConfig(**plant_raw)
    return RunConfig(plant=plant, **raw)


def update_config(cfg: RunConfig, **kwargs) -> RunConfig:
    """Return a copy of cfg with the given fields replaced."""
    return replace(cfg, **kwargs)
