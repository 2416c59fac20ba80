"""Coupled supply/demand simulation and forecast evaluation for capacity-censored markets."""
from .market import (
    Ar1Params,
    MarketPath,
    NoiseSpec,
    ScenarioConfig,
    ScenarioError,
    ShockSpec,
    SupplyParams,
    apply_ceiling,
    matching_efficiency,
    validate_scenario,
)
from .dgp import simulate_market
from .forecasters import ForecasterOptions, ForecastSeries, coupled_forecast, demand_only_forecast, fit_ar1
from .montecarlo import nested_comparison, run_experiment, sensitivity_sweep

__all__ = [
    "Ar1Params", "MarketPath", "NoiseSpec", "ScenarioConfig", "ScenarioError", "ShockSpec", "SupplyParams",
    "apply_ceiling", "matching_efficiency", "validate_scenario", "simulate_market", "ForecasterOptions",
    "ForecastSeries", "coupled_forecast", "demand_only_forecast", "fit_ar1", "nested_comparison",
    "run_experiment", "sensitivity_sweep",
]
