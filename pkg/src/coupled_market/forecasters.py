"""Benchmark forecasters: naive, demand-only AR(1) and the coupled min(D, S) model.

All forecasters are fit on bookings over the training span ``[1, train_end]``
and emit forecasts for ``[train_end - 19, T]``, which covers the last 20
training periods (in-sample, one step ahead) and the whole test span.

Two switches control what happens after ``train_end``:

``horizon``
    ``"extrapolate"`` (default) projects the frozen AR(1) forward from the
    last training observation, so the demand forecast for period ``t`` is
    ``mu + phi**h (B_train_end - mu)`` with ``h = t - train_end``.
    ``"one_step"`` instead conditions on the observed ``B_{t-1}``.

``supply_refit``
    How the coupled model's supply nowcast is updated on post-training data.
    ``"intervention"`` (default) re-fits on an expanding window and adds a
    step term at each announced supply intervention date, ``"expanding"``
    re-fits without such terms and ``"frozen"`` keeps the training fit.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .market import Ar1Params, MarketPath, ScenarioConfig, ShockSpec

HORIZONS = ("extrapolate", "one_step")
SUPPLY_CHANNELS = ("true_S", "observed_S")
SUPPLY_REFITS = ("intervention", "expanding", "frozen")
EVAL_LOOKBACK = 20


class DegenerateFitError(ValueError):
    """Regression design has no variation to estimate a slope from."""


@dataclass(frozen=True)
class SupplyRegressionParams:
    """``S_t = intercept + slope * x_{t-1}`` plus permanent step shifts.

    ``intercept_shifts`` and ``slope_shifts`` are ``(period, delta)`` pairs
    that apply from ``period`` onward; both are empty for a plain fit.
    """

    intercept: float
    slope: float
    sd: float
    intercept_shifts: tuple[tuple[int, float], ...] = ()
    slope_shifts: tuple[tuple[int, float], ...] = ()

    def predict(self, proxy_lag: float, period: int) -> float:
        a = self.intercept + sum(d for t, d in self.intercept_shifts if period >= t)
        b = self.slope + sum(d for t, d in self.slope_shifts if period >= t)
        return a + b * proxy_lag


@dataclass(frozen=True)
class ForecastSeries:
    start: int
    end: int
    point: np.ndarray
    predictive_sd: np.ndarray
    model_label: str
    diagnostics: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        n = self.end - self.start + 1
        if len(self.point) != n or len(self.predictive_sd) != n:
            raise ValueError(f"series length must be end - start + 1 = {n}")
        if np.any(self.predictive_sd < 0):
            raise ValueError("predictive_sd must be nonnegative")

    @property
    def periods(self) -> np.ndarray:
        return np.arange(self.start, self.end + 1)

    def index(self, start: int, end: int) -> slice:
        if start < self.start or end > self.end or start > end:
            raise ValueError(f"window [{start}, {end}] outside forecast range [{self.start}, {self.end}]")
        return slice(start - self.start, end - self.start + 1)

    def to_csv(self, path: str | Path, actual: np.ndarray) -> None:
        from .io import write_csv

        actual = np.asarray(actual, dtype=float)[self.start - 1:self.end]
        rows = zip(self.periods.tolist(), [self.model_label] * len(self.point),
                   self.point.tolist(), self.predictive_sd.tolist(), actual.tolist())
        write_csv(path, ("t", "model", "point", "predictive_sd", "actual"), rows)


def _ols(y: np.ndarray, X: np.ndarray) -> tuple[np.ndarray, float]:
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    dof = len(y) - X.shape[1]
    sd = float(np.sqrt(resid @ resid / dof)) if dof > 0 else 0.0
    return coef, sd


def fit_ar1(y) -> Ar1Params:
    """OLS of ``y_t`` on ``(1, y_{t-1})``.

    Returns the implied mean ``c / (1 - phi)`` and the residual sd with an
    ``n - 2`` denominator.  A unit-root or explosive estimate is returned as
    is; check :attr:`Ar1Params.stationary`.
    """
    y = np.asarray(y, dtype=float)
    if len(y) < 10:
        raise ValueError(f"need at least 10 observations, got {len(y)}")
    lag = y[:-1]
    if np.ptp(lag) == 0:
        raise DegenerateFitError("constant series: AR(1) slope is not identified")
    X = np.column_stack([np.ones_like(lag), lag])
    (c, phi), sd = _ols(y[1:], X)
    mean = c / (1.0 - phi) if phi != 1.0 else float("nan")
    return Ar1Params(float(mean), float(phi), sd)


def forecast_ar1_step(params: Ar1Params, y_prev: float) -> tuple[float, float]:
    return params.mean + params.persistence * (y_prev - params.mean), params.sd


def fit_supply_regression(
    S,
    proxy_lag,
    periods: Sequence[int] | None = None,
    interventions: Sequence[ShockSpec] = (),
) -> SupplyRegressionParams:
    """OLS of supply on ``(1, proxy_lag)``.

    With ``interventions`` (and the matching ``periods`` of each row), a
    ``supply_intercept`` shock adds a step dummy and a ``coupling_slope``
    shock adds a step-times-proxy term.  A term is only included once the
    window holds observations on both sides of its date.
    """
    S = np.asarray(S, dtype=float)
    x = np.asarray(proxy_lag, dtype=float)
    if S.shape != x.shape:
        raise ValueError("S and proxy_lag must have equal length")
    if len(S) < 10:
        raise ValueError(f"need at least 10 observations, got {len(S)}")
    if np.ptp(x) == 0:
        raise DegenerateFitError("constant proxy: supply slope is not identified")
    cols = [np.ones_like(x), x]
    terms: list[tuple[str, int]] = []
    if interventions:
        if periods is None:
            raise ValueError("periods are required to place intervention terms")
        periods = np.asarray(periods)
        for sh in sorted(interventions, key=lambda s: (s.time, s.target)):
            after = periods >= sh.time
            if not after.any() or after.all():
                continue
            if sh.target == "supply_intercept":
                cols.append(after.astype(float))
                terms.append(("intercept", sh.time))
            elif sh.target == "coupling_slope":
                cols.append(after * x)
                terms.append(("slope", sh.time))
    coef, sd = _ols(S, np.column_stack(cols))
    shifts = {"intercept": [], "slope": []}
    for (which, time), delta in zip(terms, coef[2:]):
        shifts[which].append((time, float(delta)))
    return SupplyRegressionParams(
        float(coef[0]), float(coef[1]), sd, tuple(shifts["intercept"]), tuple(shifts["slope"])
    )


def forecast_range(config: ScenarioConfig) -> tuple[int, int]:
    return max(2, config.train_end - EVAL_LOOKBACK + 1), config.horizon


def _demand_forecasts(B: np.ndarray, params: Ar1Params, start: int, end: int,
                      train_end: int, horizon: str) -> tuple[np.ndarray, np.ndarray]:
    if horizon not in HORIZONS:
        raise ValueError(f"horizon must be one of {HORIZONS}")
    t = np.arange(start, end + 1)
    mu, phi, sd = params.mean, params.persistence, params.sd
    point = mu + phi * (B[t - 2] - mu)
    spread = np.full(len(t), sd)
    if horizon == "extrapolate":
        ahead = t > train_end
        h = t[ahead] - train_end
        point[ahead] = mu + phi**h * (B[train_end - 1] - mu)
        if abs(phi) < 1:
            spread[ahead] = sd * np.sqrt((1 - phi ** (2 * h)) / (1 - phi**2))
        else:
            spread[ahead] = sd * np.sqrt(h)
    return point, spread


def demand_only_forecast(path: MarketPath, config: ScenarioConfig, horizon: str = "extrapolate") -> ForecastSeries:
    """AR(1) fit once on ``B_1..B_train_end``; parameters are frozen thereafter."""
    if config.train_end < 10:
        raise ValueError("train_end must be >= 10")
    params = fit_ar1(path.B[:config.train_end])
    start, end = forecast_range(config)
    point, spread = _demand_forecasts(path.B, params, start, end, config.train_end, horizon)
    return ForecastSeries(start, end, point, spread, "demand_only", {"demand_params": params})


def coupled_forecast(
    path: MarketPath,
    config: ScenarioConfig,
    supply_channel: str = "true_S",
    horizon: str = "extrapolate",
    supply_refit: str = "intervention",
) -> ForecastSeries:
    """``min(D_hat, S_hat)`` with the demand-only AR(1) as demand proxy.

    The supply nowcast regresses the chosen supply series on lagged bookings
    (latent demand is unobserved) over periods ``[2, train_end]``; after
    training the window expands to ``t - 1`` unless ``supply_refit`` is
    ``"frozen"``.  The predictive sd is that of whichever branch attains
    the min, with ties going to demand.
    """
    if supply_channel not in SUPPLY_CHANNELS:
        raise ValueError(f"supply_channel must be one of {SUPPLY_CHANNELS}")
    if supply_refit not in SUPPLY_REFITS:
        raise ValueError(f"supply_refit must be one of {SUPPLY_REFITS}")
    if config.train_end < 10:
        raise ValueError("train_end must be >= 10")
    B = path.B
    S = path.S if supply_channel == "true_S" else path.S_obs
    te = config.train_end
    demand_params = fit_ar1(B[:te])
    start, end = forecast_range(config)
    d_hat, d_sd = _demand_forecasts(B, demand_params, start, end, te, horizon)

    interventions = ()
    if supply_refit == "intervention":
        interventions = tuple(s for s in config.shocks if s.target in ("supply_intercept", "coupling_slope"))

    fits: dict[int, SupplyRegressionParams] = {}

    def supply_fit(last: int) -> SupplyRegressionParams:
        if last not in fits:
            periods = np.arange(2, last + 1)
            fits[last] = fit_supply_regression(S[periods - 1], B[periods - 2], periods, interventions)
        return fits[last]

    s_hat = np.empty(end - start + 1)
    s_sd = np.empty_like(s_hat)
    for i, t in enumerate(range(start, end + 1)):
        last = te if supply_refit == "frozen" else max(te, t - 1)
        fit = supply_fit(last)
        s_hat[i] = fit.predict(B[t - 2], t)
        s_sd[i] = fit.sd

    demand_binds = d_hat <= s_hat
    point = np.where(demand_binds, d_hat, s_hat)
    spread = np.where(demand_binds, d_sd, s_sd)
    label = "coupled" if supply_channel == "true_S" else "coupled_obs"
    return ForecastSeries(start, end, point, spread, label, {
        "demand_params": demand_params,
        "demand_point": d_hat,
        "supply_point": s_hat,
        "supply_fits": fits,
    })


def naive_forecast(path: MarketPath, config: ScenarioConfig, horizon: str = "one_step") -> ForecastSeries:
    """Random-walk benchmark ``B_hat_t = B_{t-1}``.

    The predictive sd is the sd of first differences over training.  The
    ``horizon`` argument is accepted for a uniform call signature; the naive
    forecast is always one step ahead.
    """
    B = path.B
    start, end = forecast_range(config)
    diffs = np.diff(B[:config.train_end])
    sd = float(np.std(diffs, ddof=1)) if len(diffs) > 1 else 0.0
    point = B[start - 2:end - 1].copy()
    return ForecastSeries(start, end, point, np.full(len(point), sd), "naive")


ForecasterFn = Callable[..., ForecastSeries]
MODELS: dict[str, ForecasterFn] = {
    "demand_only": demand_only_forecast,
    "coupled": coupled_forecast,
    "naive": naive_forecast,
}


@dataclass(frozen=True)
class ForecasterOptions:
    horizon: str = "extrapolate"
    supply_channel: str = "true_S"
    supply_refit: str = "intervention"

    def run(self, model: str, path: MarketPath, config: ScenarioConfig) -> ForecastSeries:
        if model == "coupled":
            return coupled_forecast(path, config, self.supply_channel, self.horizon, self.supply_refit)
        if model not in MODELS:
            raise ValueError(f"unknown model {model!r}; choose from {sorted(MODELS)}")
        return MODELS[model](path, config, horizon=self.horizon)
