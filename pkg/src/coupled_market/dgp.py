"""Data-generating process for a single-segment coupled market.

Latent demand is AR(1) around a (possibly shifting) mean, supply responds to
lagged demand, and bookings are the min of the two.  Each stage draws from
its own generator so that, for instance, changing the measurement-noise level
leaves demand and supply draws untouched.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np
from scipy.signal import lfilter

from .market import (
    Ar1Params,
    MarketPath,
    NoiseSpec,
    ScenarioConfig,
    ShockSpec,
    SupplyParams,
    apply_ceiling,
    prevailing,
    validate_scenario,
)


def simulate_demand(
    params: Ar1Params,
    shocks: Sequence[ShockSpec],
    T: int,
    burn_in: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Latent demand for periods 0..T (length ``T + 1``).

    Element 0 is the pre-sample value that supplies the lag for period 1.
    The chain starts from a stationary draw and runs ``burn_in`` extra steps
    that are discarded.  ``demand_mean`` shocks switch the mean from their
    period onward.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    phi, mu, sd = params.persistence, params.mean, params.sd
    if abs(phi) >= 1 and burn_in > 0:
        raise ValueError(f"persistence {phi} is not stationary; burn-in would diverge")
    if abs(phi) < 1:
        start = mu + rng.standard_normal() * params.stationary_sd
    else:
        start = mu
    n = burn_in + T
    means = np.concatenate([np.full(burn_in, mu), prevailing(mu, shocks, "demand_mean", T)])
    drive = means * (1.0 - phi) + sd * rng.standard_normal(n)
    # D_t = phi D_{t-1} + drive_t, seeded with the stationary draw
    path, _ = lfilter([1.0], [1.0, -phi], drive, zi=[phi * start])
    full = np.concatenate([[start], path])
    return full[-(T + 1):]


def simulate_supply(
    params: SupplyParams,
    D: np.ndarray,
    shocks: Sequence[ShockSpec],
    rng: np.random.Generator,
) -> np.ndarray:
    """Effective supply ``S_t = a_t + b_t D_{t-1} + e_t`` for periods 1..T.

    ``D`` must include the period-0 lag, so the result has ``len(D) - 1``
    entries.  Intercept and slope follow their shocks permanently.
    """
    D = np.asarray(D, dtype=float)
    if D.ndim != 1 or len(D) < 2:
        raise ValueError("D must carry the period-0 lag plus at least one period")
    T = len(D) - 1
    a = prevailing(params.intercept, shocks, "supply_intercept", T)
    b = prevailing(params.slope, shocks, "coupling_slope", T)
    return a + b * D[:-1] + params.sd * rng.standard_normal(T)


def observe_supply(S: np.ndarray, noise: NoiseSpec, rng: np.random.Generator) -> np.ndarray:
    """Noisy supply proxy, clamped below at zero."""
    S = np.asarray(S, dtype=float)
    if noise.sd < 0:
        raise ValueError("noise sd must be >= 0")
    if noise.kind == "none":
        return S.copy()
    if noise.kind == "additive":
        obs = S + noise.sd * rng.standard_normal(S.shape)
    elif noise.kind == "multiplicative":
        obs = S * np.exp(noise.sd * rng.standard_normal(S.shape))
    else:
        raise ValueError(f"unknown noise kind {noise.kind!r}")
    return np.maximum(obs, 0.0)


def simulate_market(config: ScenarioConfig, rng: np.random.Generator | None = None) -> MarketPath:
    """Simulate one path; ``rng`` defaults to one seeded from ``config.seed``."""
    validate_scenario(config)
    if rng is None:
        rng = np.random.default_rng(config.seed)
    demand_rng, supply_rng, obs_rng = rng.spawn(3)
    D_full = simulate_demand(config.demand, config.shocks, config.horizon, config.burn_in, demand_rng)
    S = simulate_supply(config.supply, D_full, config.shocks, supply_rng)
    D = D_full[1:]
    B = apply_ceiling(D, S, config.matching_m)
    S_obs = observe_supply(S, config.supply_noise, obs_rng)
    return MarketPath(D=D, S=S, S_obs=S_obs, B=B, binding=S < D)


def replication_rng(master_seed: int, rep: int) -> np.random.Generator:
    """Independent generator for replication ``rep`` under ``master_seed``."""
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(rep,)))
