"""Latent AR(1) demand from bookings censored at a known supply ceiling.

When supply binds, bookings sit at the ceiling and only tell us that demand
was at least that large.  The estimator here is an impute-and-refit
(pseudo-EM) iteration: censored periods are replaced by the truncated-normal
mean of demand above the ceiling, given the imputed value one period back,
and the AR(1) is re-fit by OLS on the completed series.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfcx
from scipy.stats import norm

from .forecasters import fit_ar1
from .market import Ar1Params

_SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


def inverse_mills(z):
    """Hazard ``pdf(z) / (1 - cdf(z))`` of the standard normal.

    Written through the scaled complementary error function, which stays
    accurate far into the upper tail where the naive ratio is 0/0.
    """
    return _SQRT_2_OVER_PI / erfcx(np.asarray(z, dtype=float) / math.sqrt(2.0))


@dataclass(frozen=True)
class CensoredSample:
    B: np.ndarray
    ceiling: np.ndarray
    censored: np.ndarray
    tau: float = 1e-9

    def __post_init__(self):
        if not (len(self.B) == len(self.ceiling) == len(self.censored)):
            raise ValueError("B, ceiling and censored must have equal length")

    @property
    def censored_fraction(self) -> float:
        return float(np.mean(self.censored))


def detect_censoring(B, ceiling, tau: float = 1e-9) -> CensoredSample:
    """Flag periods whose bookings sit on the ceiling (within ``tau``)."""
    B = np.asarray(B, dtype=float)
    ceiling = np.asarray(ceiling, dtype=float)
    if B.shape != ceiling.shape:
        raise ValueError("B and ceiling must have equal length")
    if tau < 0:
        raise ValueError("tau must be >= 0")
    with np.errstate(invalid="ignore"):
        censored = np.abs(B - ceiling) <= tau
    return CensoredSample(B, ceiling, censored, tau)


def _run_depth(censored: np.ndarray) -> np.ndarray:
    # position within each run of consecutive censored periods (1-based, 0 if uncensored)
    depth = np.zeros(len(censored), dtype=int)
    run = 0
    for i, c in enumerate(censored):
        run = run + 1 if c else 0
        depth[i] = run
    return depth


def _impute(params: Ar1Params, sample: CensoredSample) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Imputed demand, the conditional mean used at each period, and the
    conditional variance of demand given the data (zero where uncensored)."""
    mu, phi, sd = params.mean, params.persistence, params.sd
    D = sample.B.astype(float).copy()
    resid_var = np.zeros_like(D)
    cond_mean = np.empty_like(D)
    cond_sd = np.full_like(D, sd)
    cond_mean[0] = mu
    cond_sd[0] = params.stationary_sd
    depth = _run_depth(sample.censored)
    # uncensored lags are known up front; censored runs resolve one depth at a time
    cond_mean[1:] = mu + phi * (D[:-1] - mu)
    for k in range(1, int(depth.max(initial=0)) + 1):
        idx = np.flatnonzero(depth == k)
        inner = idx[idx > 0]
        if k > 1:
            cond_mean[inner] = mu + phi * (D[inner - 1] - mu)
        z = (sample.ceiling[idx] - cond_mean[idx]) / cond_sd[idx]
        lam = inverse_mills(z)
        D[idx] = cond_mean[idx] + cond_sd[idx] * lam
        resid_var[idx] = cond_sd[idx] ** 2 * np.maximum(1 + z * lam - lam**2, 0.0)
        # next period's conditioning value changes when it follows a censored one
        nxt = idx + 1
        nxt = nxt[nxt < len(D)]
        cond_mean[nxt] = mu + phi * (D[nxt - 1] - mu)
    return D, cond_mean, resid_var


def latent_demand_nowcast(params: Ar1Params, sample: CensoredSample) -> np.ndarray:
    """Bookings where uncensored, truncated-normal mean above the ceiling where censored."""
    return _impute(params, sample)[0]


def censored_ar1_loglik(params: Ar1Params, sample: CensoredSample) -> float:
    """Conditional log-likelihood over periods 2..n.

    Each period conditions on the imputed demand one period back.
    Uncensored periods add a Gaussian log-density, censored ones the log
    probability of exceeding the ceiling.
    """
    if params.sd <= 0:
        raise ValueError("sd must be > 0")
    _, cond_mean, _ = _impute(params, sample)
    c = sample.censored[1:]
    m = cond_mean[1:]
    obs = np.where(c, sample.ceiling[1:], sample.B[1:])
    z = (obs - m) / params.sd
    ll = np.where(c, norm.logsf(z), norm.logpdf(z) - math.log(params.sd))
    return float(ll.sum())


@dataclass(frozen=True)
class EMResult:
    params: Ar1Params
    iterations: int
    converged: bool
    loglik_path: tuple[float, ...] = ()

    def report(self, sample: CensoredSample) -> dict:
        return {
            "params": {"mean": self.params.mean, "persistence": self.params.persistence, "sd": self.params.sd},
            "iterations": self.iterations,
            "converged": self.converged,
            "censored_fraction": sample.censored_fraction,
            "tau": sample.tau,
        }


def em_censored_ar1(
    sample: CensoredSample,
    init: Ar1Params | None = None,
    tol: float = 1e-8,
    max_iter: int = 500,
    track_loglik: bool = False,
    variance_correction: bool = True,
) -> EMResult:
    """Impute-and-refit iteration to a fixed point.

    Starts from ``fit_ar1`` on raw bookings unless ``init`` is given and stops
    when no parameter moves by more than ``tol``.  Without convergence the
    iterate with the highest censored log-likelihood is returned.

    With ``variance_correction`` the sd update adds back the truncated-normal
    variance of each imputed value, as the exact EM M-step would; without it
    the sd is the plain OLS residual sd of the completed series and is biased
    low under heavy censoring.
    """
    if tol <= 0:
        raise ValueError("tol must be > 0")
    params = init if init is not None else fit_ar1(sample.B)
    if not params.stationary or params.sd <= 0:
        raise ValueError(f"invalid initial parameters {params}")
    path = [censored_ar1_loglik(params, sample)] if track_loglik else []
    best, best_ll = params, -math.inf
    it = 0
    for it in range(1, max_iter + 1):
        completed, _, resid_var = _impute(params, sample)
        new = fit_ar1(completed)
        if variance_correction:
            n = len(completed)
            sd = math.sqrt(new.sd**2 + resid_var[1:].sum() / (n - 3))
            new = Ar1Params(new.mean, new.persistence, sd)
        if not new.stationary or new.sd <= 0:
            break
        step = max(abs(new.mean - params.mean), abs(new.persistence - params.persistence), abs(new.sd - params.sd))
        params = new
        if track_loglik:
            path.append(censored_ar1_loglik(params, sample))
        if step < tol:
            return EMResult(params, it, True, tuple(path))
        ll = path[-1] if track_loglik else censored_ar1_loglik(params, sample)
        if ll > best_ll:
            best, best_ll = params, ll
    return EMResult(best, it, False, tuple(path))
