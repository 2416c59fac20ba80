"""Point metrics, CRPS and the Diebold-Mariano comparison.

Bias is ``mean(forecast - actual)``: over-prediction is positive.
``actual`` arguments are full period-indexed series (period ``t`` at index
``t - 1``), so a forecast and its actuals line up by period number.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .forecasters import ForecastSeries

_INV_SQRT_PI = 1.0 / math.sqrt(math.pi)


class IndistinguishableLossesError(ValueError):
    """The loss differential has zero variance, so the DM statistic is undefined."""


def _window_errors(forecast: ForecastSeries, actual, window: tuple[int, int] | None) -> tuple[np.ndarray, np.ndarray]:
    a, b = window if window is not None else (forecast.start, forecast.end)
    if b < a:
        raise ValueError("empty window")
    sl = forecast.index(a, b)
    actual = np.asarray(actual, dtype=float)
    if len(actual) < b:
        raise ValueError(f"actual covers {len(actual)} periods, window ends at {b}")
    return forecast.point[sl], actual[a - 1:b]


def point_metrics(forecast: ForecastSeries, actual, window: tuple[int, int] | None = None) -> dict[str, float]:
    pred, obs = _window_errors(forecast, actual, window)
    err = pred - obs
    return {
        "rmse": float(np.sqrt(np.mean(err**2))),
        "mae": float(np.mean(np.abs(err))),
        "mean_bias": float(np.mean(err)),
    }


def naive_scale(train) -> float:
    """In-sample one-step naive MAE, the MASE denominator."""
    train = np.asarray(train, dtype=float)
    if len(train) < 2:
        raise ValueError("training series needs at least 2 points")
    scale = float(np.mean(np.abs(np.diff(train))))
    if scale == 0:
        raise ZeroDivisionError("constant training series: naive MAE is zero")
    return scale


def mase(forecast: ForecastSeries, actual, train, window: tuple[int, int] | None = None) -> float:
    pred, obs = _window_errors(forecast, actual, window)
    return float(np.mean(np.abs(pred - obs))) / naive_scale(train)


def crps_gaussian(mean, sd, y):
    """Closed-form CRPS of N(mean, sd^2) at ``y``; vectorized.

    ``sd == 0`` gives the point-mass value ``|y - mean|``.
    """
    mean, sd, y = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (mean, sd, y)))
    shape = mean.shape
    mean, sd, y = mean.ravel(), sd.ravel(), y.ravel()
    if np.any(sd < 0):
        raise ValueError("sd must be >= 0")
    out = np.abs(y - mean)
    pos = sd > 0
    if np.any(pos):
        s = sd[pos]
        z = (y[pos] - mean[pos]) / s
        out[pos] = s * (z * (2 * norm.cdf(z) - 1) + 2 * norm.pdf(z) - _INV_SQRT_PI)
    return float(out[0]) if shape == () else out.reshape(shape)


def crps_empirical(samples, y: float) -> float:
    """CRPS of the empirical distribution of ``samples`` at ``y``.

    Uses ``E|X - y| - E|X - X'| / 2`` with the all-pairs (V-statistic) mean,
    evaluated in O(n log n) from the sorted sample.
    """
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    n = len(x)
    if n == 0:
        raise ValueError("need at least one sample")
    first = np.mean(np.abs(x - y))
    ranks = 2 * np.arange(1, n + 1) - n - 1
    spread = 2.0 * np.dot(ranks, x) / n**2
    return float(first - 0.5 * spread)


def mean_crps(forecast: ForecastSeries, actual, window: tuple[int, int] | None = None) -> float:
    pred, obs = _window_errors(forecast, actual, window)
    a, b = window if window is not None else (forecast.start, forecast.end)
    sd = forecast.predictive_sd[forecast.index(a, b)]
    return float(np.mean(crps_gaussian(pred, sd, obs)))


@dataclass(frozen=True)
class DMResult:
    stat: float
    p_two_sided: float
    mean_diff: float
    n: int


def diebold_mariano(loss_a, loss_b, lags: int = 0) -> DMResult:
    """Test equal expected loss from two loss series.

    ``d_t = loss_a - loss_b``; the statistic is ``mean(d) / sqrt(V / n)``
    where ``V`` is the lag-0 autocovariance, plus Bartlett-weighted
    autocovariances up to ``lags`` when requested.  Positive values mean
    ``a`` has the larger loss.  p-values come from the standard normal.
    """
    a = np.asarray(loss_a, dtype=float)
    b = np.asarray(loss_b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("loss series must have equal length")
    n = len(a)
    if n < 10:
        raise ValueError(f"need at least 10 loss pairs, got {n}")
    d = a - b
    dc = d - d.mean()
    var = dc @ dc / n
    for k in range(1, lags + 1):
        var += 2 * (1 - k / (lags + 1)) * (dc[k:] @ dc[:-k]) / n
    scale = max(1.0, float(np.max(np.abs(d))))
    if var <= (1e-12 * scale) ** 2:
        raise IndistinguishableLossesError("loss differential has zero variance")
    stat = float(d.mean() / math.sqrt(var / n))
    return DMResult(stat, float(2 * norm.sf(abs(stat))), float(d.mean()), n)
