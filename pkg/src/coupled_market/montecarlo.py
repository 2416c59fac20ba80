"""Replication harness: benchmark-table experiments, noise sweeps, nested DM comparisons."""
from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import partial
from pathlib import Path
from typing import Sequence

import numpy as np

from .dgp import replication_rng, simulate_market
from .forecasters import ForecasterOptions, forecast_range
from .market import NoiseSpec, ScenarioConfig, validate_scenario
from .metrics import IndistinguishableLossesError, diebold_mariano, mase, mean_crps, point_metrics

METRICS = ("rmse", "mean_bias", "mae", "crps", "mase")
AGGREGATIONS = ("mean_of_reps", "pooled")


class ReplicationError(RuntimeError):
    def __init__(self, rep: int, cause: Exception):
        self.rep = rep
        super().__init__(f"replication {rep} failed: {cause!r}")


def default_windows(config: ScenarioConfig) -> dict[str, tuple[int, int]]:
    start, _ = forecast_range(config)
    return {"pre": (start, config.train_end), "post": (config.train_end + 1, config.horizon)}


def config_digest(config: ScenarioConfig) -> str:
    canonical = json.dumps(config.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def _window_label(w) -> str:
    return f"{w[0]}-{w[1]}"


def _normalize_windows(config, windows) -> dict[str, tuple[int, int]]:
    if windows is None:
        return default_windows(config)
    if isinstance(windows, dict):
        return {k: (int(a), int(b)) for k, (a, b) in windows.items()}
    return {_window_label(w): (int(w[0]), int(w[1])) for w in windows}


def _replicate(rep: int, config: ScenarioConfig, models: Sequence[str], windows: dict,
               options: ForecasterOptions, master_seed: int) -> dict:
    try:
        path = simulate_market(config, replication_rng(master_seed, rep))
        train = path.B[:config.train_end]
        out = {"rep": rep, "cells": {}, "errors": {}, "points": {},
               "binding": {lab: path.binding_fraction(*w) for lab, w in windows.items()}}
        for model in models:
            fc = options.run(model, path, config)
            out["points"][model] = fc.point
            out["errors"][model] = fc.point - path.B[fc.start - 1:fc.end]
            for lab, w in windows.items():
                cell = point_metrics(fc, path.B, w)
                cell["crps"] = mean_crps(fc, path.B, w)
                cell["mase"] = mase(fc, path.B, train, w)
                cell["mse"] = cell["rmse"] ** 2
                out["cells"][(model, lab)] = cell
        out["actual"] = path.B[fc.start - 1:fc.end]
        return out
    except Exception as exc:  # noqa: BLE001 - re-raised with the replication index
        raise ReplicationError(rep, exc) from exc


@dataclass
class ExperimentReport:
    reps: int
    master_seed: int
    config_digest: str
    models: tuple[str, ...]
    windows: dict[str, tuple[int, int]]
    cells: dict[tuple[str, str], dict[str, dict[str, float]]]
    binding_fraction: dict[str, float]
    aggregation: str
    options: ForecasterOptions
    periods: np.ndarray = field(repr=False)
    plot: dict[str, dict[str, np.ndarray]] = field(repr=False)
    per_rep: dict[tuple[str, str], dict[str, np.ndarray]] = field(repr=False)

    def value(self, model: str, window: str, metric: str) -> float:
        return self.cells[(model, window)][metric]["mean"]

    def se(self, model: str, window: str, metric: str) -> float | None:
        """Across-replication standard error; ``None`` for a single replication."""
        return self.cells[(model, window)][metric]["se"]

    def to_dict(self) -> dict:
        return {
            "reps": self.reps,
            "master_seed": self.master_seed,
            "config_digest": self.config_digest,
            "aggregation": self.aggregation,
            "options": {"horizon": self.options.horizon, "supply_channel": self.options.supply_channel,
                        "supply_refit": self.options.supply_refit},
            "windows": {k: list(v) for k, v in self.windows.items()},
            "binding_fraction": self.binding_fraction,
            "cells": [
                {"model": m, "window": w, **{k: v for k, v in cell.items()}}
                for (m, w), cell in self.cells.items()
            ],
        }

    def metric_rows(self) -> list[dict]:
        """Flat ``{model, window, metric, value}`` rows."""
        return [
            {"model": m, "window": w, "metric": k, "value": v["mean"]}
            for (m, w), cell in self.cells.items() for k, v in cell.items()
        ]

    def to_json(self, path: str | Path) -> None:
        from .io import write_json

        write_json(path, self.to_dict())

    def table_rows(self) -> tuple[list[str], list[list]]:
        header = ["model"]
        for lab in self.windows:
            header += [f"{lab}_rmse", f"{lab}_bias"]
        rows = []
        for m in self.models:
            row: list = [m]
            for lab in self.windows:
                row += [self.value(m, lab, "rmse"), self.value(m, lab, "mean_bias")]
            rows.append(row)
        return header, rows

    def to_table_csv(self, path: str | Path) -> None:
        from .io import write_csv

        write_csv(path, *self.table_rows())

    def to_plot_csv(self, path: str | Path) -> None:
        """One row per period per model: mean forecast, mean actual, mean error."""
        from .io import write_csv

        rows = []
        for m in self.models:
            p = self.plot[m]
            for i, t in enumerate(self.periods.tolist()):
                rows.append((t, m, p["point"][i], p["actual"][i], p["error"][i]))
        write_csv(path, ("t", "model", "mean_point", "mean_actual", "mean_error"), rows)


def _aggregate(results: list[dict], models, windows, aggregation: str) -> tuple[dict, dict]:
    n = len(results)
    cells, per_rep = {}, {}
    for m in models:
        for lab in windows:
            arr = {k: np.array([r["cells"][(m, lab)][k] for r in results]) for k in METRICS + ("mse",)}
            per_rep[(m, lab)] = arr
            cell = {}
            for k in METRICS:
                se = float(arr[k].std(ddof=1) / math.sqrt(n)) if n > 1 else None
                cell[k] = {"mean": float(arr[k].mean()), "se": se}
            if aggregation == "pooled":
                # equal-length windows: pooled MSE is the mean of per-rep MSEs
                mse = float(arr["mse"].mean())
                rmse = math.sqrt(mse)
                se = None
                if n > 1:
                    se_mse = float(arr["mse"].std(ddof=1) / math.sqrt(n))
                    se = se_mse / (2 * rmse) if rmse > 0 else 0.0
                cell["rmse"] = {"mean": rmse, "se": se}
            cells[(m, lab)] = cell
    return cells, per_rep


def run_experiment(
    config: ScenarioConfig,
    models: Sequence[str] = ("demand_only", "coupled"),
    windows=None,
    reps: int = 500,
    master_seed: int | None = None,
    options: ForecasterOptions = ForecasterOptions(),
    aggregation: str = "mean_of_reps",
    workers: int = 1,
    rep_order: Sequence[int] | None = None,
) -> ExperimentReport:
    """Simulate ``reps`` independent paths and average per-replication metrics.

    Replication ``r`` draws from a generator derived from ``(master_seed, r)``
    only, so results do not depend on execution order or ``workers``.
    ``rep_order`` permutes the processing order (used to check that).
    """
    validate_scenario(config)
    if reps < 1:
        raise ValueError("reps must be >= 1")
    if not models:
        raise ValueError("models must be nonempty")
    if aggregation not in AGGREGATIONS:
        raise ValueError(f"aggregation must be one of {AGGREGATIONS}")
    master_seed = config.seed if master_seed is None else master_seed
    windows = _normalize_windows(config, windows)
    order = list(range(reps)) if rep_order is None else list(rep_order)
    if sorted(order) != list(range(reps)):
        raise ValueError("rep_order must be a permutation of range(reps)")
    work = partial(_replicate, config=config, models=tuple(models), windows=windows,
                   options=options, master_seed=master_seed)
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(work, order, chunksize=max(1, reps // (4 * workers))))
    else:
        results = [work(r) for r in order]
    results.sort(key=lambda r: r["rep"])

    cells, per_rep = _aggregate(results, models, windows, aggregation)
    start, end = forecast_range(config)
    plot = {
        m: {
            "point": np.mean([r["points"][m] for r in results], axis=0),
            "actual": np.mean([r["actual"] for r in results], axis=0),
            "error": np.mean([r["errors"][m] for r in results], axis=0),
        }
        for m in models
    }
    binding = {lab: float(np.mean([r["binding"][lab] for r in results])) for lab in windows}
    return ExperimentReport(
        reps=reps, master_seed=master_seed, config_digest=config_digest(config), models=tuple(models),
        windows=windows, cells=cells, binding_fraction=binding, aggregation=aggregation, options=options,
        periods=np.arange(start, end + 1), plot=plot, per_rep=per_rep,
    )


def sensitivity_sweep(
    config: ScenarioConfig,
    noise_levels: Sequence[NoiseSpec],
    reps: int = 500,
    master_seed: int | None = None,
    options: ForecasterOptions = ForecasterOptions(),
    models: Sequence[str] = ("demand_only", "coupled"),
    **kwargs,
) -> list[ExperimentReport]:
    """One report per supply-noise level; the coupled model reads the noisy proxy."""
    if not noise_levels:
        raise ValueError("noise_levels must be nonempty")
    noisy = replace(options, supply_channel="observed_S")
    return [
        run_experiment(config.with_noise(level), models, reps=reps, master_seed=master_seed,
                       options=noisy, **kwargs)
        for level in noise_levels
    ]


@dataclass(frozen=True)
class NestedComparison:
    base_model: str
    augmented_model: str
    window: tuple[int, int]
    stats: tuple[float | None, ...]
    p_values: tuple[float | None, ...]
    alpha: float

    @property
    def indistinguishable(self) -> int:
        return sum(s is None for s in self.stats)

    @property
    def rejection_fraction(self) -> float:
        return sum(p is not None and p < self.alpha for p in self.p_values) / len(self.p_values)

    def summary(self) -> dict:
        valid = [s for s in self.stats if s is not None]
        return {
            "base_model": self.base_model,
            "augmented_model": self.augmented_model,
            "window": list(self.window),
            "reps": len(self.stats),
            "alpha": self.alpha,
            "rejection_fraction": self.rejection_fraction,
            "indistinguishable": self.indistinguishable,
            "mean_stat": float(np.mean(valid)) if valid else None,
        }


def nested_comparison(
    config: ScenarioConfig,
    base_model: str = "demand_only",
    augmented_model: str = "coupled",
    reps: int = 500,
    master_seed: int | None = None,
    options: ForecasterOptions = ForecasterOptions(),
    window: tuple[int, int] | None = None,
    alpha: float = 0.05,
    lags: int = 0,
) -> NestedComparison:
    """Per-replication DM test of squared-error losses, base vs augmented.

    A positive statistic means the base model has the larger loss.
    Replications whose losses coincide are recorded as ``None`` and count
    as non-rejections.
    """
    validate_scenario(config)
    master_seed = config.seed if master_seed is None else master_seed
    window = window or default_windows(config)["post"]
    stats, pvals = [], []
    for rep in range(reps):
        path = simulate_market(config, replication_rng(master_seed, rep))
        fa = options.run(base_model, path, config)
        fb = options.run(augmented_model, path, config)
        actual = path.B[window[0] - 1:window[1]]
        la = (fa.point[fa.index(*window)] - actual) ** 2
        lb = (fb.point[fb.index(*window)] - actual) ** 2
        try:
            res = diebold_mariano(la, lb, lags=lags)
            stats.append(res.stat)
            pvals.append(res.p_two_sided)
        except IndistinguishableLossesError:
            stats.append(None)
            pvals.append(None)
    return NestedComparison(base_model, augmented_model, tuple(window), tuple(stats), tuple(pvals), alpha)
