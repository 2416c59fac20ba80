"""Command-line entry point: ``coupled-market <command> [flags]``.

Exit codes: 0 success, 1 invalid configuration or flags, 2 runtime failure.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .censored import detect_censoring, em_censored_ar1
from .compositional import GAP_COLUMNS, gap_series, simulate_gap_compositions
from .dgp import replication_rng, simulate_market
from .forecasters import HORIZONS, SUPPLY_REFITS, ForecasterOptions, fit_ar1
from .io import read_csv_columns, write_csv, write_json
from .market import NoiseSpec, ScenarioConfig, ScenarioError, validate_scenario
from .montecarlo import AGGREGATIONS, nested_comparison, run_experiment, sensitivity_sweep
from .svg import line_chart

DEFAULT_SWEEP = ("none", "additive:2", "additive:5", "additive:10")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _window(text: str) -> tuple[int, int]:
    a, sep, b = text.partition(":")
    if not sep:
        raise argparse.ArgumentTypeError("window must look like A:B")
    return int(a), int(b)


def _noise(text: str) -> NoiseSpec:
    try:
        return NoiseSpec.parse(text)
    except (ScenarioError, ValueError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _load_config(args) -> ScenarioConfig:
    config = ScenarioConfig.load(args.config) if args.config else ScenarioConfig()
    if getattr(args, "seed", None) is not None:
        from dataclasses import replace

        config = replace(config, seed=args.seed)
    if getattr(args, "noise", None) and isinstance(args.noise, NoiseSpec):
        config = config.with_noise(args.noise)
    return validate_scenario(config)


def _options(args) -> ForecasterOptions:
    return ForecasterOptions(horizon=args.horizon, supply_refit=args.supply_refit)


def _windows(args, config):
    if not args.window:
        return None
    for a, b in args.window:
        if not (1 < a <= b <= config.horizon):
            raise UsageError(f"window {a}:{b} outside [2, {config.horizon}]")
    return args.window


def cmd_default_config(args) -> None:
    Path(args.out).write_text(ScenarioConfig().to_json() + "\n")


def cmd_simulate(args) -> None:
    config = _load_config(args)
    simulate_market(config).to_csv(args.out)


def _figure(report, path: Path) -> None:
    post = report.windows.get("post")
    series = {m: (report.periods.tolist(), report.plot[m]["error"].tolist()) for m in report.models}
    svg = line_chart(series, title="Mean forecast error (forecast - bookings)", hline=0.0,
                     vline=post[0] - 0.5 if post else None)
    path.write_text(svg)


def cmd_montecarlo(args) -> None:
    config = _load_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report = run_experiment(config, models=args.models, windows=_windows(args, config), reps=args.reps,
                            master_seed=config.seed, options=_options(args), aggregation=args.aggregation,
                            workers=args.workers)
    report.to_json(out / "report.json")
    report.to_table_csv(out / "benchmark_table.csv")
    report.to_plot_csv(out / "plot_data.csv")
    if args.svg:
        _figure(report, out / "error_paths.svg")


def cmd_sensitivity(args) -> None:
    config = _load_config(args)
    levels = args.level or [NoiseSpec.parse(s) for s in DEFAULT_SWEEP]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    reports = sensitivity_sweep(config, levels, reps=args.reps, master_seed=config.seed,
                                options=_options(args), windows=_windows(args, config))
    rows = []
    payload = []
    for level, rep in zip(levels, reports):
        payload.append({"noise": level.label(), "report": rep.to_dict()})
        for (model, window), cell in rep.cells.items():
            rows.append((level.label(), model, window, cell["rmse"]["mean"], cell["mean_bias"]["mean"],
                         cell["mae"]["mean"], cell["crps"]["mean"], cell["rmse"]["se"]))
    write_json(out / "sensitivity.json", payload)
    write_csv(out / "sensitivity.csv", ("noise", "model", "window", "rmse", "bias", "mae", "crps", "rmse_se"), rows)


def cmd_compare(args) -> None:
    config = _load_config(args)
    window = args.window[0] if args.window else None
    res = nested_comparison(config, args.base, args.augmented, reps=args.reps, master_seed=config.seed,
                            options=_options(args), window=window, lags=args.lags)
    write_json(args.out, {"summary": res.summary(), "stats": list(res.stats), "p_values": list(res.p_values)})


def cmd_estimate(args) -> None:
    cols = read_csv_columns(args.path, ("B", args.ceiling))
    sample = detect_censoring(cols["B"], cols[args.ceiling], args.tau)
    result = em_censored_ar1(sample, tol=args.tol, max_iter=args.max_iter)
    naive = fit_ar1(sample.B)
    report = result.report(sample)
    report["ceiling_column"] = args.ceiling
    report["naive_params"] = {"mean": naive.mean, "persistence": naive.persistence, "sd": naive.sd}
    if "binding" in cols:
        report["binding_fraction"] = float(np.mean(cols["binding"]))
    write_json(args.out, report)


def cmd_gap(args) -> None:
    config = _load_config(args)
    if args.K < 2 or args.shift < 0 or args.concentration <= 0 or args.reps < 1:
        raise UsageError("need K >= 2, shift >= 0, concentration > 0, reps >= 1")
    rows = []
    for r in range(args.reps):
        market_rng, comp_rng = replication_rng(config.seed, r).spawn(2)
        path = simulate_market(config, market_rng)
        search, book = simulate_gap_compositions(args.K, path.binding, args.shift, args.concentration, comp_rng)
        gaps = gap_series(search, book)
        rows += gaps.rows(path.binding, rep=r if args.reps > 1 else None)
    header = GAP_COLUMNS if args.reps == 1 else ("rep",) + GAP_COLUMNS
    write_csv(args.out, header, rows)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="coupled-market", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, reps=None):
        sp.add_argument("--config", help="scenario JSON (default: built-in benchmark scenario)")
        sp.add_argument("--seed", type=_u64, help="override the scenario seed")
        sp.add_argument("--out", required=True)
        if reps is not None:
            sp.add_argument("--reps", type=int, default=reps)

    def forecaster_flags(sp):
        sp.add_argument("--horizon", choices=HORIZONS, default="extrapolate")
        sp.add_argument("--supply-refit", choices=SUPPLY_REFITS, default="intervention")
        sp.add_argument("--window", type=_window, action="append", help="evaluation window A:B (repeatable)")

    sp = sub.add_parser("default-config", help="write the benchmark scenario as JSON")
    sp.add_argument("--out", required=True)
    sp.set_defaults(fn=cmd_default_config)

    sp = sub.add_parser("simulate", help="simulate one market path to CSV")
    common(sp)
    sp.add_argument("--noise", type=_noise, help="supply measurement noise KIND:SD")
    sp.set_defaults(fn=cmd_simulate)

    sp = sub.add_parser("montecarlo", help="replicated forecast comparison (report, benchmark table CSV, plot data)")
    common(sp, reps=500)
    forecaster_flags(sp)
    sp.add_argument("--noise", type=_noise, help="supply measurement noise KIND:SD")
    sp.add_argument("--models", nargs="+", default=["demand_only", "coupled"])
    sp.add_argument("--aggregation", choices=AGGREGATIONS, default="mean_of_reps")
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--svg", action="store_true", help="also write error_paths.svg")
    sp.set_defaults(fn=cmd_montecarlo)

    sp = sub.add_parser("sensitivity", help="coupled model under supply measurement noise")
    common(sp, reps=500)
    forecaster_flags(sp)
    sp.add_argument("--noise", dest="level", type=_noise, action="append", help="noise level KIND:SD (repeatable)")
    sp.set_defaults(fn=cmd_sensitivity)

    sp = sub.add_parser("compare", help="nested Diebold-Mariano comparison per replication")
    common(sp, reps=500)
    forecaster_flags(sp)
    sp.add_argument("--base", default="demand_only")
    sp.add_argument("--augmented", default="coupled")
    sp.add_argument("--lags", type=int, default=0)
    sp.set_defaults(fn=cmd_compare)

    sp = sub.add_parser("estimate", help="censored AR(1) estimate from a simulated path CSV")
    sp.add_argument("--path", required=True, help="CSV with a B column and the ceiling column")
    sp.add_argument("--ceiling", default="S", help="ceiling column (S or S_obs)")
    sp.add_argument("--tau", type=float, default=1e-9, help="censoring tolerance")
    sp.add_argument("--tol", type=float, default=1e-8)
    sp.add_argument("--max-iter", type=int, default=500)
    sp.add_argument("--out", required=True)
    sp.set_defaults(fn=cmd_estimate)

    sp = sub.add_parser("gap", help="synthetic search-to-booking gap series")
    common(sp, reps=1)
    sp.add_argument("--K", type=int, default=6, help="lead-time bins")
    sp.add_argument("--shift", type=float, default=1.0, help="shift strength in binding periods")
    sp.add_argument("--concentration", type=float, default=50.0)
    sp.set_defaults(fn=cmd_gap)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.fn(args)
    except (ScenarioError, UsageError) as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
