"""Command-line surface tying the pipeline together.

Subcommands cover the full workflow: synthesize a dataset, inspect the
per-hour probability distributions, generate scenarios for one day, plan a
day ahead, simulate a policy over a window, and compare all four policies.

Exit codes: 0 success, 1 usage, 2 data or configuration error, 3 solver
limit.  All commands are deterministic given (dataset, config, seed).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np
import yaml

from .config import (
    STREAM_FORECAST,
    STREAM_SCENARIO,
    PlantConfig,
    RunConfig,
    load_config,
    spawn_rng,
    update_config,
)
from .data import (
    SYNTH_DAYS,
    DataError,
    Dataset,
    eval_window,
    ingest,
    synthetic_dataset,
    write_csv,
)
from .dispatch import DaySchedule, schedule_to_csv
from .forecast import NoisyOracle, Oracle, Persistence
from .plots import matrix_heatmap, scenario_fan
from .policies import PolicyKind, build_scenarios, make_day_plan
from .probability import hourly_stats, matrix_to_csv
from .scenarios import scenarios_to_csv
from .simulate import (
    _history_before,
    build_plan_context,
    hourly_log_to_csv,
    metrics_to_csv,
    run_horizon,
)
from .solar import GeoLocation, day_of_year_index
from .solver import OPTIMAL, SolverError, SolverOptions

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_SOLVER = 3

_PLANNING = [PolicyKind.DETERMINISTIC, PolicyKind.IDEAL_FORECAST,
             PolicyKind.STOCHASTIC]


def _date_arg(text: str) -> np.datetime64:
    try:
        return np.datetime64(text, "D")
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad date {text!r}, want YYYY-MM-DD")


def _add_common(sub: argparse.ArgumentParser, data: bool = True) -> None:
    sub.add_argument("--config", default=None, help="YAML run configuration")
    sub.add_argument("--seed", type=int, default=None, help="override config seed")
    sub.add_argument("--out", default="out", help="output directory")
    if data:
        sub.add_argument("--data", required=True, help="dataset CSV")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="homedispatch",
        description="forecast-driven battery dispatch for a PV + storage building",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth-data", help="write the bundled synthetic dataset")
    _add_common(p, data=False)
    p.add_argument("--days", type=int, default=SYNTH_DAYS)
    p.set_defaults(cmd=_cmd_synth_data)

    p = sub.add_parser("build-probs", help="per-hour class distributions as CSV + SVG")
    _add_common(p)
    p.set_defaults(cmd=_cmd_build_probs)

    p = sub.add_parser("gen-scenarios", help="scenario set for one day as CSV + SVG")
    _add_common(p)
    p.add_argument("--date", type=_date_arg, required=True)
    p.add_argument("--provider", choices=("oracle", "noisy", "persistence"))
    p.set_defaults(cmd=_cmd_gen_scenarios)

    p = sub.add_parser("plan-day", help="day-ahead schedule for one policy")
    _add_common(p)
    p.add_argument("--date", type=_date_arg, required=True)
    p.add_argument("--policy", required=True,
                   choices=[k.value for k in _PLANNING])
    p.add_argument("--provider", choices=("oracle", "noisy", "persistence"))
    p.add_argument("--max-nodes", type=int, default=None,
                   help="branch-and-bound node budget")
    p.set_defaults(cmd=_cmd_plan_day)

    p = sub.add_parser("simulate", help="closed-loop run of one policy")
    _add_common(p)
    p.add_argument("--from", dest="start", type=_date_arg, default=None)
    p.add_argument("--to", dest="end", type=_date_arg, default=None)
    p.add_argument("--policy", required=True,
                   choices=[k.value for k in PolicyKind])
    p.add_argument("--provider", choices=("oracle", "noisy", "persistence"))
    p.set_defaults(cmd=_cmd_simulate)

    p = sub.add_parser("report", help="all four policies side by side")
    _add_common(p)
    p.add_argument("--from", dest="start", type=_date_arg, default=None)
    p.add_argument("--to", dest="end", type=_date_arg, default=None)
    p.add_argument("--provider", choices=("oracle", "noisy", "persistence"))
    p.set_defaults(cmd=_cmd_report)

    return parser


def _setup(args) -> tuple[RunConfig, Path]:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = update_config(cfg, seed=args.seed)
    if getattr(args, "provider", None):
        cfg = update_config(cfg, provider=args.provider)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return cfg, out


def _location(cfg: RunConfig) -> GeoLocation:
    return GeoLocation(latitude=cfg.latitude, longitude=cfg.longitude)


def _make_forecaster(cfg: RunConfig, dataset: Dataset, start: np.datetime64):
    """Provider instance; noise scales come from history before `start`."""
    loc = _location(cfg)
    if cfg.provider == "oracle":
        return Oracle(loc)
    if cfg.provider == "persistence":
        return Persistence(loc)
    hist = _history_before(dataset, start)
    gen_stats = hourly_stats(hist.timestamps, hist.pv_kw)
    dem_stats = hourly_stats(hist.timestamps, hist.demand_kw)
    return NoisyOracle(loc, gen_stats, dem_stats, cfg.alpha_gen, cfg.alpha_dem)


def _window(cfg: RunConfig, dataset: Dataset, args) -> tuple[np.datetime64, np.datetime64]:
    """Simulation days: CLI flags beat config dates beat the default window."""
    start = args.start
    end = args.end
    if start is None and cfg.sim_start is not None:
        start = np.datetime64(str(cfg.sim_start), "D")
    if end is None and cfg.sim_end is not None:
        end = np.datetime64(str(cfg.sim_end), "D")
    if start is None or end is None:
        try:
            _, ev = eval_window(dataset)
        except DataError as exc:
            raise DataError(f"{exc}; pass --from/--to for short datasets")
        start = ev[0] if start is None else start
        end = ev[-1] if end is None else end
    if start > end:
        raise DataError(f"window start {start} after end {end}")
    return start, end


def _cmd_synth_data(args) -> int:
    cfg, out = _setup(args)
    ds = synthetic_dataset(seed=cfg.seed, plant=cfg.plant, loc=_location(cfg),
                           n_days=args.days)
    path = out / "synthetic.csv"
    write_csv(ds, path)
    print(f"wrote {path} ({ds.n_hours} hours, seed {cfg.seed})")
    return EXIT_OK


def _cmd_build_probs(args) -> int:
    cfg, out = _setup(args)
    ds = ingest(args.data)
    dates = ds.dates()
    if dates.size == 0:
        raise DataError("dataset holds no complete day")
    # distributions over the entire dataset: history boundary past the end
    ctx = build_plan_context(ds, dates[-1] + np.timedelta64(1, "D"),
                             _location(cfg), cfg.plant, cfg)
    emitted = []
    for matrix, stem in ((ctx.hist_gen, "probs_generation"),
                         (ctx.hist_dem, "probs_demand")):
        matrix_to_csv(matrix, out / f"{stem}.csv")
        matrix_heatmap(matrix, out / f"{stem}.svg")
        emitted += [out / f"{stem}.csv", out / f"{stem}.svg"]
    for p in emitted:
        print(f"wrote {p}")
    return EXIT_OK


def _cmd_gen_scenarios(args) -> int:
    cfg, out = _setup(args)
    ds = ingest(args.data)
    date = args.date
    ctx = build_plan_context(ds, date, _location(cfg), cfg.plant, cfg)
    forecaster = _make_forecaster(cfg, ds, date)
    ordinal = int(date.astype(int))
    forecast = forecaster.forecast(ds, date,
                                   spawn_rng(cfg.seed, STREAM_FORECAST, ordinal))
    doy = int(day_of_year_index(date))
    scen = build_scenarios(forecast, ctx, doy,
                           spawn_rng(cfg.seed, STREAM_SCENARIO, ordinal))
    csv_path = out / f"scenarios_{date}.csv"
    svg_path = out / f"scenarios_{date}.svg"
    scenarios_to_csv(scen, csv_path)
    scenario_fan(scen, svg_path, date_label=str(date))
    print(f"wrote {csv_path}")
    print(f"wrote {svg_path}")
    return EXIT_OK


def _cmd_plan_day(args) -> int:
    cfg, out = _setup(args)
    ds = ingest(args.data)
    date = args.date
    policy = PolicyKind(args.policy)
    loc = _location(cfg)
    tariffs = ds.day_tariffs(date)
    actuals = Oracle(loc).forecast(ds, date)
    ordinal = int(date.astype(int))
    forecast = actuals
    if policy is not PolicyKind.IDEAL_FORECAST:
        forecaster = _make_forecaster(cfg, ds, date)
        forecast = forecaster.forecast(ds, date,
                                       spawn_rng(cfg.seed, STREAM_FORECAST, ordinal))
    ctx = None
    if policy is PolicyKind.STOCHASTIC:
        ctx = build_plan_context(ds, date, loc, cfg.plant, cfg)
    opts = SolverOptions() if args.max_nodes is None else \
        SolverOptions(max_nodes=args.max_nodes)
    doy = int(day_of_year_index(date))
    plan = make_day_plan(policy, forecast, actuals, ctx, doy, tariffs,
                         cfg.plant, cfg.plant.soc_init,
                         spawn_rng(cfg.seed, STREAM_SCENARIO, ordinal), opts)
    assert isinstance(plan, DaySchedule)
    if plan.status != OPTIMAL:
        print(f"solver stopped with status {plan.status!r} "
              f"({plan.nodes_explored} nodes)", file=sys.stderr)
        return EXIT_SOLVER
    path = out / f"plan_{date}_{policy.value}.csv"
    with open(path, "w", newline="") as fh:
        schedule_to_csv(plan, fh)
    print(f"wrote {path}")
    print(f"{date} {policy.value}: expected cost {plan.expected_cost:.4f} EUR")
    return EXIT_OK


def _cmd_simulate(args) -> int:
    cfg, out = _setup(args)
    ds = ingest(args.data)
    policy = PolicyKind(args.policy)
    start, end = _window(cfg, ds, args)
    if policy in (PolicyKind.DETERMINISTIC, PolicyKind.STOCHASTIC):
        forecaster = _make_forecaster(cfg, ds, start)
    else:
        forecaster = Oracle(_location(cfg))  # never consulted
    report, records = run_horizon(ds, policy, forecaster, cfg.plant, cfg,
                                  start=start, end=end)
    log_path = out / f"hourly_{policy.value}.csv"
    with open(log_path, "w", newline="") as fh:
        hourly_log_to_csv(records, policy, fh)
    metrics_path = out / f"metrics_{policy.value}.csv"
    with open(metrics_path, "w", newline="") as fh:
        metrics_to_csv({policy: report}, fh)
    print(f"wrote {log_path}")
    print(f"wrote {metrics_path}")
    print(_format_table({policy: report}))
    return EXIT_OK


def _cmd_report(args) -> int:
    cfg, out = _setup(args)
    ds = ingest(args.data)
    start, end = _window(cfg, ds, args)
    forecaster = _make_forecaster(cfg, ds, start)
    reports = {}
    for policy in PolicyKind:
        report, records = run_horizon(ds, policy, forecaster, cfg.plant, cfg,
                                      start=start, end=end)
        reports[policy] = report
        with open(out / f"hourly_{policy.value}.csv", "w", newline="") as fh:
            hourly_log_to_csv(records, policy, fh)
    path = out / "report.csv"
    with open(path, "w", newline="") as fh:
        metrics_to_csv(reports, fh)
    print(f"wrote {path}")
    print(_format_table(reports))
    return EXIT_OK


def _format_table(reports) -> str:
    head = (f"{'policy':<16}{'SFR %':>10}{'AEB EUR':>12}{'ABCL %':>10}"
            f"{'TIEG kWh':>12}{'TEEG kWh':>12}")
    lines = [head, "-" * len(head)]
    for kind, m in reports.items():
        lines.append(f"{kind.value:<16}{m.sfr:>10.2f}{m.aeb:>12.2f}"
                     f"{m.abcl:>10.2f}{m.tieg:>12.2f}{m.teeg:>12.2f}")
    return "\n".join(lines)


def run_command(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else EXIT_USAGE
        return EXIT_OK if code == 0 else EXIT_USAGE
    try:
        return args.cmd(args)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (OSError, ValueError, yaml.YAMLError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except SolverError as exc:
        print(f"solver: {exc}", file=sys.stderr)
        return EXIT_SOLVER


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
