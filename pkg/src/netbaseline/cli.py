"""Command-line entry points.

Subcommands: simulate, ingest, fit, test, power, export-plots. Flags
override config-file values, which override defaults; every run writes its
fully resolved config next to (and inside) its outputs so a run can be
reproduced from the outputs alone.

Exit codes: 0 success, 1 usage or config error, 2 data validation error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .errors import (
    DegenerateLikelihoodError,
    EmptyRiskRegionError,
    IntensityBoundError,
    NetBaselineError,
    NumericalError,
    PanelFormatError,
)
from .estimators import FitOptions, fit_mle, fit_partial
from .gof import TestOptions, default_bandwidth, edge_fraction_curve, run_test
from .ingest import (
    NetworkRule,
    build_active_network,
    build_baseline_features,
    build_pair_panel,
    load_distances,
    load_trips,
    load_weather,
    parse_timestamp,
)
from .kernels import KERNEL_SHAPES, KernelSpec, QuadratureGrid, kernel_event_sum
from .model import (
    LinkSpec,
    ModelSpec,
    StudyDesign,
    clock_baseline,
    constant_baseline,
)
from .panel import validate_panel
from .panel_io import read_panel, write_panel
from .simulate import BumpSpec, SimConfig, simulate_study
from .studies import StudyConfig, calibrate_boundary_bump, run_study

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class CliUsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliUsageError(message)


def _fmt(x: float) -> str:
    return repr(float(x))


def _write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_curve_csv(path: Path, t, values) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "value"])
        for a, b in zip(t, values):
            writer.writerow([_fmt(a), _fmt(b)])


def _parse_interval(value) -> tuple[float, float]:
    if isinstance(value, str):
        parts = value.split(",")
    else:
        parts = list(value)
    if len(parts) != 2:
        raise CliUsageError(f"interval must be 'a,b', got {value!r}")
    try:
        a, b = float(parts[0]), float(parts[1])
    except (TypeError, ValueError):
        raise CliUsageError(f"interval must be numeric, got {value!r}")
    if not a < b:
        raise CliUsageError(f"interval needs a < b, got {value!r}")
    return a, b


def _parse_floats(value) -> list[float]:
    if isinstance(value, str):
        parts = [p for p in value.split(",") if p.strip()]
    else:
        parts = list(value)
    try:
        return [float(p) for p in parts]
    except (TypeError, ValueError):
        raise CliUsageError(f"expected a comma-separated number list, got {value!r}")


class Resolver:
    """Flag > config file > default, recording what was resolved."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.file: dict = {}
        if getattr(args, "config", None):
            path = Path(args.config)
            if not path.exists():
                raise CliUsageError(f"config file not found: {path}")
            try:
                with open(path, encoding="utf-8") as fh:
                    self.file = json.load(fh)
            except json.JSONDecodeError as err:
                raise CliUsageError(f"config file is not valid JSON: {err}")
            if not isinstance(self.file, dict):
                raise CliUsageError("config file must hold a JSON object")
        self.resolved: dict = {}

    def get(self, key: str, default=None, cast=None, required=False):
        value = getattr(self.args, key, None)
        if value is None:
            value = self.file.get(key, default)
        if value is None:
            value = default
        if value is None and required:
            raise CliUsageError(f"missing required option --{key.replace('_', '-')}")
        if cast is not None and value is not None:
            value = cast(value)
        self.resolved[key] = value
        return value


def _out_dir(resolver: Resolver) -> Path:
    out = resolver.get("out", required=True)
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _jsonable(value):
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, tuple):
        return list(value)
    return value


def _echo_config(resolver: Resolver, command: str) -> dict:
    # the output directory is wherever the file sits; echoing it would make
    # otherwise-identical runs differ byte for byte
    return {
        "command": command,
        **{k: _jsonable(v) for k, v in sorted(resolver.resolved.items())
           if k != "out"},
    }


def _load_panel_dir(resolver: Resolver):
    panel_dir = resolver.get("panel", required=True)
    panel, system, meta = read_panel(panel_dir)
    return Path(panel_dir), panel, system, meta


def _validate_or_die(panel) -> None:
    report = validate_panel(panel)
    if not report.ok:
        for violation in report.violations[:20]:
            print(f"validation: {violation}", file=sys.stderr)
        extra = len(report.violations) - 20
        if extra > 0:
            print(f"validation: ... and {extra} more", file=sys.stderr)
        raise PanelFormatError(f"panel failed validation with "
                               f"{len(report.violations)} violation(s)")


_BASELINE_CHOICES = ("constant", "clock1", "clock2", "clock3")


def _named_baseline(name: str):
    if name == "constant":
        return constant_baseline()
    if name.startswith("clock") and name[len("clock"):].isdigit():
        return clock_baseline(int(name[len("clock"):]))
    raise CliUsageError(f"unknown baseline {name!r}")


def _resolve_model(resolver: Resolver, panel_dir: Path, panel, system) -> ModelSpec:
    model_path = resolver.get("model")
    if model_path is None:
        candidate = panel_dir / "model.json"
        if candidate.exists():
            model_path = str(candidate)
            resolver.resolved["model"] = model_path
    if model_path is not None:
        try:
            with open(model_path, encoding="utf-8") as fh:
                payload = json.load(fh)
        except (OSError, json.JSONDecodeError) as err:
            raise CliUsageError(f"cannot read model file {model_path}: {err}")
        payload = payload.get("model", payload)
        model = ModelSpec.from_dict(payload, system=system)
    else:
        baseline = _named_baseline(resolver.get("baseline", default="constant"))
        model = ModelSpec(
            link=LinkSpec(kind="exp_linear", dimension=panel.covariate_dim),
            baseline=baseline,
            directed=panel.directed,
        )
    if model.link.dimension != panel.covariate_dim:
        raise PanelFormatError(
            f"model expects {model.link.dimension} covariates, panel has "
            f"{panel.covariate_dim}"
        )
    if model.directed != panel.directed:
        raise PanelFormatError("model and panel disagree about directedness")
    return model


def _test_options(resolver: Resolver) -> TestOptions:
    return TestOptions(
        bandwidth_hours=resolver.get("bandwidth_hours", cast=float),
        kernel_shape=resolver.get("kernel", default="triangular"),
        grid_size=resolver.get("grid_size", default=4096, cast=int),
        clamp=not resolver.get("no_clamp", default=False, cast=bool),
        fit_options=FitOptions(),
    )


# ---------------------------------------------------------------- simulate


def _sim_config(resolver: Resolver) -> SimConfig:
    raw = dict(resolver.file)
    raw["n_vertices"] = resolver.get(
        "n_vertices", default=raw.get("n_vertices"), cast=int, required=True
    )
    raw["horizon"] = resolver.get(
        "horizon", default=raw.get("horizon"), cast=float, required=True
    )
    seed = resolver.get("seed", cast=int)
    if seed is not None:
        raw["seed"] = seed
    if getattr(resolver.args, "directed", False):
        raw["directed"] = True
    if "baseline" not in raw:
        raw["baseline"] = constant_baseline().describe()
        raw.setdefault("theta", [0.0])
    if isinstance(raw["baseline"], str):
        # named shorthand, same vocabulary as `fit --baseline`
        raw["baseline"] = _named_baseline(raw["baseline"]).describe()
    raw.setdefault("theta", [0.0] * len(raw["baseline"].get("terms", [])))
    raw.setdefault("beta", [])
    try:
        config = SimConfig.from_dict(raw)
    except (KeyError, ValueError, TypeError) as err:
        raise CliUsageError(f"invalid simulation config: {err}")
    resolver.resolved["sim"] = config.describe()
    return config


def cmd_simulate(args: argparse.Namespace) -> int:
    resolver = Resolver(args)
    out = _out_dir(resolver)
    config = _sim_config(resolver)
    panel, truth = simulate_study(config)
    write_panel(panel, out)
    payload = truth.to_dict()
    payload["resolved_config"] = _echo_config(resolver, "simulate")
    _write_json(out / "truth.json", payload)
    print(f"simulated {panel.n_events} events over {panel.r_n} pairs "
          f"into {out}")
    return EXIT_OK


# ------------------------------------------------------------------ ingest


def cmd_ingest(args: argparse.Namespace) -> int:
    resolver = Resolver(args)
    out = _out_dir(resolver)
    trips_path = resolver.get("trips", required=True)
    weather_path = resolver.get("weather", required=True)
    distances_path = resolver.get("distances", required=True)
    origin = parse_timestamp(resolver.get("origin", required=True))
    horizon = resolver.get("horizon", cast=float, required=True)
    window_start = parse_timestamp(resolver.get("window_start", required=True))
    window_end = parse_timestamp(resolver.get("window_end", required=True))
    min_trips = resolver.get("min_trips", default=10, cast=int)
    offset = resolver.get("temperature_offset", default=0.0, cast=float)
    max_gap = resolver.get("max_gap_hours", default=3.0, cast=float)

    trips, trip_report = load_trips(trips_path)
    weather, weather_report = load_weather(weather_path)
    distances, distance_report = load_distances(distances_path)
    failures = []
    for report in (trip_report, weather_report, distance_report):
        for warning in report.warnings:
            print(f"warning: {warning}", file=sys.stderr)
        failures.extend(report.errors)
    if failures:
        for line in failures[:20]:
            print(f"error: {line}", file=sys.stderr)
        if len(failures) > 20:
            print(f"error: ... and {len(failures) - 20} more", file=sys.stderr)
        raise PanelFormatError(f"{len(failures)} malformed input row(s)")

    rule = NetworkRule(window_start=window_start, window_end=window_end,
                       min_trips=min_trips)
    network = build_active_network(trips, rule)
    panel, stats, stations = build_pair_panel(trips, network, distances,
                                              horizon, origin)
    baseline, system = build_baseline_features(
        weather, horizon, origin, temperature_offset=offset,
        max_gap_hours=max_gap,
    )
    _validate_or_die(panel)

    write_panel(
        panel,
        out,
        system=system,
        covariate_names=["log_minutes", "log_minutes_sq"],
        vertex_labels=stations,
    )
    model = ModelSpec(
        link=LinkSpec(kind="exp_linear", dimension=2),
        baseline=baseline,
        directed=True,
    )
    _write_json(
        out / "model.json",
        {
            "model": model.describe(),
            "feature_names": list(baseline.feature_names),
            "origin": origin.isoformat(),
            "origin_weekday": origin.weekday(),
            "stats": stats.to_dict(),
            "resolved_config": _echo_config(resolver, "ingest"),
        },
    )
    print(f"ingested {stats.n_events} events on {stats.n_pairs} pairs "
          f"({stats.n_stations} stations) into {out}")
    return EXIT_OK


# --------------------------------------------------------------------- fit


def cmd_fit(args: argparse.Namespace) -> int:
    resolver = Resolver(args)
    out = _out_dir(resolver)
    panel_dir, panel, system, _ = _load_panel_dir(resolver)
    _validate_or_die(panel)
    model = _resolve_model(resolver, panel_dir, panel, system)
    interval = resolver.get(
        "fit_interval", default=(0.0, panel.horizon), cast=_parse_interval
    )
    options = FitOptions()
    parametric = fit_mle(panel, model.baseline, model.link, interval, options)
    partial = fit_partial(panel, model.link, interval, options)
    _write_json(
        out / "fit.json",
        {
            "parametric": parametric.to_dict(),
            "partial": partial.to_dict(),
            "interval": list(interval),
            "feature_names": list(model.baseline.feature_names),
            "model": model.describe(),
            "resolved_config": _echo_config(resolver, "fit"),
        },
    )
    print(f"fit written to {out / 'fit.json'}")
    return EXIT_OK


# -------------------------------------------------------------------- test


def cmd_test(args: argparse.Namespace) -> int:
    resolver = Resolver(args)
    out = _out_dir(resolver)
    panel_dir, panel, system, _ = _load_panel_dir(resolver)
    _validate_or_die(panel)
    model = _resolve_model(resolver, panel_dir, panel, system)
    design = StudyDesign(
        fit_interval=resolver.get("fit_interval", cast=_parse_interval,
                                  required=True),
        test_interval=resolver.get("test_interval", cast=_parse_interval,
                                   required=True),
    )
    options = _test_options(resolver)
    report = run_test(panel, design, model, options)
    payload = report.to_dict()
    payload["resolved_config"] = _echo_config(resolver, "test")
    _write_json(out / "report.json", payload)
    for name, curve in (report.curves or {}).items():
        _write_curve_csv(out / f"curve_{name}.csv", curve.grid.points,
                         curve.values)
    print(f"z = {report.z:.4f}, p = {report.p_value:.4g}; "
          f"report written to {out / 'report.json'}")
    return EXIT_OK


# ------------------------------------------------------------------- power


def cmd_power(args: argparse.Namespace) -> int:
    resolver = Resolver(args)
    out = _out_dir(resolver)
    replications = resolver.get("replications", cast=int, required=True)
    if replications < 1:
        raise CliUsageError("replications must be at least 1")
    design = StudyDesign(
        fit_interval=resolver.get("fit_interval", cast=_parse_interval,
                                  required=True),
        test_interval=resolver.get("test_interval", cast=_parse_interval,
                                   required=True),
    )
    threads = resolver.get("threads", default=1, cast=int)
    options = _test_options(resolver)
    base = _sim_config(resolver)
    c_values = resolver.get("c_values", default=[0.0], cast=_parse_floats)
    center = resolver.get("bump_center", cast=float)
    width = resolver.get("bump_width", default=24.0, cast=float)
    if center is None:
        c, d = design.test_interval
        center = (c + d) / 2.0
        resolver.resolved["bump_center"] = center

    summaries = []
    for c in c_values:
        if c == 0.0:
            sim = SimConfig.from_dict({**base.describe(), "bump": None})
            calibration = None
        else:
            bump, calibration = calibrate_boundary_bump(
                base, design, center=center, width=width, c=c, options=options
            )
            sim = SimConfig.from_dict({**base.describe(),
                                       "bump": bump.describe()})
        study = StudyConfig(
            sim=sim,
            design=design,
            n_replications=replications,
            master_seed=base.seed,
            test_options=options,
            threads=threads,
        )
        result = run_study(study)
        rates = result.rejection_rates()
        summary = result.to_dict()
        summary["c"] = c
        summary["calibration"] = calibration
        summaries.append(summary)
        shown = ", ".join(f"{lvl}: {rate:.3f}" for lvl, rate in rates.items())
        print(f"c = {c:g}: {shown} ({result.n_failed} failed)")

    levels = sorted(options.levels, reverse=True)
    with open(out / "power.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["c", "amplitude", "n_completed", "n_failed", "mean_z"]
            + [f"reject_{lvl:.2f}" for lvl in levels]
        )
        for summary in summaries:
            amp = (summary["calibration"] or {}).get("amplitude", 0.0)
            rates = summary["rejection_rates"]
            writer.writerow(
                [
                    _fmt(summary["c"]),
                    _fmt(amp),
                    summary["n_completed"],
                    summary["n_failed"],
                    _fmt(summary["mean_z"]) if summary["mean_z"] is not None
                    else "",
                ]
                + [_fmt(rates.get(f"{lvl:.2f}", float("nan"))) for lvl in levels]
            )
    _write_json(
        out / "power.json",
        {
            "studies": summaries,
            "resolved_config": _echo_config(resolver, "power"),
        },
    )
    print(f"power table written to {out / 'power.csv'}")
    return EXIT_OK


# ------------------------------------------------------------ export-plots


def cmd_export_plots(args: argparse.Namespace) -> int:
    resolver = Resolver(args)
    out = _out_dir(resolver)
    _, panel, _, _ = _load_panel_dir(resolver)
    grid = QuadratureGrid(
        horizon=panel.horizon,
        size=resolver.get("grid_size", default=4096, cast=int),
    )
    fraction, _ = edge_fraction_curve(panel, grid, clamp=False)
    _write_curve_csv(out / "edge_fraction.csv", grid.points, fraction)

    times = np.sort(np.concatenate([rec.events for rec in panel.pairs]))
    if times.size == 0:
        print("warning: panel has no events; density curve is empty",
              file=sys.stderr)
        _write_curve_csv(out / "event_density.csv", [], [])
    else:
        h = resolver.get("bandwidth_hours", cast=float)
        if h is None:
            h = default_bandwidth(panel, grid)
            resolver.resolved["bandwidth_hours"] = h
        kernel = KernelSpec(
            shape=resolver.get("kernel", default="triangular"), bandwidth=h
        )
        density = kernel_event_sum(kernel, grid, times,
                                   np.full(times.size, 1.0 / times.size))
        mass = grid.integrate(density)
        if mass > 0:
            density = density / mass
        _write_curve_csv(out / "event_density.csv", grid.points, density)
    _write_json(
        out / "plots.json",
        {"resolved_config": _echo_config(resolver, "export-plots")},
    )
    print(f"plot data written to {out}")
    return EXIT_OK


# ----------------------------------------------------------------- parser


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="JSON config file; flags override it")
    sub.add_argument("--out", help="output directory")
    sub.add_argument("--seed", type=int, help="master RNG seed")
    sub.add_argument("--bandwidth-hours", dest="bandwidth_hours", type=float,
                     help="kernel bandwidth in hours")
    sub.add_argument("--kernel", choices=list(KERNEL_SHAPES),
                     help="kernel shape (default triangular)")
    sub.add_argument("--grid-size", dest="grid_size", type=int,
                     help="quadrature grid size (default 4096)")
    sub.add_argument("--threads", type=int, help="worker process cap")
    sub.add_argument("--directed", action="store_true", default=None,
                     help="treat pairs as ordered")
    sub.add_argument("--fit-interval", dest="fit_interval",
                     help="estimation interval 'a,b' in hours")
    sub.add_argument("--test-interval", dest="test_interval",
                     help="test interval 'c,d' in hours")


def build_parser() -> _Parser:
    parser = _Parser(prog="netbaseline",
                     description="Estimation and goodness-of-fit testing for "
                                 "network event intensities")
    commands = parser.add_subparsers(dest="command", required=True)

    sim = commands.add_parser("simulate", help="draw a synthetic panel")
    _add_common(sim)
    sim.add_argument("--n-vertices", dest="n_vertices", type=int)
    sim.add_argument("--horizon", type=float, help="study length in hours")
    sim.set_defaults(handler=cmd_simulate)

    ing = commands.add_parser("ingest", help="build a panel from trip data")
    _add_common(ing)
    ing.add_argument("--trips", help="trips.csv path")
    ing.add_argument("--weather", help="weather.csv path")
    ing.add_argument("--distances", help="distances.csv path")
    ing.add_argument("--origin", help="study origin timestamp (ISO-8601)")
    ing.add_argument("--horizon", type=float, help="study length in hours")
    ing.add_argument("--window-start", dest="window_start",
                     help="reference window start (ISO-8601)")
    ing.add_argument("--window-end", dest="window_end",
                     help="reference window end (ISO-8601)")
    ing.add_argument("--min-trips", dest="min_trips", type=int,
                     help="activity threshold (default 10)")
    ing.add_argument("--temperature-offset", dest="temperature_offset",
                     type=float, help="added before the log transform")
    ing.add_argument("--max-gap-hours", dest="max_gap_hours", type=float,
                     help="largest tolerated weather gap")
    ing.set_defaults(handler=cmd_ingest)

    fit = commands.add_parser("fit", help="fit both estimators to a panel")
    _add_common(fit)
    fit.add_argument("--panel", help="panel directory")
    fit.add_argument("--model", help="model.json path")
    fit.add_argument("--baseline", choices=list(_BASELINE_CHOICES),
                     help="named baseline when no model file is given")
    fit.set_defaults(handler=cmd_fit)

    test = commands.add_parser("test", help="run the goodness-of-fit test")
    _add_common(test)
    test.add_argument("--panel", help="panel directory")
    test.add_argument("--model", help="model.json path")
    test.add_argument("--baseline", choices=list(_BASELINE_CHOICES),
                      help="named baseline when no model file is given")
    test.add_argument("--no-clamp", dest="no_clamp", action="store_true",
                      default=None, help="disable the edge-fraction floor")
    test.set_defaults(handler=cmd_test)

    power = commands.add_parser("power",
                                help="replicated level/power study")
    _add_common(power)
    power.add_argument("--n-vertices", dest="n_vertices", type=int)
    power.add_argument("--horizon", type=float)
    power.add_argument("--replications", type=int)
    power.add_argument("--c-values", dest="c_values",
                       help="comma-separated drift multipliers, 0 = null")
    power.add_argument("--bump-center", dest="bump_center", type=float)
    power.add_argument("--bump-width", dest="bump_width", type=float)
    power.set_defaults(handler=cmd_power)

    plots = commands.add_parser("export-plots",
                                help="CSV curves for plotting")
    _add_common(plots)
    plots.add_argument("--panel", help="panel directory")
    plots.set_defaults(handler=cmd_export_plots)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.handler(args)
    except CliUsageError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except PanelFormatError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_DATA
    except (DegenerateLikelihoodError, EmptyRiskRegionError,
            IntensityBoundError, NumericalError, FloatingPointError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except NetBaselineError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_DATA
    except (ValueError, KeyError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
