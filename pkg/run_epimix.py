#!/usr/bin/env python3
import functools
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import click
import numpy as np
import pandas as pd
from pydantic import ValidationError
from rich.console import Console
from rich.logging import RichHandler
from rich.progress import track
from rich.table import Table

from epimix.config import DATA_DIR_ENV, METHOD_NAMES, RunConfig, load_run_config
from epimix.core import WeeklySeries
from epimix.dictionary import build_gaussian_dictionary, build_sir_dictionary, dictionary_frame, stem_frame
from epimix.errors import DataError, EpimixError
from epimix.evaluation import (
    SUMMARY_COLUMNS,
    EvalReport,
    detail_frame,
    forecast_stream,
    forecasting_reports,
    modeling_report,
    summary_frame,
)
from epimix.ingest import load_series, weekly_frame
from epimix.methods import DictionaryModel, build_method, country_stream
from epimix.pipeline.evaluation_graph import EvaluationJob, evaluate_job, unrecovered_exit_code
from epimix.synth import components_frame, generate, strict_peaks
from epimix.tools.report_writer import ReportWriter

console = Console()
logger = logging.getLogger("epimix.cli")

DATA_CANDIDATES = ("time_series_covid19_confirmed_global.csv", "observed.csv")
CONFIG_META_KEY = "epimix.config"


def configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(message)s",
        handlers=[RichHandler(console=console, show_path=False, show_time=False)],
        force=True,
    )


def fail(exc: BaseException, exit_code: int, out: Optional[Path], config: Optional[RunConfig] = None) -> None:
    """Print a JSON error summary to stderr, mirror it to errors.json, exit."""
    summary = {"error": type(exc).__name__, "message": str(exc), "exit_code": exit_code}
    click.echo(json.dumps(summary, sort_keys=True), err=True)
    if out is not None:
        try:
            writer = ReportWriter(out, config)
            writer.record_error(exc, exit_code)
            writer.write_errors()
        except OSError:
            pass
    console.print(f"[red]✗[/red] {type(exc).__name__}: {exc}")
    sys.exit(exit_code)


def _failure_target(out: Path) -> Tuple[Path, Optional[RunConfig]]:
    """Output directory and run config for errors.json, once the config is known."""
    ctx = click.get_current_context(silent=True)
    config = ctx.meta.get(CONFIG_META_KEY) if ctx is not None else None
    return (Path(config.out) if config is not None else out), config


def guarded(command):
    """Map library errors to exit codes (2 usage, 3 data, 4 non-convergence)."""
    @functools.wraps(command)
    def wrapper(**kwargs):
        configure_logging(bool(kwargs.get("verbose")))
        out = Path(kwargs["out"]) if kwargs.get("out") else Path("outputs")
        try:
            return command(**kwargs)
        except ValidationError as exc:
            fail(exc, 2, *_failure_target(out))
        except EpimixError as exc:
            fail(exc, exc.exit_code, *_failure_target(out))
        except (FileNotFoundError, UnicodeDecodeError, pd.errors.ParserError) as exc:
            fail(exc, 3, *_failure_target(out))
        except KeyboardInterrupt:
            console.print("\n[yellow]⚠ Interrupted by user[/yellow]")
            sys.exit(130)
    return wrapper


def common_options(command):
    command = click.option("--config", "config_file", type=click.Path(exists=True, dir_okay=False),
                           help="JSON config file; flags override its values")(command)
    command = click.option("--out", default=None, help="Output directory")(command)
    command = click.option("--seed", type=int, default=None, help="Random seed")(command)
    command = click.option("--verbose", is_flag=True, default=False, help="Debug logging")(command)
    return command


def data_options(command):
    command = click.option("--data", envvar=DATA_DIR_ENV, default=None,
                           help=f"JHU or weekly CSV, or a directory holding one (env {DATA_DIR_ENV})")(command)
    command = click.option("--country", "countries", multiple=True, help="Restrict to these countries")(command)
    command = click.option("--max-countries", type=int, default=None,
                           help="Keep only the first n countries by label")(command)
    command = click.option("--window-start", type=click.DateTime(formats=["%Y-%m-%d"]), default=None)(command)
    command = click.option("--weeks", type=int, default=None, help="Weeks in the JHU window")(command)
    return command


def method_options(command):
    command = click.option("--method", "methods", multiple=True, type=click.Choice(METHOD_NAMES),
                           help="Modeling method (repeatable)")(command)
    command = click.option("--lambda", "lam", type=float, default=None, help="Ridge penalty")(command)
    command = click.option("--m", "m", type=int, default=None, help="Mixture components")(command)
    command = click.option("--solver", type=click.Choice(["active-set", "projected-gradient"]), default=None)(command)
    command = click.option("--gsa-maxiter", type=int, default=None)(command)
    command = click.option("--dict-horizon", type=int, default=None)(command)
    return command


def build_config(command: str, kwargs: Dict[str, Any]) -> RunConfig:
    overrides = {}
    for key, value in kwargs.items():
        if key in ("config_file", "verbose"):
            continue
        if isinstance(value, tuple):
            value = list(value) or None
        if key == "window_start" and value is not None:
            value = value.date()
        overrides[key] = value
    config = load_run_config(command, overrides, kwargs.get("config_file"))
    ctx = click.get_current_context(silent=True)
    if ctx is not None:
        ctx.meta[CONFIG_META_KEY] = config
    return config


def resolve_data(config: RunConfig) -> Path:
    if config.data is None:
        raise DataError(f"no data given; pass --data or set {DATA_DIR_ENV}")
    path = Path(config.data)
    if path.is_dir():
        for name in DATA_CANDIDATES:
            if (path / name).is_file():
                return path / name
        raise DataError(f"{path} holds none of {', '.join(DATA_CANDIDATES)}")
    if not path.is_file():
        raise DataError(f"data file {path} does not exist")
    return path


def select_series(config: RunConfig) -> List[WeeklySeries]:
    path = resolve_data(config)
    series = load_series(path, config.window_start, config.weeks)
    if config.countries:
        by_label = {s.country: s for s in series}
        unknown = [c for c in config.countries if c not in by_label]
        if unknown:
            raise DataError(f"countries not in the filtered data: {', '.join(unknown)}")
        series = [by_label[c] for c in sorted(set(config.countries))]
    if config.max_countries is not None:
        series = series[: config.max_countries]
    if not series:
        raise DataError(f"no usable country series in {path}")
    console.print(f"[green]✓[/green] Loaded {len(series)} series from {path}")
    return series


def summary_table(title: str, reports: List[EvalReport]) -> Table:
    table = Table(title=title)
    for column in ("method", "task", "horizon", *SUMMARY_COLUMNS):
        table.add_column(column, justify="right" if column not in ("method", "task") else "left")
    for row in summary_frame(reports).itertuples(index=False):
        table.add_row(row.method, row.task, str(row.horizon),
                      *(f"{getattr(row, c):.2f}" for c in SUMMARY_COLUMNS))
    return table


def run_jobs(jobs: List[EvaluationJob], workers: int) -> List[Dict[str, Any]]:
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(evaluate_job, jobs))
    return [evaluate_job(job) for job in track(jobs, description="Evaluating...", console=console)]


def write_models(writer: ReportWriter, results: List[Dict[str, Any]]) -> None:
    curves, weights, components = [], [], []
    for r in results:
        fit = r["modeling"]
        if fit is None:
            continue
        fitted = fit.fitted
        for week, (obs, value) in enumerate(zip(fit.observed, fitted)):
            curves.append({"method": r["method"], "country": r["country"], "week": week,
                           "observed": obs, "fitted": value})
        for j, (label, curve) in enumerate(fit.model.components(fit.observed.size - 1)):
            for week, value in enumerate(curve):
                components.append({"method": r["method"], "country": r["country"], "component": j,
                                   "label": label, "week": week, "value": value})
        if isinstance(fit.model, DictionaryModel):
            table = fit.model.weights_table()
            table.insert(0, "country", r["country"])
            table.insert(0, "method", r["method"])
            weights.append(table)
        writer.write_json(Path("models") / r["method"] / f"{r['country']}.json",
                          {**fit.model.to_json(), "country": r["country"], "method": r["method"],
                           "mape": fit.mape, "repair_count": r["repair_count"]})

    writer.write_csv("curves.csv", pd.DataFrame(
        curves, columns=["method", "country", "week", "observed", "fitted"]))
    writer.write_csv("components.csv", pd.DataFrame(
        components, columns=["method", "country", "component", "label", "week", "value"]))
    weight_columns = ["method", "country", "atom_index", "family", "params", "theta"]
    writer.write_csv("weights.csv", pd.concat(weights, ignore_index=True) if weights
                     else pd.DataFrame(columns=weight_columns))


def write_forecast_models(writer: ReportWriter, results: List[Dict[str, Any]]) -> None:
    for r in results:
        forecasting = r["forecasting"]
        if forecasting is None or forecasting.model is None:
            continue
        writer.write_json(Path("models") / r["method"] / f"{r['country']}.json",
                          {**forecasting.model.to_json(), "country": r["country"], "method": r["method"],
                           "origin": forecasting.origin, "repair_count": r["repair_count"],
                           "mape": {str(h): s.mape for h, s in sorted(forecasting.horizons.items())}})


def finish(writer: ReportWriter, results: List[Dict[str, Any]]) -> None:
    for r in results:
        if r["error"] is not None:
            writer.errors.append({**r["error"], "country": r["country"], "method": r["method"]})
    writer.write_errors()
    code = unrecovered_exit_code(results)
    if code:
        console.print(f"[red]✗[/red] {len(writer.errors)} unrecovered failure(s); see {writer.out_dir / 'errors.json'}")
        sys.exit(code)
    console.print(f"\n[bold green]✓ All results saved to {writer.out_dir}[/bold green]")


@click.group()
def cli():
    """Latent sub-population models of weekly epidemic curves."""


@cli.command("synth")
@common_options
@click.option("--noise", type=float, default=None, help="Log-normal noise sigma on the observed sum")
@guarded
def synth_command(**kwargs):
    """Write a synthetic three-sub-population dataset."""
    config = build_config("synth", kwargs)
    dataset = generate(config.seed, noise=config.noise)
    writer = ReportWriter(config.out, config)
    writer.write_csv("observed.csv", weekly_frame([dataset.observed]))
    writer.write_csv("components.csv", components_frame(dataset))
    peaks = strict_peaks(dataset.observed.values)
    console.print(f"[green]✓[/green] Synthetic series with {len(peaks)} peak(s) at weeks "
                  f"{', '.join(str(p) for p in peaks)} saved to {config.out}")


@cli.command("build-dict")
@common_options
@click.option("--dict-horizon", type=int, default=None, help="Last week covered by the atoms")
@guarded
def build_dict_command(**kwargs):
    """Write the Gaussian and shifted-SIR dictionaries."""
    config = build_config("build-dict", kwargs)
    writer = ReportWriter(config.out, config)
    for family, dictionary in (
        ("gaussian", build_gaussian_dictionary(weeks=config.dict_horizon)),
        ("sir", build_sir_dictionary(weeks=config.dict_horizon)),
    ):
        path = writer.write_csv(f"dict_{family}.csv", dictionary_frame(dictionary))
        console.print(f"[green]✓[/green] {family}: {dictionary.size} atoms → {path}")


@cli.command("fit")
@common_options
@data_options
@method_options
@click.option("--workers", type=int, default=None)
@guarded
def fit_command(**kwargs):
    """Fit methods on full series; write fitted curves, components and model JSON."""
    config = build_config("fit", kwargs)
    series = select_series(config)
    writer = ReportWriter(config.out, config)
    settings = config.method_settings()
    jobs = [EvaluationJob(s, m, settings, ("t1",), tuple(config.horizons))
            for m in config.methods for s in series]
    results = run_jobs(jobs, config.workers)
    write_models(writer, results)
    for r in results:
        mark = "[green]✓[/green]" if r["modeling"] is not None else "[red]✗[/red]"
        score = f"MAPE {r['modeling'].mape:.2f}" if r["modeling"] is not None else r["error"]["message"]
        console.print(f"{mark} {r['method']} / {r['country']}: {score}")
    finish(writer, results)


@cli.command("forecast")
@common_options
@data_options
@method_options
@click.option("--origin", type=int, default=None, help="Last observed week used for fitting")
@click.option("--horizons", multiple=True, type=int, help="Forecast horizons in weeks (1-4)")
@guarded
def forecast_command(origin: Optional[int], **kwargs):
    """Fit on weeks 0..origin and forecast the following weeks."""
    config = build_config("forecast", kwargs)
    series = select_series(config)
    writer = ReportWriter(config.out, config)
    settings = config.method_settings()
    horizon = max(config.horizons)
    rows = []
    for name in config.methods:
        method = build_method(name, settings)
        for s in series:
            t = s.weeks - horizon if origin is None else origin
            if t < 1 or t > s.weeks:
                raise DataError(f"{s.country}: origin {t} outside weeks 1..{s.weeks}")
            model = method.fit(s.head(t), stream=forecast_stream(country_stream(s.country), t))
            path = np.asarray(model.forecast(s.values[: t + 1], horizon), dtype=float)
            for week, value in enumerate(s.values):
                h = week - t
                rows.append({
                    "method": name, "country": s.country, "origin": t, "week": week,
                    "horizon": h if 1 <= h <= horizon else 0,
                    "observed": value,
                    "forecast": path[h - 1] if h in config.horizons else float("nan"),
                })
            for h in range(s.weeks - t + 1, horizon + 1):
                if h in config.horizons:
                    rows.append({"method": name, "country": s.country, "origin": t, "week": t + h,
                                 "horizon": h, "observed": float("nan"), "forecast": path[h - 1]})
            console.print(f"[green]✓[/green] {name} / {s.country}: origin week {t}, "
                          f"next {horizon} week(s) forecast")
    writer.write_csv("forecast.csv", pd.DataFrame(
        rows, columns=["method", "country", "origin", "week", "horizon", "observed", "forecast"]))
    console.print(f"\n[bold green]✓ All results saved to {config.out}[/bold green]")


@cli.command("evaluate")
@common_options
@data_options
@method_options
@click.option("--task", "tasks", multiple=True, type=click.Choice(["t1", "t2"]), help="t1 modeling, t2 forecasting")
@click.option("--horizons", multiple=True, type=int, help="Forecast horizons in weeks (1-4)")
@click.option("--workers", type=int, default=None, help="Worker processes")
@guarded
def evaluate_command(**kwargs):
    """Run the modeling and/or forecasting tasks and write report tables."""
    config = build_config("evaluate", kwargs)
    series = select_series(config)
    writer = ReportWriter(config.out, config)
    settings = config.method_settings()
    jobs = [EvaluationJob(s, m, settings, tuple(config.tasks), tuple(config.horizons))
            for m in config.methods for s in series]
    console.print(f"[bold]Evaluating {len(config.methods)} method(s) on {len(series)} series...[/bold]")
    results = run_jobs(jobs, config.workers)

    reports: List[EvalReport] = []
    if "t1" in config.tasks:
        t1 = [modeling_report(m, [r["modeling"] for r in results if r["method"] == m and r["modeling"]])
              for m in config.methods]
        writer.write_csv("report_t1.csv", summary_frame(t1))
        write_models(writer, results)
        console.print(summary_table("Modeling (T1) MAPE %", t1))
        reports += t1
    if "t2" in config.tasks:
        t2 = [rep for m in config.methods
              for rep in forecasting_reports(m, [r["forecasting"] for r in results
                                                 if r["method"] == m and r["forecasting"]])]
        writer.write_csv("report_t2.csv", summary_frame(t2))
        failures = [
            {"method": r["method"], "country": r["country"], "t": t, "message": message}
            for r in results if r["forecasting"] for t, message in r["forecasting"].failures
        ]
        writer.write_csv("failures.csv", pd.DataFrame(failures, columns=["method", "country", "t", "message"]))
        if "t1" not in config.tasks:
            write_forecast_models(writer, results)
        console.print(summary_table("Forecasting (T2) MAPE %", t2))
        reports += t2
    writer.write_csv("details.csv", detail_frame(reports))
    finish(writer, results)


def _read_table(path: Path) -> pd.DataFrame:
    if not path.is_file():
        raise DataError(f"{path} does not exist")
    return pd.read_csv(path, comment="#", float_precision="round_trip")


def _require(frame: pd.DataFrame, path: Path, columns) -> None:
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise DataError(f"{path}: missing column(s) {', '.join(missing)}")


@cli.command("report")
@common_options
@click.option("--input", "input_dir", required=True, type=click.Path(exists=True, file_okay=False),
              help="Directory written by evaluate")
@click.option("--method", "methods", multiple=True, type=click.Choice(METHOD_NAMES))
@click.option("--country", "countries", multiple=True)
@guarded
def report_command(input_dir: str, **kwargs):
    """Emit plot-ready curve, boxplot, summary and stem tables."""
    config = build_config("report", kwargs)
    source = Path(input_dir)
    writer = ReportWriter(config.out, config)

    details_path = source / "details.csv"
    details = _read_table(details_path)
    _require(details, details_path, ["method", "task", "horizon", "country", "mape"])
    keep = details["method"].isin(config.methods) if kwargs.get("methods") else pd.Series(True, index=details.index)
    if config.countries:
        keep &= details["country"].isin(config.countries)
    details = details[keep]
    if details.empty:
        raise DataError("no detail rows match the method/country filter")

    boxplot = details[["method", "task", "horizon", "country", "mape"]].sort_values(
        ["method", "task", "horizon", "country"], kind="mergesort")
    writer.write_csv("boxplot.csv", boxplot)

    reports = [
        EvalReport(method=m, task=t, horizon=int(h), per_country=dict(zip(g["country"], g["mape"])))
        for (m, t, h), g in boxplot.groupby(["method", "task", "horizon"], sort=True)
    ]
    writer.write_csv("summary.csv", summary_frame(reports))
    console.print(summary_table("MAPE %", reports))

    countries = sorted(boxplot["country"].unique())
    methods = sorted(boxplot["method"].unique())
    curves_path = source / "curves.csv"
    if curves_path.is_file():
        curves = _read_table(curves_path)
        _require(curves, curves_path, ["method", "country", "week", "observed", "fitted"])
        for country in countries:
            rows = curves[(curves["country"] == country) & curves["method"].isin(methods)]
            if rows.empty:
                continue
            wide = rows.pivot(index="week", columns="method", values="fitted")
            wide.columns = [f"fitted_{m}" for m in wide.columns]
            observed = rows.groupby("week")["observed"].first()
            table = pd.concat([observed, wide], axis=1).reset_index()
            writer.write_csv(Path("curves") / f"{country}.csv", table)

    weights_path = source / "weights.csv"
    if weights_path.is_file():
        weights = _read_table(weights_path)
        _require(weights, weights_path, ["method", "country", "atom_index", "family", "params", "theta"])
        stems = weights[weights["country"].isin(countries) & weights["method"].isin(methods)]
        stems = stems.sort_values(["method", "country", "atom_index"], kind="mergesort")
        writer.write_csv("stems.csv", stem_frame(stems))

    console.print(f"\n[bold green]✓ Plot data for {len(countries)} country(ies) saved to {config.out}[/bold green]")


if __name__ == "__main__":
    cli()
