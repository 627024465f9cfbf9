"""MAPE, the modeling task (T1), the walk-forward forecasting task (T2) and
Tables-style summary statistics."""
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from sklearn.metrics import mean_absolute_percentage_error

from epimix.core import WeeklySeries
from epimix.errors import AllZeroActuals, EpimixError, ParameterError

logger = logging.getLogger(__name__)

HORIZONS = (1, 2, 3, 4)
FORECAST_START = 5
FORECAST_END = 48
SUMMARY_COLUMNS = ("mean", "std", "min", "q25", "median", "q75", "max")


def mape(actual: Sequence[float], forecast: Sequence[float]) -> float:
    """Mean absolute percentage error in percent; zero actuals are excluded."""
    actual = np.asarray(actual, dtype=float)
    forecast = np.asarray(forecast, dtype=float)
    if actual.shape != forecast.shape or actual.size < 1:
        raise ParameterError(f"mape needs equal non-empty vectors, got {actual.shape} and {forecast.shape}")
    keep = actual != 0
    if not keep.any():
        raise AllZeroActuals("every actual value is zero")
    if not keep.all():
        logger.debug("mape: excluded %d zero-actual points of %d", int((~keep).sum()), actual.size)
    return float(mean_absolute_percentage_error(actual[keep], forecast[keep]) * 100.0)


def slow_forecast(history: Sequence[float], horizon: int) -> float:
    """'Same as last observed week' for any horizon."""
    if len(history) == 0:
        raise ParameterError("SLOW needs a non-empty history")
    if horizon < 1:
        raise ParameterError(f"horizon must be >= 1, got {horizon}")
    return float(history[-1])


# -- T1 -------------------------------------------------------------------------

@dataclass
class ModelingResult:
    country: str
    method: str
    observed: np.ndarray
    predictions: np.ndarray  # predictions for weeks 1..T-1
    mape: float
    model: object = None

    @property
    def evaluated_pairs(self) -> int:
        return int(np.count_nonzero(self.observed[1:] != 0))

    @property
    def excluded_pairs(self) -> int:
        return self.observed.size - 1 - self.evaluated_pairs

    @property
    def fitted(self) -> np.ndarray:
        """Week-aligned fitted values; week 0 comes from the model curve when it has one."""
        curve = self.model.curve(self.observed.size - 1) if self.model is not None else None
        first = float(curve[0]) if curve is not None else float("nan")
        return np.concatenate([[first], self.predictions])


def run_modeling_task(series: WeeklySeries, method, stream: int = 0, **overrides) -> ModelingResult:
    """Fit on the full series, then score the one-step predictions for t = 1..T-1."""
    observed = np.asarray(series.values, dtype=float)
    model = method.fit(series, stream=stream, **overrides)
    predictions = np.asarray(model.one_step(observed), dtype=float)
    try:
        score = mape(observed[1:], predictions)
    except AllZeroActuals:
        logger.warning("%s/%s: no non-zero week to score", series.country, method.name)
        score = float("nan")
    return ModelingResult(
        country=series.country,
        method=method.name,
        observed=observed,
        predictions=predictions,
        mape=score,
        model=model,
    )


# -- T2 -------------------------------------------------------------------------

@dataclass
class HorizonScore:
    horizon: int
    actual: List[float] = field(default_factory=list)
    forecast: List[float] = field(default_factory=list)
    origins: List[int] = field(default_factory=list)
    scheduled: int = 0
    failed: int = 0
    mape: float = float("nan")

    @property
    def evaluated_pairs(self) -> int:
        return int(np.count_nonzero(np.asarray(self.actual) != 0))

    @property
    def excluded_pairs(self) -> int:
        return self.scheduled - self.evaluated_pairs


@dataclass
class ForecastingResult:
    country: str
    method: str
    horizons: Dict[int, HorizonScore]
    failures: List[Tuple[int, str]] = field(default_factory=list)
    model: Optional[object] = None  # fitted at the last successful origin
    origin: Optional[int] = None


def forecast_stream(base_stream: int, t: int) -> int:
    return base_stream * 1000 + t


def run_forecasting_task(
    series: WeeklySeries,
    method,
    horizons: Iterable[int] = HORIZONS,
    start: int = FORECAST_START,
    end: int = FORECAST_END,
    stream: int = 0,
) -> ForecastingResult:
    """Walk forward from t=start to t=end, refitting on x_0..x_t at every step."""
    horizons = tuple(sorted(set(horizons)))
    observed = np.asarray(series.values, dtype=float)
    if not horizons or min(horizons) < 1:
        raise ParameterError(f"horizons must be positive, got {horizons}")
    if end + max(horizons) > observed.size - 1:
        raise ParameterError(
            f"{series.country}: forecasting to t={end}+{max(horizons)} needs {end + max(horizons) + 1} weeks, "
            f"series has {observed.size}")
    if start < 1 or start > end:
        raise ParameterError(f"invalid forecast origins {start}..{end}")

    scores = {h: HorizonScore(horizon=h) for h in horizons}
    failures: List[Tuple[int, str]] = []
    last_model, last_origin = None, None
    for t in range(start, end + 1):
        for h in horizons:
            scores[h].scheduled += 1
        history = observed[: t + 1]
        try:
            model = method.fit(series.head(t), stream=forecast_stream(stream, t))
            path = np.asarray(model.forecast(history, max(horizons)), dtype=float)
        except (EpimixError, ValueError, ArithmeticError) as exc:
            logger.warning("%s/%s: fit at t=%d failed (%s); excluding its pairs", series.country, method.name, t, exc)
            failures.append((t, str(exc)))
            for h in horizons:
                scores[h].failed += 1
            continue
        last_model, last_origin = model, t
        for h in horizons:
            scores[h].actual.append(float(observed[t + h]))
            scores[h].forecast.append(float(path[h - 1]))
            scores[h].origins.append(t)

    for score in scores.values():
        if score.actual:
            try:
                score.mape = mape(score.actual, score.forecast)
            except AllZeroActuals:
                logger.warning("%s/%s: horizon %d has only zero actuals", series.country, method.name, score.horizon)
    return ForecastingResult(country=series.country, method=method.name, horizons=scores, failures=failures,
                             model=last_model, origin=last_origin)


# -- summaries ------------------------------------------------------------------

@dataclass(frozen=True)
class SummaryRow:
    mean: float
    std: float
    min: float
    q25: float
    median: float
    q75: float
    max: float

    def as_dict(self) -> Dict[str, float]:
        return {name: getattr(self, name) for name in SUMMARY_COLUMNS}


def summarize(values: Iterable[float]) -> SummaryRow:
    """Mean, sample std, min, quartiles (linear interpolation), max."""
    data = pd.Series(list(values), dtype=float).dropna()
    if data.empty:
        raise ParameterError("summary needs at least one value")
    d = data.describe()
    std = float(d["std"]) if data.size > 1 else 0.0
    return SummaryRow(
        mean=float(d["mean"]), std=std, min=float(d["min"]), q25=float(d["25%"]),
        median=float(d["50%"]), q75=float(d["75%"]), max=float(d["max"]),
    )


@dataclass
class EvalReport:
    method: str
    task: str
    horizon: int
    per_country: Dict[str, float]
    evaluated_pairs: Dict[str, int] = field(default_factory=dict)
    excluded_pairs: Dict[str, int] = field(default_factory=dict)

    @property
    def summary(self) -> Optional[SummaryRow]:
        finite = [v for v in self.per_country.values() if np.isfinite(v)]
        return summarize(finite) if finite else None


def modeling_report(method: str, results: Sequence[ModelingResult]) -> EvalReport:
    ordered = sorted(results, key=lambda r: r.country)
    return EvalReport(
        method=method, task="t1", horizon=0,
        per_country={r.country: r.mape for r in ordered},
        evaluated_pairs={r.country: r.evaluated_pairs for r in ordered},
        excluded_pairs={r.country: r.excluded_pairs for r in ordered},
    )


def forecasting_reports(method: str, results: Sequence[ForecastingResult]) -> List[EvalReport]:
    ordered = sorted(results, key=lambda r: r.country)
    horizons = sorted({h for r in ordered for h in r.horizons})
    reports = []
    for h in horizons:
        scores = {r.country: r.horizons[h] for r in ordered if h in r.horizons}
        reports.append(EvalReport(
            method=method, task="t2", horizon=h,
            per_country={c: s.mape for c, s in scores.items()},
            evaluated_pairs={c: s.evaluated_pairs for c, s in scores.items()},
            excluded_pairs={c: s.excluded_pairs for c, s in scores.items()},
        ))
    return reports


def summary_frame(reports: Sequence[EvalReport]) -> pd.DataFrame:
    rows = []
    for rep in reports:
        summary = rep.summary
        stats = summary.as_dict() if summary else {c: float("nan") for c in SUMMARY_COLUMNS}
        rows.append({"method": rep.method, "task": rep.task, "horizon": rep.horizon, **stats})
    return pd.DataFrame(rows, columns=["method", "task", "horizon", *SUMMARY_COLUMNS])


def detail_frame(reports: Sequence[EvalReport]) -> pd.DataFrame:
    rows = [
        {
            "method": rep.method, "task": rep.task, "horizon": rep.horizon, "country": country,
            "mape": value,
            "evaluated_pairs": rep.evaluated_pairs.get(country, 0),
            "excluded_pairs": rep.excluded_pairs.get(country, 0),
        }
        for rep in reports
        for country, value in rep.per_country.items()
    ]
    return pd.DataFrame(rows, columns=["method", "task", "horizon", "country", "mape",
                                       "evaluated_pairs", "excluded_pairs"])
