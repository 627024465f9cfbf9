from datetime import date

import numpy as np
import pytest

from epimix.config import MethodSettings
from epimix.core import new_weekly_series
from epimix.errors import AllZeroActuals, ParameterError
from epimix.evaluation import (
    SUMMARY_COLUMNS,
    detail_frame,
    forecasting_reports,
    mape,
    modeling_report,
    run_forecasting_task,
    run_modeling_task,
    slow_forecast,
    summarize,
    summary_frame,
)
from epimix.methods import SlowMethod, SlowModel, build_method

START = date(2020, 7, 30)


def test_mape_examples():
    assert mape([100.0, 200.0], [110.0, 180.0]) == pytest.approx(10.0)
    assert mape([0.0, 100.0], [5.0, 110.0]) == pytest.approx(10.0)
    assert mape([50.0], [50.0]) == 0.0


def test_mape_errors():
    with pytest.raises(AllZeroActuals):
        mape([0.0, 0.0], [1.0, 2.0])
    with pytest.raises(ParameterError):
        mape([1.0, 2.0], [1.0])


def test_slow_forecast():
    assert slow_forecast([3.0, 4.0, 9.0], 1) == 9.0
    assert slow_forecast([3.0, 4.0, 9.0], 4) == 9.0
    with pytest.raises(ParameterError):
        slow_forecast([], 1)
    with pytest.raises(ParameterError):
        slow_forecast([1.0], 0)


def test_summarize_examples():
    single = summarize([7.0])
    assert single.std == 0.0
    assert single.mean == single.min == single.median == single.max == 7.0
    five = summarize([1.0, 2.0, 3.0, 4.0, 5.0])
    assert (five.q25, five.median, five.q75) == (2.0, 3.0, 4.0)
    assert five.std == pytest.approx(np.sqrt(2.5))
    with pytest.raises(ParameterError):
        summarize([])


def test_modeling_task_with_slow(positive_series):
    result = run_modeling_task(positive_series, SlowMethod())
    x = positive_series.values
    assert np.array_equal(result.predictions, x[:-1])
    assert result.mape == mape(x[1:], x[:-1])
    assert result.evaluated_pairs + result.excluded_pairs == x.size - 1
    assert np.isnan(result.fitted[0])


def test_slow_forecast_mape_identity(positive_series):
    result = run_forecasting_task(positive_series, SlowMethod())
    x = positive_series.values
    for h in (1, 2, 3, 4):
        assert result.horizons[h].mape == mape(x[5 + h: 49 + h], x[5:49])
        assert result.horizons[h].origins == list(range(5, 49))


def test_constant_series_slow_is_exact():
    series = new_weekly_series("Flat", START, np.full(53, 40.0))
    result = run_forecasting_task(series, SlowMethod())
    assert all(score.mape == 0.0 for score in result.horizons.values())


@pytest.mark.parametrize("name", ["slow", "gauss-dict"])
def test_forecasts_do_not_look_ahead(positive_series, name):
    method = build_method(name, MethodSettings())
    mutated_values = positive_series.values.copy()
    mutated_values[31:] *= 3.0
    mutated = new_weekly_series(positive_series.country, positive_series.start_week, mutated_values)
    original = run_forecasting_task(positive_series, method)
    changed = run_forecasting_task(mutated, method)
    for h in (1, 2, 3, 4):
        a, b = original.horizons[h], changed.horizons[h]
        for origin, fa, fb in zip(a.origins, a.forecast, b.forecast):
            if origin <= 30:
                assert fa == fb


def test_forecasting_is_deterministic(positive_series):
    method = build_method("gauss-dict", MethodSettings())
    first = run_forecasting_task(positive_series, method)
    second = run_forecasting_task(positive_series, method)
    for h in first.horizons:
        assert first.horizons[h].forecast == second.horizons[h].forecast
        assert first.horizons[h].mape == second.horizons[h].mape


class FlakyMethod(SlowMethod):
    """Fails on every even-length history."""
    name = "flaky"

    def fit(self, series, stream=0, **overrides):
        if len(series) % 2 == 0:
            raise ParameterError(f"cannot fit {len(series)} weeks")
        return SlowModel()


def test_failed_origins_are_excluded_and_counted(positive_series):
    result = run_forecasting_task(positive_series, FlakyMethod(), horizons=(1, 2))
    # origins 5..48 give history lengths 6..49; 22 of them are even
    assert len(result.failures) == 22
    for score in result.horizons.values():
        assert score.scheduled == 44
        assert score.failed == 22
        assert len(score.actual) == 22
        assert score.evaluated_pairs + score.excluded_pairs == score.scheduled


def test_forecast_needs_full_window(positive_series):
    with pytest.raises(ParameterError):
        run_forecasting_task(positive_series.head(40), SlowMethod())


def test_reports_and_frames(positive_series):
    t1 = modeling_report("slow", [run_modeling_task(positive_series, SlowMethod())])
    t2 = forecasting_reports("slow", [run_forecasting_task(positive_series, SlowMethod(), horizons=(1, 3))])
    assert [r.horizon for r in t2] == [1, 3]
    summary = summary_frame([t1, *t2])
    assert list(summary.columns) == ["method", "task", "horizon", *SUMMARY_COLUMNS]
    assert summary["task"].tolist() == ["t1", "t2", "t2"]
    assert summary.loc[0, "mean"] == t1.per_country["Testland"]
    details = detail_frame([t1, *t2])
    assert list(details.columns) == ["method", "task", "horizon", "country", "mape",
                                     "evaluated_pairs", "excluded_pairs"]
    assert details["evaluated_pairs"].tolist() == [52, 44, 44]
