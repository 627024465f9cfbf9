from datetime import date, timedelta

import numpy as np
import pytest

from epimix.core import new_weekly_series
from epimix.errors import MalformedHeader, UnparseableCell, WindowOutOfRange
from epimix.ingest import (
    filter_countries,
    is_jhu_csv,
    load_series,
    parse_jhu_csv,
    read_weekly_csv,
    to_weekly_series,
    weekly_frame,
)
from epimix.tools.report_writer import ReportWriter

FIRST_DAY = date(2020, 7, 16)
WINDOW = date(2020, 7, 23)


def test_one_week_window(jhu_factory, cumulative_cells):
    table = parse_jhu_csv(jhu_factory([(None, "Aland", cumulative_cells["example"])]))
    assert len(table) == 1
    assert table.provinces == (None,)
    [series] = to_weekly_series(table, WINDOW, weeks=1)
    assert series.country == "Aland"
    assert series.values.tolist() == [0.0, 28.0]
    assert series.start_week == WINDOW


def test_negative_corrections_clamped_per_province(jhu_factory):
    up = [str(v) for v in [0, 0, 0, 0, 0, 0, 0, 0, 10, 20, 30, 40, 50, 60, 70]]
    # correction of -15 on day 9
    down = [str(v) for v in [0, 0, 0, 0, 0, 0, 0, 0, 20, 5, 5, 5, 5, 5, 5]]
    path = jhu_factory([("North", "Bland", up), ("South", "Bland", down)])
    [series] = to_weekly_series(parse_jhu_csv(path), WINDOW, weeks=1)
    assert series.values.tolist() == [0.0, 70.0 + 20.0]


def test_window_must_fit(jhu_factory, cumulative_cells):
    table = parse_jhu_csv(jhu_factory([(None, "Aland", cumulative_cells["example"])]))
    with pytest.raises(WindowOutOfRange):
        to_weekly_series(table, WINDOW, weeks=2)
    with pytest.raises(WindowOutOfRange):
        to_weekly_series(table, FIRST_DAY - timedelta(days=1), weeks=1)
    with pytest.raises(WindowOutOfRange):
        to_weekly_series(table, WINDOW, weeks=0)


def test_malformed_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("Country,Lat,Long,1/22/20\nX,0,0,1\n", encoding="utf-8")
    with pytest.raises(MalformedHeader):
        parse_jhu_csv(path)


def test_unparseable_cell_reports_location(jhu_factory, cumulative_cells):
    cells = list(cumulative_cells["example"])
    cells[3] = "abc"
    with pytest.raises(UnparseableCell) as info:
        parse_jhu_csv(jhu_factory([(None, "Aland", cells)]))
    assert info.value.row == 2
    assert info.value.value == "abc"
    assert info.value.column == "7/19/20"


def test_gaps_and_zero_countries_filtered(jhu_factory, cumulative_cells):
    gappy = list(cumulative_cells["example"])
    gappy[12] = ""
    zeros = ["0"] * 15
    path = jhu_factory([
        (None, "Cland", cumulative_cells["example"]),
        (None, "Aland", gappy),
        (None, "Zland", zeros),
    ])
    series = to_weekly_series(parse_jhu_csv(path), WINDOW, weeks=1)
    by_country = {s.country: s for s in series}
    assert by_country["Aland"].missing == frozenset({1})
    kept = filter_countries(series)
    assert [s.country for s in kept] == ["Cland"]


def test_filter_sorts_by_label():
    series = [new_weekly_series(c, WINDOW, [1.0, 2.0]) for c in ("b", "a", "c")]
    assert [s.country for s in filter_countries(series)] == ["a", "b", "c"]


def test_weekly_csv_exchange(tmp_path, positive_series):
    writer = ReportWriter(tmp_path)
    path = writer.write_csv("observed.csv", weekly_frame([positive_series]))
    assert not is_jhu_csv(path)
    [back] = read_weekly_csv(path)
    assert back.country == positive_series.country
    assert back.start_week == positive_series.start_week
    assert np.array_equal(back.values, positive_series.values)


def test_load_series_detects_jhu(jhu_factory, cumulative_cells):
    path = jhu_factory([(None, "Aland", cumulative_cells["example"])])
    assert is_jhu_csv(path)
    [series] = load_series(path, WINDOW, 1)
    assert series.values.tolist() == [0.0, 28.0]


def test_table_starting_at_window_start(jhu_factory):
    cells = [str(v) for v in [0, 1, 3, 6, 10, 15, 21, 28]]
    path = jhu_factory([(None, "Aland", cells)], first_day=date(2020, 7, 30))
    [series] = to_weekly_series(parse_jhu_csv(path), date(2020, 7, 30), weeks=1)
    assert series.values.tolist() == [0.0, 28.0]
    assert series.missing == frozenset({0})
    assert series.start_week == date(2020, 7, 30)


def test_partial_first_week_is_missing(jhu_factory, cumulative_cells):
    table = parse_jhu_csv(jhu_factory([(None, "Aland", cumulative_cells["example"])]))
    [series] = to_weekly_series(table, FIRST_DAY + timedelta(days=3), weeks=1)
    assert series.missing == frozenset({0})
    assert series.values[0] == 0.0
