"""JHU CSSE confirmed-cases ingestion and weekly CSV exchange.

Pipeline: cumulative counts → daily first differences (negative corrections
clamped to 0, per province row) → 7-day sums → summed over provinces.
Week point w covers the seven days ending at window_start + 7w.
"""
import logging
from dataclasses import dataclass
from datetime import date, datetime, timedelta
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from epimix.core import WEEK, WeeklySeries, new_weekly_series
from epimix.errors import DataError, MalformedHeader, UnparseableCell, WindowOutOfRange

logger = logging.getLogger(__name__)

JHU_PREFIX = ("Province/State", "Country/Region", "Lat", "Long")
WEEKLY_COLUMNS = ("country", "week_index", "week_start", "value")

PathLike = Union[str, Path]


@dataclass(frozen=True)
class RawCumulativeTable:
    """One row per (province, country); NaN marks a missing daily value."""
    provinces: Tuple[Optional[str], ...]
    countries: Tuple[str, ...]
    dates: Tuple[date, ...]
    counts: np.ndarray

    def __len__(self) -> int:
        return len(self.countries)


def _parse_date(column: str) -> date:
    try:
        return datetime.strptime(column.strip(), "%m/%d/%y").date()
    except ValueError as exc:
        raise MalformedHeader(f"date column {column!r} is not in M/D/YY form") from exc


def _parse_count(raw: str, row: int, column: str) -> float:
    text = raw.strip()
    if not text:
        return np.nan
    try:
        value = float(text)
    except ValueError:
        raise UnparseableCell(row, column, raw) from None
    if value < 0 or not value.is_integer():
        raise UnparseableCell(row, column, raw)
    return value


def parse_jhu_csv(path: PathLike) -> RawCumulativeTable:
    frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8-sig")
    header = tuple(frame.columns[: len(JHU_PREFIX)])
    if header != JHU_PREFIX:
        raise MalformedHeader(f"{path}: header must begin with {','.join(JHU_PREFIX)}, got {','.join(header)}")
    date_columns = list(frame.columns[len(JHU_PREFIX):])
    if not date_columns:
        raise MalformedHeader(f"{path}: no date columns")
    dates = [_parse_date(c) for c in date_columns]
    for prev, cur in zip(dates, dates[1:]):
        if cur - prev != timedelta(days=1):
            raise MalformedHeader(f"{path}: date columns must ascend day by day ({prev} then {cur})")

    counts = np.empty((len(frame), len(dates)))
    for r, values in enumerate(frame[date_columns].itertuples(index=False)):
        for j, raw in enumerate(values):
            counts[r, j] = _parse_count(raw, r + 2, date_columns[j])

    provinces = tuple(p.strip() or None for p in frame["Province/State"])
    countries = tuple(c.strip() for c in frame["Country/Region"])
    logger.info("parsed %d rows x %d days from %s", len(countries), len(dates), path)
    return RawCumulativeTable(provinces=provinces, countries=countries, dates=tuple(dates), counts=counts)


def to_weekly_series(table: RawCumulativeTable, window_start: date, weeks: int) -> List[WeeklySeries]:
    if weeks < 1:
        raise WindowOutOfRange(f"weeks must be >= 1, got {weeks}")
    last = window_start + weeks * WEEK
    if not table.dates or window_start < table.dates[0] or last > table.dates[-1]:
        raise WindowOutOfRange(
            f"window {window_start}..{last} does not fit inside the table's {table.dates[0]}..{table.dates[-1]}")
    first = window_start - WEEK
    hi = (last - table.dates[0]).days
    lo = (first - table.dates[0]).days

    cumulative = table.counts[:, max(lo, 0): hi + 1]
    if lo < 0:
        # week 0 is uncovered; NaN padding marks it missing
        pad = np.full((cumulative.shape[0], -lo), np.nan)
        cumulative = np.hstack([pad, cumulative])
    daily = np.maximum(np.diff(cumulative, axis=1), 0.0)  # NaN propagates
    weekly = daily.reshape(daily.shape[0], weeks + 1, 7).sum(axis=2)

    by_country: Dict[str, np.ndarray] = {}
    for country, row in zip(table.countries, weekly):
        by_country[country] = by_country[country] + row if country in by_country else row.copy()

    series = []
    for country in sorted(by_country):
        values = by_country[country]
        gaps = np.flatnonzero(np.isnan(values))
        if gaps.size:
            logger.debug("%s: %d week(s) with missing daily data", country, gaps.size)
        series.append(new_weekly_series(country, window_start, np.nan_to_num(values, nan=0.0), missing=gaps.tolist()))
    return series


def filter_countries(series: List[WeeklySeries]) -> List[WeeklySeries]:
    """Keep consistently reporting countries (no gaps, not all zero), sorted by label."""
    kept = [s for s in series if not s.missing and np.any(s.values > 0)]
    dropped = len(series) - len(kept)
    if dropped:
        logger.info("dropped %d of %d countries (gaps or all-zero)", dropped, len(series))
    return sorted(kept, key=lambda s: s.country)


# -- weekly CSV -------------------------------------------------------------------

def weekly_frame(series: List[WeeklySeries]) -> pd.DataFrame:
    rows = [
        (s.country, w, s.week_start(w).isoformat(), float(v))
        for s in series
        for w, v in enumerate(s.values)
    ]
    return pd.DataFrame(rows, columns=list(WEEKLY_COLUMNS))


def read_weekly_csv(path: PathLike) -> List[WeeklySeries]:
    frame = pd.read_csv(path, comment="#", dtype={"country": str}, float_precision="round_trip")
    if tuple(frame.columns) != WEEKLY_COLUMNS:
        raise MalformedHeader(f"{path}: expected columns {','.join(WEEKLY_COLUMNS)}")
    series = []
    for country, group in frame.groupby("country", sort=True):
        group = group.sort_values("week_index")
        index = group["week_index"].to_numpy()
        if not np.array_equal(index, np.arange(index.size)):
            raise DataError(f"{path}: {country} has non-consecutive week indices")
        try:
            start = date.fromisoformat(str(group["week_start"].iloc[0]))
            values = group["value"].to_numpy(dtype=float)
        except ValueError as exc:
            raise DataError(f"{path}: {country}: {exc}") from exc
        series.append(new_weekly_series(country, start, values))
    return series


def is_jhu_csv(path: PathLike) -> bool:
    with open(path, "r", encoding="utf-8-sig") as f:
        for line in f:
            if not line.startswith("#"):
                return line.startswith(JHU_PREFIX[0])
    return False


def load_series(path: PathLike, window_start: date, weeks: int) -> List[WeeklySeries]:
    """Filtered weekly series from either a JHU cumulative CSV or a weekly CSV."""
    if is_jhu_csv(path):
        return filter_countries(to_weekly_series(parse_jhu_csv(path), window_start, weeks))
    return filter_countries(read_weekly_csv(path))
