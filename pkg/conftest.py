from datetime import date, timedelta
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pytest

from epimix.core import new_weekly_series
from epimix.synth import generate

SEED = 20200730


def jhu_date(day: date) -> str:
    return f"{day.month}/{day.day}/{day.year % 100:02d}"


def write_jhu_csv(
    path: Path,
    first_day: date,
    rows: Sequence[Tuple[Optional[str], str, Sequence[str]]],
) -> Path:
    """Rows are (province, country, cumulative cells as text)."""
    days = len(rows[0][2])
    header = ["Province/State", "Country/Region", "Lat", "Long"]
    header += [jhu_date(first_day + timedelta(days=d)) for d in range(days)]
    lines = [",".join(header)]
    for province, country, cells in rows:
        lines.append(",".join([province or "", country, "0.0", "0.0", *cells]))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def rng():
    return np.random.default_rng(SEED)


@pytest.fixture(scope="session")
def synthetic():
    return generate(SEED)


@pytest.fixture
def positive_series(rng):
    values = 1000.0 + 500.0 * np.sin(np.arange(53) / 5.0) + rng.uniform(0, 100, 53)
    return new_weekly_series("Testland", date(2020, 7, 30), values)


@pytest.fixture
def jhu_factory(tmp_path):
    def make(rows: List[Tuple[Optional[str], str, Sequence[str]]], first_day: date = date(2020, 7, 16),
             name: str = "confirmed.csv") -> Path:
        return write_jhu_csv(tmp_path / name, first_day, rows)
    return make


@pytest.fixture
def cumulative_cells() -> Dict[str, List[str]]:
    """15 days: zeros through day 7, then 1, 3, 6, 10, 15, 21, 28."""
    return {"example": [str(v) for v in [0] * 8 + [1, 3, 6, 10, 15, 21, 28]]}
