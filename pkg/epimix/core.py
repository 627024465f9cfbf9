"""Domain types shared by all modules.

Time is counted in weeks, 0-based. A 52-week span therefore has 53 points
(weeks 0..52); every grid default in the package assumes that axis.
"""
from dataclasses import dataclass, field
from datetime import date, timedelta
from typing import FrozenSet, Iterable, List, Sequence

import numpy as np

from epimix.errors import NegativeValue, ParameterError, TooShort

WEEK = timedelta(days=7)


def _frozen_array(values: Iterable[float]) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class WeeklySeries:
    """Weekly new-infection counts for one country.

    ``missing`` holds week indices whose source data had gaps; those weeks
    carry 0 in ``values`` and the series is dropped by ``filter_countries``.
    """
    country: str
    start_week: date
    values: np.ndarray
    missing: FrozenSet[int] = field(default_factory=frozenset)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def weeks(self) -> int:
        """Index of the last week (T - 1)."""
        return len(self.values) - 1

    def week_start(self, index: int) -> date:
        return self.start_week + index * WEEK

    def head(self, last_week: int) -> "WeeklySeries":
        """Series restricted to weeks 0..last_week."""
        return new_weekly_series(self.country, self.start_week, self.values[: last_week + 1])


def new_weekly_series(
    country: str,
    start: date,
    values: Sequence[float],
    missing: Iterable[int] = (),
) -> WeeklySeries:
    arr = _frozen_array(values)
    if arr.ndim != 1 or arr.size < 2:
        raise TooShort(f"{country}: a weekly series needs at least 2 points, got {arr.size}")
    if np.isnan(arr).any():
        raise NegativeValue(f"{country}: series contains NaN")
    if (arr < 0).any():
        first = int(np.flatnonzero(arr < 0)[0])
        raise NegativeValue(f"{country}: week {first} has negative value {arr[first]}")
    return WeeklySeries(country=country, start_week=start, values=arr, missing=frozenset(missing))


@dataclass(frozen=True)
class SirState:
    s: float
    i: float
    r: float

    @property
    def total(self) -> float:
        return self.s + self.i + self.r


@dataclass(frozen=True)
class SirParams:
    beta: float
    gamma: float
    n: float

    def __post_init__(self):
        if self.beta < 0 or self.gamma < 0:
            raise ParameterError(f"rates must be non-negative (beta={self.beta}, gamma={self.gamma})")
        if self.n <= 0:
            raise ParameterError(f"population must be positive, got {self.n}")


@dataclass(frozen=True)
class ShiftedSirParams:
    """One sub-population: ``c`` people become infected at integer week ``k``."""
    s0: float
    beta: float
    gamma: float
    c: float
    k: int

    def __post_init__(self):
        if self.s0 <= 0:
            raise ParameterError(f"s0 must be positive, got {self.s0}")
        if self.c < 0:
            raise ParameterError(f"c must be non-negative, got {self.c}")
        if self.beta < 0 or self.gamma < 0:
            raise ParameterError(f"rates must be non-negative (beta={self.beta}, gamma={self.gamma})")
        if int(self.k) != self.k or self.k < 0:
            raise ParameterError(f"k must be a non-negative integer week, got {self.k}")
        object.__setattr__(self, "k", int(self.k))

    def as_list(self) -> List[float]:
        return [self.s0, self.beta, self.gamma, self.c, float(self.k)]


@dataclass(frozen=True)
class SeededRng:
    """Deterministic random stream keyed by (seed, stream)."""
    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(self.seed, spawn_key=(self.stream,))
        return np.random.Generator(np.random.PCG64(seq))

    def child(self, stream: int) -> "SeededRng":
        return SeededRng(self.seed, stream)
