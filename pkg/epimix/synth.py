"""Synthetic aggregate of three shifted-SIR sub-populations.

Only the sum is meant to be observed; the components are kept as an oracle
for tests and for checking decompositions.
"""
import logging
from dataclasses import dataclass
from datetime import date
from typing import Tuple

import numpy as np
import pandas as pd

from epimix.config import WINDOW_START, WINDOW_WEEKS
from epimix.core import SeededRng, ShiftedSirParams, WeeklySeries, new_weekly_series
from epimix.errors import ParameterError
from epimix.sir import shifted_infected

logger = logging.getLogger(__name__)

SYNTH_COUNTRY = "SYNTH"
SYNTH_GAMMA = 0.5
SYNTH_INJECTION = 100.0
SYNTH_COMPONENTS = (
    ShiftedSirParams(s0=5e4, beta=0.75, gamma=SYNTH_GAMMA, c=SYNTH_INJECTION, k=0),
    ShiftedSirParams(s0=3e4, beta=0.9, gamma=SYNTH_GAMMA, c=SYNTH_INJECTION, k=18),
    ShiftedSirParams(s0=4e4, beta=0.6, gamma=SYNTH_GAMMA, c=SYNTH_INJECTION, k=30),
)


@dataclass(frozen=True)
class SyntheticDataset:
    observed: WeeklySeries
    components: Tuple[ShiftedSirParams, ...]
    curves: np.ndarray  # one row per component
    noise: float = 0.0

    @property
    def exact_sum(self) -> np.ndarray:
        return self.curves.sum(axis=0)


def generate(
    seed: int,
    noise: float = 0.0,
    components: Tuple[ShiftedSirParams, ...] = SYNTH_COMPONENTS,
    weeks: int = WINDOW_WEEKS,
    start: date = WINDOW_START,
) -> SyntheticDataset:
    """Observed = Σ components, optionally times seeded log-normal noise."""
    if noise < 0:
        raise ParameterError(f"noise must be >= 0, got {noise}")
    if not components:
        raise ParameterError("at least one component is required")
    cols = np.array([c.as_list() for c in components]).T
    curves = shifted_infected(cols[0], cols[1], cols[2], cols[3], cols[4], weeks)
    total = curves.sum(axis=0)
    if noise > 0:
        rng = SeededRng(seed).generator()
        total = total * rng.lognormal(mean=0.0, sigma=noise, size=total.size)
    logger.info("synthetic series: %d components, %d weeks, noise=%g", len(components), weeks + 1, noise)
    return SyntheticDataset(
        observed=new_weekly_series(SYNTH_COUNTRY, start, total),
        components=tuple(components),
        curves=curves,
        noise=noise,
    )


def components_frame(dataset: SyntheticDataset) -> pd.DataFrame:
    rows = [
        {
            "component": j, "s0": p.s0, "beta": p.beta, "gamma": p.gamma, "c": p.c, "k": p.k,
            "week": w, "value": float(v),
        }
        for j, (p, curve) in enumerate(zip(dataset.components, dataset.curves))
        for w, v in enumerate(curve)
    ]
    return pd.DataFrame(rows, columns=["component", "s0", "beta", "gamma", "c", "k", "week", "value"])


def strict_peaks(values: np.ndarray) -> np.ndarray:
    """Indices of strict interior local maxima."""
    v = np.asarray(values, dtype=float)
    return np.flatnonzero((v[1:-1] > v[:-2]) & (v[1:-1] > v[2:])) + 1
