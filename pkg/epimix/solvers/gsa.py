"""Generalized simulated annealing inside a bound box.

Thin layer over ``scipy.optimize.dual_annealing`` (Tsallis visiting
distribution, generalized Metropolis acceptance, per-sweep cycling over all
variables) with an optional bounded Nelder–Mead polish of the best point.
"""
import logging
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator
from scipy.optimize import dual_annealing

from epimix.core import SeededRng
from epimix.solvers.simplex import refine

logger = logging.getLogger(__name__)

DEFAULT_SEED = 20200730


class GsaConfig(BaseModel):
    bounds: List[Tuple[float, float]]
    visit: float = Field(2.62, description="visiting parameter q_v")
    accept: float = Field(-5.0, description="acceptance parameter q_a")
    initial_temp: float = 5230.0
    max_iterations: int = Field(1000, ge=1)
    seed: int = DEFAULT_SEED
    stream: int = 0
    local_polish: bool = True

    @field_validator("visit")
    @classmethod
    def _visit_range(cls, v: float) -> float:
        if not 1.0 < v < 3.0:
            raise ValueError(f"visiting parameter must lie in (1, 3), got {v}")
        return v

    @field_validator("accept")
    @classmethod
    def _accept_range(cls, v: float) -> float:
        if v >= 0:
            raise ValueError(f"acceptance parameter must be negative, got {v}")
        return v

    @model_validator(mode="after")
    def _check_bounds(self) -> "GsaConfig":
        if not self.bounds:
            raise ValueError("at least one bound pair is required")
        for j, (low, high) in enumerate(self.bounds):
            if not low < high:
                raise ValueError(f"bound {j}: low ({low}) must be < high ({high})")
        return self

    def with_stream(self, stream: int) -> "GsaConfig":
        return self.model_copy(update={"stream": stream})


def gsa_minimize(
    objective: Callable[[np.ndarray], float],
    config: GsaConfig,
    x0: Optional[Sequence[float]] = None,
) -> Tuple[np.ndarray, float]:
    """Return the best visited point and its objective value.

    Deterministic for a fixed (seed, stream); the result always lies inside
    ``config.bounds`` and is never worse than the start point.
    """
    lo = np.array([b[0] for b in config.bounds], dtype=float)
    hi = np.array([b[1] for b in config.bounds], dtype=float)
    start = (lo + hi) / 2.0 if x0 is None else np.clip(np.asarray(x0, dtype=float), lo, hi)
    start_value = float(objective(start))

    rng = SeededRng(config.seed, config.stream).generator()
    result = dual_annealing(
        objective,
        bounds=list(zip(lo, hi)),
        maxiter=config.max_iterations,
        initial_temp=config.initial_temp,
        visit=config.visit,
        accept=config.accept,
        seed=rng,
        no_local_search=True,
        x0=start,
    )
    best_x = np.clip(result.x, lo, hi)
    best_value = float(objective(best_x))
    if not np.isfinite(best_value) or best_value > start_value:
        best_x, best_value = start, start_value
    logger.debug("annealing: %d evaluations, objective %.6g", result.nfev, best_value)

    if config.local_polish:
        best_x, best_value = refine(objective, best_x, config.bounds)
    return best_x, best_value
