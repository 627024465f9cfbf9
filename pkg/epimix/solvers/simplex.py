"""Bounded derivative-free local refinement (Nelder–Mead)."""
from typing import Callable, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize

Bounds = Sequence[Tuple[float, float]]


def refine(
    fun: Callable[[np.ndarray], float],
    x0: Sequence[float],
    bounds: Bounds,
    fatol: float = 1e-8,
    xatol: float = 1e-10,
    max_iter: int = 4000,
) -> Tuple[np.ndarray, float]:
    """Polish ``x0`` inside ``bounds``; never returns a worse point than ``x0``.

    Deterministic for a given start point.
    """
    lo = np.array([b[0] for b in bounds], dtype=float)
    hi = np.array([b[1] for b in bounds], dtype=float)
    start = np.clip(np.asarray(x0, dtype=float), lo, hi)
    start_value = float(fun(start))

    res = minimize(
        fun,
        start,
        method="Nelder-Mead",
        bounds=list(zip(lo, hi)),
        options={"xatol": xatol, "fatol": fatol, "maxiter": max_iter, "maxfev": 4 * max_iter},
    )
    x = np.clip(res.x, lo, hi)
    value = float(fun(x))
    if not np.isfinite(value) or value > start_value:
        return start, start_value
    return x, value
