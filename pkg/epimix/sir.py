"""Discrete-time SIR recursions and classical (β, γ, N) fitting.

Every step moves min(β S I / N, S) people from S to I and min(γ I, I) from
I to R, so compartments stay non-negative for any non-negative parameters.
"""
import logging
from dataclasses import dataclass
from typing import Iterable, Tuple

import numpy as np

from epimix.core import ShiftedSirParams, SirParams, SirState, WeeklySeries
from epimix.errors import ParameterError, TooShort
from epimix.solvers.simplex import refine

logger = logging.getLogger(__name__)

N_GRID = tuple(10.0 ** e for e in np.arange(4.0, 9.01, 0.5))
RATE_BOUNDS = ((0.0, 5.0), (0.0, 5.0))
RATE_START = (0.5, 0.3)


@dataclass(frozen=True)
class SirTrajectory:
    states: Tuple[SirState, ...]

    def __len__(self) -> int:
        return len(self.states)

    @property
    def s(self) -> np.ndarray:
        return np.array([st.s for st in self.states])

    @property
    def i(self) -> np.ndarray:
        return np.array([st.i for st in self.states])

    @property
    def r(self) -> np.ndarray:
        return np.array([st.r for st in self.states])


def step(state: SirState, params: SirParams) -> SirState:
    infect = min(params.beta * state.s * state.i / params.n, state.s)
    remove = min(params.gamma * state.i, state.i)
    return SirState(
        s=state.s - infect,
        i=state.i + infect - remove,
        r=state.r + remove,
    )


def simulate(state0: SirState, params: SirParams, weeks: int) -> SirTrajectory:
    if weeks < 0:
        raise ParameterError(f"weeks must be >= 0, got {weeks}")
    states = [state0]
    for _ in range(weeks):
        states.append(step(states[-1], params))
    return SirTrajectory(states=tuple(states))


def _shifted_run(s0, beta, gamma, c, k, weeks: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    s0, beta, gamma, c, k = (np.atleast_1d(np.asarray(v, dtype=np.float64)) for v in (s0, beta, gamma, c, k))
    n = np.maximum(s0 + c, np.finfo(float).tiny)
    s = s0.copy()
    i = np.zeros_like(s)
    r = np.zeros_like(s)
    out = np.empty((3, s.size, weeks + 1))
    for t in range(weeks + 1):
        if t > 0:
            infect = np.minimum(beta * s * i / n, s)
            remove = np.minimum(gamma * i, i)
            s = s - infect
            i = i + infect - remove
            r = r + remove
        hit = k == t
        if hit.any():
            inject = np.where(hit, np.minimum(c, s), 0.0)
            s = s - inject
            i = i + inject
        out[0, :, t] = s
        out[1, :, t] = i
        out[2, :, t] = r
    return out[0], out[1], out[2]


def shifted_infected(s0, beta, gamma, c, k, weeks: int) -> np.ndarray:
    """Infected series of one or more shifted SIR sub-populations.

    Parameters are scalars or equal-length arrays (one entry per
    sub-population); returns an array of shape (M, weeks + 1). A shift beyond
    ``weeks`` leaves that sub-population dormant.
    """
    return _shifted_run(s0, beta, gamma, c, k, weeks)[1]


def simulate_shifted(params: ShiftedSirParams, weeks: int) -> np.ndarray:
    """Infected counts for weeks 0..weeks: zero before ``k``, then the SIR recursion.

    The injection moves min(C, S) people, so I_k = C holds only when
    ``c <= s0``; a larger ``c`` infects the whole susceptible pool instead.
    """
    if params.k > weeks:
        raise ParameterError(f"shift k={params.k} lies beyond the simulated horizon ({weeks} weeks)")
    return shifted_infected(params.s0, params.beta, params.gamma, params.c, params.k, weeks)[0]


def simulate_shifted_states(params: ShiftedSirParams, weeks: int) -> SirTrajectory:
    """Full (S, I, R) path of one shifted sub-population; S + I + R stays at s0."""
    if params.k > weeks:
        raise ParameterError(f"shift k={params.k} lies beyond the simulated horizon ({weeks} weeks)")
    s, i, r = (row[0] for row in _shifted_run(params.s0, params.beta, params.gamma, params.c, params.k, weeks))
    return SirTrajectory(states=tuple(SirState(float(a), float(b), float(d)) for a, b, d in zip(s, i, r)))


@dataclass(frozen=True)
class ClassicalSirFit:
    params: SirParams
    initial_state: SirState
    objective: float
    degenerate: bool = False


def teacher_forced_susceptibles(observed: np.ndarray, beta: float, n: float) -> np.ndarray:
    """S_t driven by the observed infected counts: S_t = S_{t-1} - min(β S I / N, S)."""
    s0 = max(n - observed[0], 0.0)
    factors = np.maximum(1.0 - beta * observed[:-1] / n, 0.0)
    return s0 * np.concatenate([[1.0], np.cumprod(factors)])


def one_step_predictions(observed: np.ndarray, params: SirParams) -> np.ndarray:
    """Predicted I_t for t = 1..T-1 from observed I_{t-1} and teacher-forced S_{t-1}."""
    prev = observed[:-1]
    s_prev = teacher_forced_susceptibles(observed, params.beta, params.n)[:-1]
    infect = np.minimum(params.beta * s_prev * prev / params.n, s_prev)
    remove = np.minimum(params.gamma * prev, prev)
    return prev + infect - remove


def _fit_objective(observed: np.ndarray, n: float, scale: float):
    target = observed[1:]

    def loss(x: np.ndarray) -> float:
        beta, gamma = float(x[0]), float(x[1])
        if beta < 0 or gamma < 0:
            return np.inf
        pred = one_step_predictions(observed, SirParams(beta, gamma, n))
        resid = target - pred
        return float(resid @ resid) / scale

    return loss


def fit_classical(series: WeeklySeries, n_grid: Iterable[float] = N_GRID) -> ClassicalSirFit:
    """Fit (β, γ, N) to the one-step infected error; N over a log grid."""
    observed = np.asarray(series.values, dtype=np.float64)
    if observed.size < 3:
        raise TooShort(f"{series.country}: classical SIR fit needs at least 3 weeks, got {observed.size}")
    n_grid = tuple(n_grid)

    if not observed.any():
        logger.warning("%s: all-zero series, returning degenerate SIR fit", series.country)
        n = min(n_grid)
        return ClassicalSirFit(
            params=SirParams(0.0, 0.0, n),
            initial_state=SirState(n, 0.0, 0.0),
            objective=0.0,
            degenerate=True,
        )

    scale = 1.0 + float(observed[1:] @ observed[1:])
    best = None
    for n in n_grid:
        x, value = refine(_fit_objective(observed, n, scale), RATE_START, RATE_BOUNDS)
        if best is None or value < best[2]:
            best = (n, x, value)

    n, x, value = best
    # restart the simplex at the winner to escape a collapsed simplex
    x, value = refine(_fit_objective(observed, n, scale), x, RATE_BOUNDS)
    params = SirParams(beta=float(x[0]), gamma=float(x[1]), n=n)
    logger.debug("%s: SIR fit beta=%.4f gamma=%.4f N=%.3g", series.country, params.beta, params.gamma, n)
    return ClassicalSirFit(
        params=params,
        initial_state=SirState(max(n - observed[0], 0.0), float(observed[0]), 0.0),
        objective=value * scale,
    )


def forecast_from(observed: np.ndarray, params: SirParams, horizon: int) -> np.ndarray:
    """Iterate the SIR recursion forward from the last observed week for ``horizon`` weeks."""
    s_last = teacher_forced_susceptibles(observed, params.beta, params.n)[-1]
    state = SirState(s_last, float(observed[-1]), 0.0)
    out = []
    for _ in range(horizon):
        state = step(state, params)
        out.append(state.i)
    return np.array(out)
