"""Fixed-size mixtures of M fittable curves, fitted by simulated annealing.

Gaussian variable layout: [θ0, θ1, μ1, σ1, θ2, μ2, σ2, ...].
SIR variable layout: [S0_1, β_1, γ_1, C_1, k_1, S0_2, ...].
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Generic, List, Optional, Sequence, Tuple, TypeVar

import numpy as np

from epimix.core import ShiftedSirParams, WeeklySeries
from epimix.errors import ParameterError
from epimix.sir import shifted_infected, simulate_shifted
from epimix.solvers.gsa import GsaConfig, gsa_minimize

logger = logging.getLogger(__name__)

AMPLITUDE_BOUNDS = (0.0, 3e5)
MEAN_BOUNDS = (0.0, 50.0)
WIDTH_BOUNDS = (1.0, 6.0)
S0_BOUNDS = (1.0, 1e8)
BETA_BOUNDS = (0.0, 1.0)
GAMMA_BOUNDS = (0.0, 1.0)
INJECTION_BOUNDS = (0.0, 1e3)
SHIFT_BOUNDS = (0.0, 50.0)

DEFAULT_COMPONENTS = 3
LARGE_M_WARNING = 5

P = TypeVar("P")


@dataclass(frozen=True)
class GaussianComponent:
    amplitude: float
    mu: float
    sigma: float


@dataclass(frozen=True)
class GaussianMixtureParams:
    theta0: float
    components: Tuple[GaussianComponent, ...]

    def __post_init__(self):
        for comp in self.components:
            if comp.amplitude < 0:
                raise ParameterError(f"negative amplitude {comp.amplitude}")
            if comp.sigma <= 0:
                raise ParameterError(f"sigma must be positive, got {comp.sigma}")

    @property
    def m(self) -> int:
        return len(self.components)

    def as_list(self) -> List[float]:
        out = [self.theta0]
        for comp in self.components:
            out += [comp.amplitude, comp.mu, comp.sigma]
        return out


@dataclass(frozen=True)
class SirMixtureParams:
    components: Tuple[ShiftedSirParams, ...]

    @property
    def m(self) -> int:
        return len(self.components)

    @property
    def max_shift(self) -> int:
        return max(c.k for c in self.components)

    def as_list(self) -> List[float]:
        return [v for comp in self.components for v in comp.as_list()]


@dataclass(frozen=True)
class MixtureFit(Generic[P]):
    family: str
    params: P
    objective: float
    initial_objective: float
    config: GsaConfig
    metadata: Dict[str, Any] = field(default_factory=dict)

    def to_json(self, mape: Optional[float] = None) -> Dict[str, Any]:
        return {
            "model_family": self.family,
            "M": self.params.m,
            "bounds": [list(b) for b in self.config.bounds],
            "seed": self.config.seed,
            "stream": self.config.stream,
            "parameters": self.params.as_list(),
            "objective": self.objective,
            "mape": mape,
        }


# -- evaluation -----------------------------------------------------------------

def _gaussian_curves(params: GaussianMixtureParams, weeks: np.ndarray) -> np.ndarray:
    t = np.asarray(weeks, dtype=float)
    return np.array([
        c.amplitude * np.exp(-((t - c.mu) ** 2) / (2.0 * c.sigma ** 2)) for c in params.components
    ]).reshape(len(params.components), t.size)


def gaussian_mixture_eval(params: GaussianMixtureParams, weeks: Sequence[int]) -> np.ndarray:
    return params.theta0 + _gaussian_curves(params, np.asarray(weeks)).sum(axis=0)


def gaussian_mixture_components(params: GaussianMixtureParams, weeks: Sequence[int]) -> np.ndarray:
    """One row per latent component (offset excluded)."""
    return _gaussian_curves(params, np.asarray(weeks))


def sir_mixture_components(params: SirMixtureParams, weeks: int) -> np.ndarray:
    if weeks < params.max_shift:
        raise ParameterError(f"weeks ({weeks}) must cover the largest shift ({params.max_shift})")
    return np.array([simulate_shifted(comp, weeks) for comp in params.components])


def sir_mixture_eval(params: SirMixtureParams, weeks: int) -> np.ndarray:
    """Aggregate infected series Σ_m I_{t,m} over weeks 0..weeks."""
    total = np.zeros(weeks + 1)
    for row in sir_mixture_components(params, weeks):
        total = total + row
    return total


# -- fitting --------------------------------------------------------------------

def gaussian_bounds(m: int) -> List[Tuple[float, float]]:
    return [AMPLITUDE_BOUNDS] + [AMPLITUDE_BOUNDS, MEAN_BOUNDS, WIDTH_BOUNDS] * m


def sir_bounds(m: int) -> List[Tuple[float, float]]:
    return [S0_BOUNDS, BETA_BOUNDS, GAMMA_BOUNDS, INJECTION_BOUNDS, SHIFT_BOUNDS] * m


def _check_m(m: int) -> None:
    if m < 1:
        raise ParameterError(f"M must be >= 1, got {m}")
    if m > LARGE_M_WARNING:
        logger.warning("M=%d: the annealing search space grows quickly with M; "
                       "consider a dictionary model instead", m)


def _gaussian_from_vector(x: np.ndarray) -> GaussianMixtureParams:
    comps = tuple(
        GaussianComponent(float(x[j]), float(x[j + 1]), float(x[j + 2])) for j in range(1, len(x), 3)
    )
    return GaussianMixtureParams(theta0=float(x[0]), components=comps)


def _sir_from_vector(x: np.ndarray) -> SirMixtureParams:
    return SirMixtureParams(components=tuple(
        ShiftedSirParams(s0=float(x[j]), beta=float(x[j + 1]), gamma=float(x[j + 2]),
                         c=float(x[j + 3]), k=int(np.rint(x[j + 4])))
        for j in range(0, len(x), 5)
    ))


def _gaussian_start(y: np.ndarray, m: int, bounds) -> np.ndarray:
    peak = float(y.max())
    x = [float(y.min())]
    for j in range(m):
        x += [peak, MEAN_BOUNDS[0] + (j + 1) * (MEAN_BOUNDS[1] - MEAN_BOUNDS[0]) / (m + 1), 3.0]
    lo, hi = np.array(bounds).T
    return np.clip(np.array(x), lo, hi)


def _sir_start(m: int, bounds) -> np.ndarray:
    x = []
    for j in range(m):
        x += [1e5, 0.7, 0.5, 100.0, j * SHIFT_BOUNDS[1] / (m + 1)]
    lo, hi = np.array(bounds).T
    return np.clip(np.array(x), lo, hi)


def _resolve_config(config: Optional[GsaConfig], bounds) -> GsaConfig:
    if config is None:
        return GsaConfig(bounds=bounds)
    if len(config.bounds) != len(bounds):
        return config.model_copy(update={"bounds": bounds})
    return config


def fit_gaussian_mixture(
    series: WeeklySeries, m: int = DEFAULT_COMPONENTS, config: Optional[GsaConfig] = None
) -> MixtureFit[GaussianMixtureParams]:
    _check_m(m)
    y = np.asarray(series.values, dtype=float)
    t = np.arange(y.size, dtype=float)
    config = _resolve_config(config, gaussian_bounds(m))
    scale = 1.0 + float(y @ y)

    def loss(x: np.ndarray) -> float:
        amp, mu, sigma = x[1::3], x[2::3], x[3::3]
        curve = x[0] + (amp[:, None] * np.exp(-((t[None, :] - mu[:, None]) ** 2)
                                              / (2.0 * sigma[:, None] ** 2))).sum(axis=0)
        resid = y - curve
        return float(resid @ resid) / scale

    start = _gaussian_start(y, m, config.bounds)
    best_x, best_value = gsa_minimize(loss, config, x0=start)
    params = _gaussian_from_vector(best_x)
    logger.info("%s: Gaussian mixture M=%d objective %.4g", series.country, m, best_value * scale)
    return MixtureFit(
        family="mix-gauss",
        params=params,
        objective=best_value * scale,
        initial_objective=loss(start) * scale,
        config=config,
    )


def fit_sir_mixture(
    series: WeeklySeries, m: int = DEFAULT_COMPONENTS, config: Optional[GsaConfig] = None
) -> MixtureFit[SirMixtureParams]:
    _check_m(m)
    y = np.asarray(series.values, dtype=float)
    weeks = y.size - 1
    config = _resolve_config(config, sir_bounds(m))
    scale = 1.0 + float(y @ y)

    def loss(x: np.ndarray) -> float:
        v = x.reshape(m, 5)
        curves = shifted_infected(v[:, 0], v[:, 1], v[:, 2], v[:, 3], np.rint(v[:, 4]), weeks)
        resid = y - curves.sum(axis=0)
        return float(resid @ resid) / scale

    start = _sir_start(m, config.bounds)
    best_x, best_value = gsa_minimize(loss, config, x0=start)
    params = _sir_from_vector(best_x)
    logger.info("%s: SIR mixture M=%d objective %.4g", series.country, m, best_value * scale)
    return MixtureFit(
        family="mix-sir",
        params=params,
        objective=best_value * scale,
        initial_objective=loss(start) * scale,
        config=config,
    )


def sir_mixture_curve(params: SirMixtureParams, weeks: int) -> np.ndarray:
    """Aggregate curve over weeks 0..weeks, tolerating shifts beyond the horizon."""
    horizon = max(weeks, params.max_shift)
    return sir_mixture_eval(params, horizon)[: weeks + 1]
