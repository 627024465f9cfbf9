"""Uniform handles over the six modeling methods.

Each method exposes ``fit(series, stream=...)`` returning a fitted model with
``one_step`` (modeling task), ``forecast`` (forecasting task), ``curve`` and
``to_json``. Curve models predict week t+1 from their fitted curve;
state models (classical SIR, SLOW) step forward from the observed value.
"""
import logging
import zlib
from abc import ABC, abstractmethod
from functools import lru_cache
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from epimix import sir as sir_model
from epimix.config import METHOD_NAMES, MethodSettings
from epimix.core import WeeklySeries
from epimix.dictionary import (
    Dictionary,
    Weights,
    build_gaussian_dictionary,
    build_sir_dictionary,
    dict_components,
    dict_fit,
    dict_predict,
    weights_frame,
)
from epimix.errors import UnknownMethod
from epimix.evaluation import HORIZONS, slow_forecast
from epimix.mixture import (
    MixtureFit,
    fit_gaussian_mixture,
    fit_sir_mixture,
    gaussian_bounds,
    gaussian_mixture_components,
    gaussian_mixture_eval,
    sir_bounds,
    sir_mixture_curve,
)
from epimix.solvers.gsa import GsaConfig

logger = logging.getLogger(__name__)


def country_stream(country: str) -> int:
    """Stable RNG stream id for a country label."""
    return zlib.crc32(country.encode("utf-8")) & 0x7FFFFFFF


class FittedModel(ABC):
    family: str = ""

    @abstractmethod
    def one_step(self, observed: np.ndarray) -> np.ndarray:
        """Predictions for weeks 1..T-1 given observations for weeks 0..T-1."""

    @abstractmethod
    def forecast(self, history: np.ndarray, horizon: int) -> np.ndarray:
        """Values for the ``horizon`` weeks after the last observed week."""

    def curve(self, weeks: int) -> Optional[np.ndarray]:
        return None

    def components(self, weeks: int) -> List[Tuple[str, np.ndarray]]:
        return []

    def to_json(self) -> Dict[str, Any]:
        return {"model_family": self.family}


class CurveModel(FittedModel):
    @abstractmethod
    def curve(self, weeks: int) -> np.ndarray:
        """Fitted curve over weeks 0..weeks."""

    def one_step(self, observed: np.ndarray) -> np.ndarray:
        return self.curve(len(observed) - 1)[1:]

    def forecast(self, history: np.ndarray, horizon: int) -> np.ndarray:
        last = len(history) - 1
        return self.curve(last + horizon)[last + 1:]


class ForecastMethod(ABC):
    name: str = ""

    def __init__(self, settings: Optional[MethodSettings] = None):
        self.settings = settings or MethodSettings()

    @abstractmethod
    def fit(self, series: WeeklySeries, stream: int = 0, **overrides) -> FittedModel:
        ...


# -- SLOW -----------------------------------------------------------------------

class SlowModel(FittedModel):
    family = "slow"

    def one_step(self, observed):
        return np.asarray(observed, dtype=float)[:-1]

    def forecast(self, history, horizon):
        return np.array([slow_forecast(history, h) for h in range(1, horizon + 1)])


class SlowMethod(ForecastMethod):
    name = "slow"

    def fit(self, series, stream=0, **overrides):
        return SlowModel()


# -- classical SIR --------------------------------------------------------------

class ClassicalSirModel(FittedModel):
    family = "sir"

    def __init__(self, fit: sir_model.ClassicalSirFit):
        self.fit = fit

    def one_step(self, observed):
        return sir_model.one_step_predictions(np.asarray(observed, dtype=float), self.fit.params)

    def forecast(self, history, horizon):
        return sir_model.forecast_from(np.asarray(history, dtype=float), self.fit.params, horizon)

    def to_json(self):
        p = self.fit.params
        return {
            "model_family": self.family,
            "parameters": {"beta": p.beta, "gamma": p.gamma, "n": p.n},
            "initial_state": {"s": self.fit.initial_state.s, "i": self.fit.initial_state.i,
                              "r": self.fit.initial_state.r},
            "objective": self.fit.objective,
            "degenerate": self.fit.degenerate,
        }


class ClassicalSirMethod(ForecastMethod):
    name = "sir"

    def fit(self, series, stream=0, **overrides):
        return ClassicalSirModel(sir_model.fit_classical(series))


# -- dictionaries ---------------------------------------------------------------

@lru_cache(maxsize=8)
def cached_dictionary(family: str, weeks: int) -> Dictionary:
    if family == "gaussian":
        return build_gaussian_dictionary(weeks=weeks)
    return build_sir_dictionary(weeks=weeks)


class DictionaryModel(CurveModel):
    def __init__(self, family: str, dictionary: Dictionary, weights: Weights, solver: str):
        self.family = family
        self.dictionary = dictionary
        self.weights = weights
        self.solver = solver

    def curve(self, weeks):
        return dict_predict(self.dictionary, self.weights, np.arange(weeks + 1))

    def components(self, weeks):
        return [
            (";".join(f"{k}={v:g}" for k, v in meta.describe().items()), curve)
            for _, meta, _, curve in dict_components(self.dictionary, self.weights, np.arange(weeks + 1))
        ]

    def weights_table(self) -> pd.DataFrame:
        return weights_frame(self.dictionary, self.weights)

    def to_json(self):
        return {
            "model_family": self.family,
            "lambda": self.weights.lam,
            "solver": self.solver,
            "atoms": self.dictionary.size,
            "support_size": self.weights.support_size,
            "objective": self.weights.objective,
        }


class DictionaryMethod(ForecastMethod):
    def __init__(self, family: str, settings: Optional[MethodSettings] = None):
        super().__init__(settings)
        self.dictionary_family = family
        self.name = "gauss-dict" if family == "gaussian" else "sir-dict"

    def dictionary_for(self, series: WeeklySeries) -> Dictionary:
        """Atoms long enough to fit the series and forecast every horizon past it."""
        weeks = max(self.settings.dict_horizon, series.weeks + max(HORIZONS))
        return cached_dictionary(self.dictionary_family, weeks)

    def fit(self, series, stream=0, solver=None, max_iter=None, **overrides):
        solver = solver or self.settings.solver
        dictionary = self.dictionary_for(series)
        weights = dict_fit(
            dictionary, series, self.settings.lam,
            method=solver, max_iter=max_iter or self.settings.max_iter,
        )
        return DictionaryModel(self.name, dictionary, weights, solver)


# -- mixtures -------------------------------------------------------------------

class MixtureModel(CurveModel):
    def __init__(self, fit: MixtureFit):
        self.fit = fit
        self.family = fit.family

    def curve(self, weeks):
        if self.family == "mix-gauss":
            return gaussian_mixture_eval(self.fit.params, np.arange(weeks + 1))
        return sir_mixture_curve(self.fit.params, weeks)

    def components(self, weeks):
        if self.family == "mix-gauss":
            rows = gaussian_mixture_components(self.fit.params, np.arange(weeks + 1))
            labels = [f"mu={c.mu:g};sigma={c.sigma:g}" for c in self.fit.params.components]
        else:
            horizon = max(weeks, self.fit.params.max_shift)
            rows = [sir_model.simulate_shifted(c, horizon)[: weeks + 1] for c in self.fit.params.components]
            labels = [f"s0={c.s0:g};beta={c.beta:g};gamma={c.gamma:g};c={c.c:g};k={c.k}"
                      for c in self.fit.params.components]
        return list(zip(labels, rows))

    def to_json(self):
        return self.fit.to_json()


class GaussianMixtureMethod(ForecastMethod):
    name = "mix-gauss"

    def fit(self, series, stream=0, **overrides):
        config = GsaConfig(bounds=gaussian_bounds(self.settings.m), seed=self.settings.seed,
                           stream=stream, max_iterations=self.settings.gsa_maxiter)
        return MixtureModel(fit_gaussian_mixture(series, self.settings.m, config))


class SirMixtureMethod(ForecastMethod):
    name = "mix-sir"

    def fit(self, series, stream=0, **overrides):
        config = GsaConfig(bounds=sir_bounds(self.settings.m), seed=self.settings.seed,
                           stream=stream, max_iterations=self.settings.gsa_maxiter)
        return MixtureModel(fit_sir_mixture(series, self.settings.m, config))


def build_method(name: str, settings: Optional[MethodSettings] = None) -> ForecastMethod:
    if name == "slow":
        return SlowMethod(settings)
    if name == "sir":
        return ClassicalSirMethod(settings)
    if name == "gauss-dict":
        return DictionaryMethod("gaussian", settings)
    if name == "sir-dict":
        return DictionaryMethod("sir", settings)
    if name == "mix-gauss":
        return GaussianMixtureMethod(settings)
    if name == "mix-sir":
        return SirMixtureMethod(settings)
    raise UnknownMethod(f"unknown method {name!r}; expected one of {', '.join(METHOD_NAMES)}")
