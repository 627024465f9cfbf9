"""Curve dictionaries and the non-negative ridge reconstruction x ≈ Dᵀθ."""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from epimix.core import WeeklySeries
from epimix.errors import DataError, ParameterError
from epimix.sir import shifted_infected
from epimix.solvers.nnls import MAX_ITERATIONS, nnls_ridge

logger = logging.getLogger(__name__)

GAUSSIAN_MEANS = tuple(float(m) for m in range(0, 53, 2))
GAUSSIAN_SIGMAS = tuple(float(s) for s in range(1, 30, 2))
SIR_S0 = (1e4, 1e5, 1e6)
SIR_BETAS = (0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
SIR_SHIFTS = tuple(range(0, 51, 2))
SIR_GAMMA = 0.5
SIR_INJECTION = 100.0

DEFAULT_LAMBDA = 1.0
SUPPORT_THRESHOLD = 1e-6

PARAM_NAMES = {"gaussian": ("mu", "sigma"), "sir": ("s0", "beta", "k")}


@dataclass(frozen=True)
class AtomMeta:
    family: str
    params: Tuple[float, ...]

    def describe(self) -> Dict[str, float]:
        names = PARAM_NAMES.get(self.family, tuple(f"p{j}" for j in range(len(self.params))))
        return dict(zip(names, self.params))


@dataclass(frozen=True)
class Dictionary:
    """S atoms × T weeks; every atom peaks at exactly 1."""
    atoms: np.ndarray
    meta: Tuple[AtomMeta, ...]

    def __post_init__(self):
        if self.atoms.ndim != 2 or self.atoms.shape[0] < 1:
            raise ParameterError("a dictionary needs at least one atom")
        if len(self.meta) != self.atoms.shape[0]:
            raise ParameterError(f"{len(self.meta)} descriptors for {self.atoms.shape[0]} atoms")
        self.atoms.setflags(write=False)

    @property
    def size(self) -> int:
        return self.atoms.shape[0]

    @property
    def weeks(self) -> int:
        return self.atoms.shape[1] - 1

    @property
    def family(self) -> str:
        families = {m.family for m in self.meta}
        return families.pop() if len(families) == 1 else "mixed"

    def design(self, length: int) -> np.ndarray:
        """T × S design matrix over weeks 0..length-1."""
        if length > self.atoms.shape[1]:
            raise ParameterError(f"dictionary covers {self.atoms.shape[1]} weeks, {length} requested")
        return self.atoms[:, :length].T


@dataclass(frozen=True)
class Weights:
    theta: np.ndarray
    lam: float
    objective: float = float("nan")
    iterations: int = 0

    @property
    def support(self) -> np.ndarray:
        """Indices of non-zero coefficients (relative threshold on max θ)."""
        peak = float(self.theta.max()) if self.theta.size else 0.0
        if peak <= 0:
            return np.array([], dtype=int)
        return np.flatnonzero(self.theta > SUPPORT_THRESHOLD * peak)

    @property
    def support_size(self) -> int:
        return int(self.support.size)


def _normalize_rows(atoms: np.ndarray) -> np.ndarray:
    peaks = atoms.max(axis=1, keepdims=True)
    if (peaks <= 0).any():
        raise ParameterError("dictionary atom with no positive value on the week axis")
    return atoms / peaks


def build_gaussian_dictionary(
    means: Sequence[float] = GAUSSIAN_MEANS,
    sigmas: Sequence[float] = GAUSSIAN_SIGMAS,
    weeks: int = 52,
) -> Dictionary:
    means = np.asarray(means, dtype=float)
    sigmas = np.asarray(sigmas, dtype=float)
    if means.size == 0 or sigmas.size == 0:
        raise ParameterError("gaussian grids must be non-empty")
    if (sigmas <= 0).any():
        raise ParameterError(f"sigma must be positive, got {sigmas.min()}")
    if weeks < 1:
        raise ParameterError(f"weeks must be >= 1, got {weeks}")

    t = np.arange(weeks + 1, dtype=float)
    mu, sigma = (g.ravel() for g in np.meshgrid(means, sigmas, indexing="ij"))
    atoms = np.exp(-((t[None, :] - mu[:, None]) ** 2) / (2.0 * sigma[:, None] ** 2))
    meta = tuple(AtomMeta("gaussian", (float(m), float(s))) for m, s in zip(mu, sigma))
    logger.info("gaussian dictionary: %d atoms over %d weeks", len(meta), weeks + 1)
    return Dictionary(atoms=_normalize_rows(atoms), meta=meta)


def build_sir_dictionary(
    s0_grid: Sequence[float] = SIR_S0,
    beta_grid: Sequence[float] = SIR_BETAS,
    k_grid: Sequence[int] = SIR_SHIFTS,
    gamma: float = SIR_GAMMA,
    c: float = SIR_INJECTION,
    weeks: int = 52,
) -> Dictionary:
    if not len(s0_grid) or not len(beta_grid) or not len(k_grid):
        raise ParameterError("sir grids must be non-empty")
    if weeks < max(k_grid):
        raise ParameterError(f"weeks ({weeks}) must cover the largest shift ({max(k_grid)})")

    combos = [(float(s0), float(b), int(k)) for s0 in s0_grid for b in beta_grid for k in k_grid]
    s0, beta, k = (np.array(col, dtype=float) for col in zip(*combos))
    curves = shifted_infected(s0, beta, np.full_like(s0, gamma), np.full_like(s0, c), k, weeks)
    meta = tuple(AtomMeta("sir", combo) for combo in combos)
    logger.info("SIR dictionary: %d atoms over %d weeks (gamma=%g, C=%g)", len(meta), weeks + 1, gamma, c)
    return Dictionary(atoms=_normalize_rows(curves), meta=meta)


def solve_nnls_ridge(
    dictionary: Dictionary,
    x: Sequence[float],
    lam: float = DEFAULT_LAMBDA,
    method: str = "active-set",
    max_iter: int = MAX_ITERATIONS,
    theta0: Optional[np.ndarray] = None,
) -> Weights:
    """Non-negative ridge solve against the first len(x) weeks of every atom."""
    x = np.asarray(x, dtype=float)
    result = nnls_ridge(dictionary.design(x.size), x, lam, method=method, max_iter=max_iter, theta0=theta0)
    return Weights(theta=result.theta, lam=lam, objective=result.objective, iterations=result.iterations)


def dict_fit(dictionary: Dictionary, series: WeeklySeries, lam: float = DEFAULT_LAMBDA, **solver) -> Weights:
    weights = solve_nnls_ridge(dictionary, series.values, lam, **solver)
    logger.info("%s: %s dictionary support %d/%d (lambda=%g)",
                series.country, dictionary.family, weights.support_size, dictionary.size, lam)
    return weights


def dict_predict(dictionary: Dictionary, weights: Weights, weeks: Sequence[int]) -> np.ndarray:
    weeks = np.asarray(weeks, dtype=int)
    if weeks.size and (weeks.min() < 0 or weeks.max() > dictionary.weeks):
        raise ParameterError(f"dictionary atoms end at week {dictionary.weeks}; requested up to {weeks.max()}")
    return np.maximum(dictionary.atoms[:, weeks].T @ weights.theta, 0.0)


def dict_components(
    dictionary: Dictionary, weights: Weights, weeks: Sequence[int]
) -> List[Tuple[int, AtomMeta, float, np.ndarray]]:
    """Per-sub-population curves θ_i · atom_i for every atom in the support."""
    weeks = np.asarray(weeks, dtype=int)
    return [
        (int(i), dictionary.meta[i], float(weights.theta[i]), weights.theta[i] * dictionary.atoms[i, weeks])
        for i in weights.support
    ]


# -- CSV exchange ---------------------------------------------------------------

def _fmt(value: float) -> str:
    return "" if value is None or (isinstance(value, float) and np.isnan(value)) else format(value, ".17g")


def dictionary_frame(dictionary: Dictionary) -> pd.DataFrame:
    rows = []
    for meta, atom in zip(dictionary.meta, dictionary.atoms):
        params = list(meta.params) + [float("nan")] * (3 - len(meta.params))
        rows.append([meta.family] + params + list(atom))
    columns = ["family", "param1", "param2", "param3"] + [str(t) for t in range(dictionary.atoms.shape[1])]
    return pd.DataFrame(rows, columns=columns)


def read_dictionary_csv(path: Union[str, Path]) -> Dictionary:
    frame = pd.read_csv(path, comment="#", float_precision="round_trip")
    expected = ["family", "param1", "param2", "param3"]
    if list(frame.columns[:4]) != expected:
        raise DataError(f"{path}: dictionary header must start with {','.join(expected)}")
    meta = []
    for _, row in frame.iterrows():
        params = tuple(float(row[c]) for c in expected[1:] if pd.notna(row[c]))
        meta.append(AtomMeta(str(row["family"]), params))
    atoms = frame.iloc[:, 4:].to_numpy(dtype=float)
    return Dictionary(atoms=atoms, meta=tuple(meta))


def weights_frame(dictionary: Dictionary, weights: Weights) -> pd.DataFrame:
    return pd.DataFrame(
        [
            {
                "atom_index": int(i),
                "family": dictionary.meta[i].family,
                "params": ";".join(_fmt(p) for p in dictionary.meta[i].params),
                "theta": float(weights.theta[i]),
            }
            for i in weights.support
        ],
        columns=["atom_index", "family", "params", "theta"],
    )


def stem_frame(weights: pd.DataFrame) -> pd.DataFrame:
    """Weights table with the packed ``params`` column split into named parameter columns."""
    names: List[str] = []
    rows = []
    for record in weights.to_dict("records"):
        params = tuple(float(p) for p in str(record.pop("params")).split(";") if p)
        described = AtomMeta(str(record["family"]), params).describe()
        names += [n for n in described if n not in names]
        theta = record.pop("theta")
        rows.append({**record, **described, "theta": theta})
    leading = [c for c in weights.columns if c not in ("params", "theta")]
    return pd.DataFrame(rows, columns=leading + names + ["theta"])
