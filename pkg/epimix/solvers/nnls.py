"""Non-negative ridge least squares.

Solves  min_θ ||A θ - b||² + λ ||θ||²  s.t. θ ≥ 0  for a design matrix A (T × S).
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy.optimize import nnls

from epimix.errors import NonConvergence, ParameterError

logger = logging.getLogger(__name__)

MAX_ITERATIONS = 100_000
SOLVER_METHODS = ("active-set", "projected-gradient")


@dataclass
class NnlsResult:
    theta: np.ndarray
    objective: float
    iterations: int
    method: str
    history: List[float] = field(default_factory=list)


def objective(design: np.ndarray, target: np.ndarray, lam: float, theta: np.ndarray) -> float:
    resid = design @ theta - target
    return float(resid @ resid + lam * (theta @ theta))


def gradient(design: np.ndarray, target: np.ndarray, lam: float, theta: np.ndarray) -> np.ndarray:
    return 2.0 * (design.T @ (design @ theta - target) + lam * theta)


def kkt_tolerance(target: np.ndarray) -> float:
    return 1e-6 * (1.0 + float(target @ target))


def kkt_certificate(design: np.ndarray, target: np.ndarray, lam: float, theta: np.ndarray) -> bool:
    """Stationarity/complementarity check for a candidate solution."""
    eps = kkt_tolerance(target)
    grad = gradient(design, target, lam, theta)
    return bool(
        np.all(theta >= 0)
        and np.all(grad >= -eps)
        and np.all(theta * grad <= eps)
    )


def _active_set(design, target, lam, max_iter):
    n_atoms = design.shape[1]
    if lam > 0:
        design = np.vstack([design, np.sqrt(lam) * np.eye(n_atoms)])
        target = np.concatenate([target, np.zeros(n_atoms)])
    try:
        theta, _ = nnls(design, target, maxiter=max_iter)
    except RuntimeError as exc:
        raise NonConvergence(f"active-set NNLS: {exc}", iterations=max_iter) from exc
    return np.maximum(theta, 0.0), 0


def _projected_gradient(design, target, lam, max_iter, theta0, history):
    """Monotone projected gradient with backtracking."""
    lipschitz = 2.0 * (np.linalg.norm(design, 2) ** 2 + lam)
    step = 1.0 / lipschitz if lipschitz > 0 else 1.0
    theta = np.zeros(design.shape[1]) if theta0 is None else np.maximum(np.asarray(theta0, float), 0.0)
    value = objective(design, target, lam, theta)
    history.append(value)
    tol = 1e-12 * (1.0 + float(np.linalg.norm(design.T @ target)))

    for it in range(1, max_iter + 1):
        grad = gradient(design, target, lam, theta)
        trial_step = 2.0 * step
        while True:
            candidate = np.maximum(theta - trial_step * grad, 0.0)
            delta = candidate - theta
            new_value = objective(design, target, lam, candidate)
            bound = value + grad @ delta + (delta @ delta) / (2.0 * trial_step)
            if new_value <= bound or trial_step <= 1e-30:
                break
            trial_step *= 0.5
        step = trial_step
        if new_value > value:
            # numerical floor reached; keep the monotone iterate
            return theta, it
        theta, value = candidate, new_value
        history.append(value)
        if np.linalg.norm(delta) / trial_step <= tol:
            return theta, it
    return theta, max_iter


def nnls_ridge(
    design: np.ndarray,
    target: np.ndarray,
    lam: float,
    method: str = "active-set",
    max_iter: int = MAX_ITERATIONS,
    theta0: Optional[np.ndarray] = None,
) -> NnlsResult:
    design = np.asarray(design, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if design.ndim != 2 or design.shape[0] != target.shape[0]:
        raise ParameterError(f"design {design.shape} does not match target length {target.shape[0]}")
    if lam < 0:
        raise ParameterError(f"lambda must be >= 0, got {lam}")
    if method not in SOLVER_METHODS:
        raise ParameterError(f"unknown NNLS method {method!r}; expected one of {SOLVER_METHODS}")

    history: List[float] = []
    if method == "active-set":
        theta, iterations = _active_set(design, target, lam, max_iter)
    else:
        theta, iterations = _projected_gradient(design, target, lam, max_iter, theta0, history)

    if not kkt_certificate(design, target, lam, theta):
        raise NonConvergence(
            f"{method} NNLS failed the KKT certificate after {iterations or max_iter} iterations",
            iterations=iterations,
        )
    value = objective(design, target, lam, theta)
    logger.debug("%s NNLS: objective=%.6g iterations=%d support=%d",
                 method, value, iterations, int(np.count_nonzero(theta)))
    return NnlsResult(theta=theta, objective=value, iterations=iterations, method=method, history=history)
