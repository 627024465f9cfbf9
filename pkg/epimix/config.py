"""Run configuration: pydantic models, JSON config file, canonical JSON."""
import json
from datetime import date
from pathlib import Path
from typing import Any, Dict, List, Literal, Mapping, Optional, Union

from pydantic import BaseModel, Field, field_validator

from epimix.dictionary import DEFAULT_LAMBDA
from epimix.mixture import DEFAULT_COMPONENTS
from epimix.solvers.gsa import DEFAULT_SEED

METHOD_NAMES = ("sir", "gauss-dict", "sir-dict", "mix-gauss", "mix-sir", "slow")
COMMANDS = ("build-dict", "fit", "forecast", "evaluate", "synth", "report")
DATA_DIR_ENV = "EPIMIX_DATA_DIR"
WINDOW_START = date(2020, 7, 30)
WINDOW_WEEKS = 52
DICT_HORIZON = 56


class MethodSettings(BaseModel):
    """Per-method knobs shipped to every worker."""
    lam: float = Field(DEFAULT_LAMBDA, ge=0)
    m: int = Field(DEFAULT_COMPONENTS, ge=1)
    seed: int = DEFAULT_SEED
    solver: Literal["active-set", "projected-gradient"] = "active-set"
    max_iter: int = Field(100_000, ge=1)
    gsa_maxiter: int = Field(1000, ge=1)
    dict_horizon: int = Field(DICT_HORIZON, ge=1)


class RunConfig(BaseModel):
    command: Literal["build-dict", "fit", "forecast", "evaluate", "synth", "report"]
    data: Optional[Path] = None
    methods: List[str] = Field(default_factory=lambda: ["gauss-dict"])
    lam: float = Field(DEFAULT_LAMBDA, ge=0)
    m: int = Field(DEFAULT_COMPONENTS, ge=1)
    seed: int = DEFAULT_SEED
    countries: Optional[List[str]] = None
    out: Path = Path("outputs")
    tasks: List[Literal["t1", "t2"]] = Field(default_factory=lambda: ["t1"])
    horizons: List[int] = Field(default_factory=lambda: [1, 2, 3, 4])
    workers: int = Field(1, ge=1)
    window_start: date = WINDOW_START
    weeks: int = Field(WINDOW_WEEKS, ge=1)
    solver: Literal["active-set", "projected-gradient"] = "active-set"
    max_countries: Optional[int] = Field(None, ge=1)
    gsa_maxiter: int = Field(1000, ge=1)
    dict_horizon: int = Field(DICT_HORIZON, ge=1)
    noise: float = Field(0.0, ge=0)

    @field_validator("methods")
    @classmethod
    def _known_methods(cls, v: List[str]) -> List[str]:
        unknown = [m for m in v if m not in METHOD_NAMES]
        if unknown:
            raise ValueError(f"unknown method(s) {unknown}; expected {list(METHOD_NAMES)}")
        if not v:
            raise ValueError("at least one method is required")
        return v

    @field_validator("horizons")
    @classmethod
    def _horizon_range(cls, v: List[int]) -> List[int]:
        if not v or any(h < 1 or h > 4 for h in v):
            raise ValueError(f"horizons must be a non-empty subset of 1..4, got {v}")
        return sorted(set(v))

    @field_validator("countries")
    @classmethod
    def _non_empty_filter(cls, v: Optional[List[str]]) -> Optional[List[str]]:
        if v is not None and not v:
            raise ValueError("country filter is empty")
        return v

    def method_settings(self) -> MethodSettings:
        return MethodSettings(
            lam=self.lam, m=self.m, seed=self.seed, solver=self.solver,
            gsa_maxiter=self.gsa_maxiter, dict_horizon=self.dict_horizon,
        )

    def canonical_json(self) -> str:
        return canonical_json(self.model_dump(mode="json"))


def canonical_json(payload: Any) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), allow_nan=True)


def load_run_config(
    command: str,
    overrides: Mapping[str, Any],
    config_file: Optional[Union[str, Path]] = None,
) -> RunConfig:
    """File values first, then every explicitly passed flag on top."""
    values: Dict[str, Any] = {}
    if config_file is not None:
        with open(config_file, "r", encoding="utf-8") as f:
            values.update(json.load(f))
    values.update({k: v for k, v in overrides.items() if v is not None})
    values["command"] = command
    return RunConfig(**values)
