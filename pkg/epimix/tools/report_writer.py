"""Single collector for every file a command writes.

Each CSV opens with ``# config: <canonical JSON>``; each JSON document embeds
the same config under ``"config"``. Floats are written with 17 significant
digits so reruns with the same inputs are byte-identical.
"""
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import pandas as pd

from epimix.config import RunConfig, canonical_json

logger = logging.getLogger(__name__)

CONFIG_PREFIX = "# config: "
FLOAT_FORMAT = "%.17g"


def _plain(value: Any) -> Any:
    """JSON-safe copy: numpy scalars/arrays unwrapped, NaN/inf become null."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, Path):
        return str(value)
    return value


class ReportWriter:
    def __init__(self, out_dir: Union[str, Path], config: Optional[RunConfig] = None):
        self.out_dir = Path(out_dir)
        self.config = config
        self.written: List[Path] = []
        self.errors: List[Dict[str, Any]] = []

    @property
    def header(self) -> str:
        payload = self.config.canonical_json() if self.config is not None else canonical_json({})
        return f"{CONFIG_PREFIX}{payload}\n"

    def _target(self, name: Union[str, Path]) -> Path:
        path = self.out_dir / name
        path.parent.mkdir(parents=True, exist_ok=True)
        return path

    def write_csv(self, name: Union[str, Path], frame: pd.DataFrame) -> Path:
        path = self._target(name)
        body = frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(self.header)
            f.write(body)
        self.written.append(path)
        logger.debug("wrote %s (%d rows)", path, len(frame))
        return path

    def write_json(self, name: Union[str, Path], payload: Dict[str, Any]) -> Path:
        path = self._target(name)
        document = dict(payload)
        document["config"] = json.loads(self.header[len(CONFIG_PREFIX):])
        with open(path, "w", encoding="utf-8") as f:
            json.dump(_plain(document), f, sort_keys=True, indent=2, allow_nan=False)
            f.write("\n")
        self.written.append(path)
        return path

    def record_error(self, exc: BaseException, exit_code: int, **context: Any) -> Dict[str, Any]:
        """Remember a failure for errors.json and return its summary."""
        entry = {
            "error": type(exc).__name__,
            "message": str(exc),
            "exit_code": exit_code,
            **context,
        }
        self.errors.append(_plain(entry))
        return entry

    def write_errors(self) -> Optional[Path]:
        if not self.errors:
            return None
        return self.write_json("errors.json", {"errors": self.errors})


def read_config_header(path: Union[str, Path]) -> Optional[Dict[str, Any]]:
    """Config embedded in a CSV written by ``ReportWriter``, if any."""
    with open(path, "r", encoding="utf-8") as f:
        first = f.readline()
    if not first.startswith(CONFIG_PREFIX):
        return None
    return json.loads(first[len(CONFIG_PREFIX):])
