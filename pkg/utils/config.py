"""
Experiment configuration.

Values are merged in increasing precedence: per-experiment defaults, a
``key=value`` config file, then command-line flags. The data directory
falls back to the WPUNN_DATA_DIR environment variable, then ``./data``.
"""

import os
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

from utils.errors import ConfigurationError

DATA_DIR_ENV = "WPUNN_DATA_DIR"
DEFAULT_DATA_DIR = "data"
DEFAULT_OUT_DIR = "results"

EXPERIMENT_IDS = ("mnist-stride", "mnist-window", "poly", "co2", "gradcheck", "exact-poly")
MAX_DEGREE = 10

# Budgets chosen for desk-scale runs.
EXPERIMENT_DEFAULTS: Dict[str, Dict[str, Any]] = {
    "mnist-stride": {"learning_rate": 1e-4, "epochs": 20, "batch_size": 32, "w": 4},
    "mnist-window": {"learning_rate": 1e-4, "epochs": 20, "batch_size": 32, "s": 1},
    "poly": {"learning_rate": 1e-3, "epochs": 500, "batch_size": 32},
    "co2": {"learning_rate": 1e-2, "epochs": 1500, "bptt_length": 36, "eval_every": 25},
    "gradcheck": {},
    "exact-poly": {"count": 50},
}


def _parse_bool(value: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: '{value}'")


# config-file key -> (field name, parser)
FILE_KEYS: Dict[str, tuple] = {
    "w": ("w", int),
    "s": ("s", int),
    "d": ("d", int),
    "lr": ("learning_rate", float),
    "epochs": ("epochs", int),
    "seed": ("seed", int),
    "subset": ("subset", int),
    "out": ("out_dir", str),
    "data": ("data_dir", str),
    "label": ("label", str),
    "repeats": ("repeats", int),
    "workers": ("workers", int),
    "timing": ("timing", _parse_bool),
    "eval_every": ("eval_every", int),
    "count": ("count", int),
    "batch_size": ("batch_size", int),
    "bptt": ("bptt_length", int),
    "quiet": ("quiet", _parse_bool),
}


@dataclass
class ExperimentConfig:
    """Everything one experiment run needs."""

    experiment_id: str
    w: Optional[int] = None
    s: Optional[int] = None
    d: Optional[int] = None
    learning_rate: float = 1e-3
    epochs: int = 1
    seed: int = 0
    subset: Optional[int] = None
    out_dir: str = DEFAULT_OUT_DIR
    data_dir: str = DEFAULT_DATA_DIR
    label: Optional[str] = None
    repeats: int = 1
    workers: int = 1
    timing: bool = False
    eval_every: int = 1
    count: int = 50
    batch_size: int = 32
    bptt_length: int = 36
    quiet: bool = False

    def __post_init__(self):
        if self.experiment_id not in EXPERIMENT_IDS:
            raise ConfigurationError(f"unknown experiment '{self.experiment_id}', expected one of {EXPERIMENT_IDS}")
        for name in ("w", "s"):
            value = getattr(self, name)
            if value is not None and value < 1:
                raise ConfigurationError(f"{name} must be >= 1, got {value}")
        if self.w is not None and self.s is not None and self.s > self.w:
            raise ConfigurationError(f"stride must satisfy s <= w, got w={self.w}, s={self.s}")
        if self.d is not None and not 1 <= self.d <= MAX_DEGREE:
            raise ConfigurationError(f"degree must lie in [1, {MAX_DEGREE}], got d={self.d}")
        for name in ("epochs", "repeats", "workers", "eval_every", "count", "batch_size", "bptt_length"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.subset is not None and self.subset < 1:
            raise ConfigurationError(f"subset must be >= 1, got {self.subset}")
        if self.learning_rate < 0:
            raise ConfigurationError(f"learning rate must be >= 0, got {self.learning_rate}")
        if self.label is None:
            self.label = f"seed{self.seed}"

    @property
    def out_path(self) -> Path:
        return Path(self.out_dir)

    @property
    def data_path(self) -> Path:
        return Path(self.data_dir)

    def echo(self) -> Dict[str, Any]:
        """Config values for report headers."""
        return asdict(self)


def load_config_file(path: Path) -> Dict[str, Any]:
    """
    Parse ``key=value`` lines; ``#`` comments and blank lines are ignored.

    Returns:
        Field name -> parsed value

    Raises:
        ConfigurationError: On unknown keys or unparsable values, naming the line
    """
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"config file not found: {path}")
    values: Dict[str, Any] = {}
    for number, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{path}:{number}: expected key=value, got '{line}'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in FILE_KEYS:
            raise ConfigurationError(f"{path}:{number}: unknown key '{key}'")
        name, parser = FILE_KEYS[key]
        try:
            values[name] = parser(value)
        except ValueError as e:
            raise ConfigurationError(f"{path}:{number}: bad value for '{key}': {e}") from e
    return values


def build_config(
    experiment_id: str,
    file_values: Optional[Mapping[str, Any]] = None,
    cli_values: Optional[Mapping[str, Any]] = None,
    environ: Optional[Mapping[str, str]] = None,
) -> ExperimentConfig:
    """
    Merge defaults < config file < CLI flags (None means "not given").

    Raises:
        ConfigurationError: If the merged values are invalid
    """
    if experiment_id not in EXPERIMENT_IDS:
        raise ConfigurationError(f"unknown experiment '{experiment_id}', expected one of {EXPERIMENT_IDS}")
    environ = os.environ if environ is None else environ
    merged: Dict[str, Any] = {"data_dir": environ.get(DATA_DIR_ENV, DEFAULT_DATA_DIR)}
    merged.update(EXPERIMENT_DEFAULTS[experiment_id])
    for source in (file_values or {}, cli_values or {}):
        merged.update({k: v for k, v in source.items() if v is not None})
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = sorted(set(merged) - known)
    if unknown:
        raise ConfigurationError(f"unknown config fields {unknown}")
    merged.pop("experiment_id", None)
    return ExperimentConfig(experiment_id, **merged)

