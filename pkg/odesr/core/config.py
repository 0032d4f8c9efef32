"""
Run configuration - Single Responsibility: describe and validate a run.

Dataclasses mirror the JSON/YAML run-config keys one to one (snake_case).
Every dataclass validates its own invariants and raises ConfigurationError
naming the offending field.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .exceptions import ConfigFileError, ConfigurationError


class Precision(Enum):
    """Run-level numeric precision. Never mixed within one graph."""

    F32 = "f32"
    F64 = "f64"

    @property
    def dtype(self) -> np.dtype[Any]:
        return np.dtype(np.float32) if self is Precision.F32 else np.dtype(np.float64)

    @classmethod
    def parse(cls, value: str | Precision) -> Precision:
        if isinstance(value, Precision):
            return value
        try:
            return cls(value)
        except ValueError:
            raise ConfigurationError(
                "Unknown precision", field_name="precision", value=value
            ) from None


BACKENDS = ("adjoint", "discrete", "checkpointed")
CORES = ("ode", "rrdb")


@dataclass
class SolverConfig:
    """Dormand-Prince solver settings.

    Attributes:
        rtol: Relative tolerance.
        atol: Absolute tolerance.
        t0: Integration start time.
        t_final: Integration end time.
        initial_step: First trial step; None means the full horizon.
        safety: Step-controller safety factor.
        min_factor: Lower clamp on the step-change factor.
        max_factor: Upper clamp on the step-change factor.
        max_nfe: Function-evaluation budget of one solve.
    """

    rtol: float = 1e-7
    atol: float = 1e-9
    t0: float = 0.0
    t_final: float = 1.0
    initial_step: float | None = None
    safety: float = 0.9
    min_factor: float = 0.2
    max_factor: float = 10.0
    max_nfe: int = 100_000

    def validate(self) -> SolverConfig:
        if not self.rtol > 0:
            raise ConfigurationError("rtol must be positive", field_name="rtol", value=self.rtol)
        if not self.atol > 0:
            raise ConfigurationError("atol must be positive", field_name="atol", value=self.atol)
        if not self.t_final > self.t0:
            raise ConfigurationError(
                "t_final must exceed t0", field_name="t_final", value=self.t_final
            )
        if self.initial_step is not None and not self.initial_step > 0:
            raise ConfigurationError(
                "initial_step must be positive", field_name="initial_step", value=self.initial_step
            )
        if not 0 < self.min_factor <= 1 <= self.max_factor:
            raise ConfigurationError(
                "Step factors must satisfy 0 < min_factor <= 1 <= max_factor",
                field_name="min_factor",
                value=(self.min_factor, self.max_factor),
            )
        if self.max_nfe < 1:
            raise ConfigurationError("max_nfe must be >= 1", field_name="max_nfe", value=self.max_nfe)
        return self

    @property
    def horizon(self) -> float:
        return self.t_final - self.t0

    def with_tolerance(self, tol: float) -> SolverConfig:
        """Return a copy with rtol = atol = tol."""
        return replace(self, rtol=tol, atol=tol)


# Tight default tolerances and the relaxed training setting.
DEFAULT_SOLVER = SolverConfig()
RELAXED_SOLVER = SolverConfig(rtol=1e-3, atol=1e-3)


@dataclass
class GeneratorConfig:
    """Architecture of an SR generator.

    Attributes:
        filters: Channel count F of the feature space.
        scale: Upsampling factor (only 4 is supported).
        core: "ode" or "rrdb".
        ode_layers: Convolutions in the ODE function.
        time_dependent: Prepend a time channel to the ODE function input.
        augment_channels: Zero channels p appended to the ODE state.
        t_final: Integration horizon of the ODE core.
        rrdb_blocks: Number of RRDB groups B.
        growth: Dense-block growth channels g.
        residual_scale: Residual scaling beta inside RRDB units and groups.
        negative_slope: LeakyReLU slope.
        solver: Solver settings of the ODE core.
        backend: Gradient backend of the ODE core.
    """

    filters: int = 64
    scale: int = 4
    core: str = "ode"
    ode_layers: int = 2
    time_dependent: bool = True
    augment_channels: int = 8
    t_final: float = 1.0
    rrdb_blocks: int = 1
    growth: int = 32
    residual_scale: float = 0.2
    negative_slope: float = 0.2
    solver: SolverConfig = field(default_factory=lambda: replace(RELAXED_SOLVER))
    backend: str = "discrete"

    def validate(self) -> GeneratorConfig:
        if self.filters < 1:
            raise ConfigurationError("filters must be >= 1", field_name="filters", value=self.filters)
        if self.scale != 4:
            raise ConfigurationError("Only x4 generators are supported", field_name="scale", value=self.scale)
        if self.core not in CORES:
            raise ConfigurationError(
                f"core must be one of {list(CORES)}", field_name="core", value=self.core
            )
        if self.ode_layers < 1:
            raise ConfigurationError(
                "ode_layers must be >= 1", field_name="ode_layers", value=self.ode_layers
            )
        if self.augment_channels < 0:
            raise ConfigurationError(
                "augment_channels must be >= 0",
                field_name="augment_channels",
                value=self.augment_channels,
            )
        if self.rrdb_blocks < 1:
            raise ConfigurationError(
                "rrdb_blocks must be >= 1", field_name="rrdb_blocks", value=self.rrdb_blocks
            )
        if self.growth < 1:
            raise ConfigurationError("growth must be >= 1", field_name="growth", value=self.growth)
        if not 0 < self.negative_slope < 1:
            raise ConfigurationError(
                "negative_slope must lie in (0, 1)",
                field_name="negative_slope",
                value=self.negative_slope,
            )
        if self.backend not in BACKENDS:
            raise ConfigurationError(
                f"backend must be one of {list(BACKENDS)}", field_name="backend", value=self.backend
            )
        if self.t_final <= 0:
            raise ConfigurationError("t_final must be positive", field_name="t_final", value=self.t_final)
        self.solver = replace(self.solver, t0=0.0, t_final=self.t_final).validate()
        return self

    @property
    def state_channels(self) -> int:
        """Channels of the ODE state (features plus augmentation)."""
        return self.filters + self.augment_channels


# Named variants. The low-data regime uses a 2-conv ODE function and 5 RRDB
# groups, the high-data regime 7 convs and 20 groups.
PRESETS: dict[str, dict[str, Any]] = {
    "node": {"core": "ode", "augment_channels": 0, "time_dependent": False},
    "node-time": {"core": "ode", "augment_channels": 0, "time_dependent": True},
    "augmented": {"core": "ode", "augment_channels": 8, "time_dependent": False},
    "augmented-time": {"core": "ode", "augment_channels": 8, "time_dependent": True},
    "anode": {"core": "ode", "augment_channels": 0, "time_dependent": False, "backend": "checkpointed"},
    "rrdb": {"core": "rrdb"},
    "low-data": {"ode_layers": 2, "rrdb_blocks": 5},
    "high-data": {"ode_layers": 7, "rrdb_blocks": 20},
}


def generator_preset(*names: str, **overrides: Any) -> GeneratorConfig:
    """Build a GeneratorConfig from named presets applied left to right.

    Example:
        >>> generator_preset("augmented-time", "high-data", filters=64)
    """
    values: dict[str, Any] = {}
    for name in names:
        if name not in PRESETS:
            raise ConfigurationError(
                f"Unknown preset, valid presets: {sorted(PRESETS)}", field_name="preset", value=name
            )
        values.update(PRESETS[name])
    values.update(overrides)
    return _build(GeneratorConfig, values, "generator").validate()


@dataclass
class DataConfig:
    """Dataset and patching settings.

    Attributes:
        train_dir: Folder of HR training PNGs (split 90/10 into train/val).
        lr_dir: Optional sibling folder of matching LR PNGs.
        test_dirs: Extra test folders evaluated by ``eval``.
        manifest: Optional manifest JSON path (overrides train_dir scanning).
        patch_size: HR patch side length.
        stride: Grid stride for patch extraction (defaults to patch_size).
        sampling: "grid" (all grid patches) or "random" (random crops).
        crops_per_image: Random crops per image and epoch in random sampling.
        augment: Random flips and 90-degree rotations.
        workers: Loader threads (0 = load in the training thread).
    """

    train_dir: str | None = None
    lr_dir: str | None = None
    test_dirs: list[str] = field(default_factory=list)
    manifest: str | None = None
    patch_size: int = 128
    stride: int | None = None
    sampling: str = "grid"
    crops_per_image: int = 4
    augment: bool = True
    workers: int = 0

    def validate(self) -> DataConfig:
        if self.patch_size < 4 or self.patch_size % 4:
            raise ConfigurationError(
                "patch_size must be a positive multiple of 4",
                field_name="patch_size",
                value=self.patch_size,
            )
        if self.stride is not None and self.stride < 1:
            raise ConfigurationError("stride must be >= 1", field_name="stride", value=self.stride)
        if self.sampling not in ("grid", "random"):
            raise ConfigurationError(
                "sampling must be 'grid' or 'random'", field_name="sampling", value=self.sampling
            )
        if self.crops_per_image < 1:
            raise ConfigurationError(
                "crops_per_image must be >= 1",
                field_name="crops_per_image",
                value=self.crops_per_image,
            )
        if self.workers < 0:
            raise ConfigurationError("workers must be >= 0", field_name="workers", value=self.workers)
        return self


@dataclass
class TrainConfig:
    """Optimization settings.

    Attributes:
        learning_rate: Initial Adam learning rate.
        batch_size: Patches per batch.
        patience: Non-improving validations before the learning rate decays.
        lr_decay_factor: Multiplier applied on decay.
        min_lr: Training stops once the decayed rate would fall below this.
        max_epochs: Hard epoch limit.
        loss: Pixel loss, "l1" or "l2".
        seed: Seed for initialization, shuffling and augmentation.
        precision: Numeric precision of the run.
        generator: Generator architecture.
    """

    learning_rate: float = 2e-4
    batch_size: int = 16
    patience: int = 3
    lr_decay_factor: float = 0.5
    min_lr: float = 1e-6
    max_epochs: int = 30
    loss: str = "l1"
    seed: int = 0
    precision: Precision = Precision.F32
    generator: GeneratorConfig = field(default_factory=GeneratorConfig)

    def validate(self) -> TrainConfig:
        if self.patience < 1:
            raise ConfigurationError("patience must be >= 1", field_name="patience", value=self.patience)
        if not self.min_lr < self.learning_rate:
            raise ConfigurationError(
                "min_lr must be below learning_rate", field_name="min_lr", value=self.min_lr
            )
        if not 0 < self.lr_decay_factor < 1:
            raise ConfigurationError(
                "lr_decay_factor must lie in (0, 1)",
                field_name="lr_decay_factor",
                value=self.lr_decay_factor,
            )
        if self.batch_size < 1:
            raise ConfigurationError(
                "batch_size must be >= 1", field_name="batch_size", value=self.batch_size
            )
        if self.max_epochs < 1:
            raise ConfigurationError(
                "max_epochs must be >= 1", field_name="max_epochs", value=self.max_epochs
            )
        if self.loss not in ("l1", "l2"):
            raise ConfigurationError("loss must be 'l1' or 'l2'", field_name="loss", value=self.loss)
        self.precision = Precision.parse(self.precision)
        self.generator.validate()
        return self


@dataclass
class RunConfig:
    """Everything a CLI run needs: optimization, data and output location."""

    train: TrainConfig = field(default_factory=TrainConfig)
    data: DataConfig = field(default_factory=DataConfig)
    out_dir: str = "runs/default"

    def validate(self) -> RunConfig:
        self.train.validate()
        self.data.validate()
        return self

    def to_dict(self) -> dict[str, Any]:
        return config_to_dict(self)


# =============================================================================
# Loading
# =============================================================================


_NESTED: dict[tuple[type, str], type] = {
    (GeneratorConfig, "solver"): SolverConfig,
    (TrainConfig, "generator"): GeneratorConfig,
    (RunConfig, "train"): TrainConfig,
    (RunConfig, "data"): DataConfig,
}


def _coerce(cls: type, name: str, value: Any, default: Any) -> Any:
    """Coerce a raw JSON/YAML scalar to the type of the field default."""
    if value is None:
        return None
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigurationError("Expected a boolean", field_name=name, value=value)
        return value
    if (isinstance(default, int) and not isinstance(default, bool)) or (default is None and name == "stride"):
        try:
            whole = not isinstance(value, bool) and float(value).is_integer()
        except (TypeError, ValueError):
            whole = False
        if not whole:
            raise ConfigurationError("Expected an integer", field_name=name, value=value)
        return value if isinstance(value, int) else int(float(value))
    if isinstance(default, float) or (default is None and name in ("initial_step",)):
        try:
            return float(value)
        except (TypeError, ValueError):
            raise ConfigurationError("Expected a number", field_name=name, value=value) from None
    if isinstance(default, Precision):
        return Precision.parse(value)
    return value


def _build(cls: type, raw: dict[str, Any], section: str) -> Any:
    if not isinstance(raw, dict):
        raise ConfigurationError(f"Section '{section}' must be a mapping", field_name=section, value=raw)
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(raw) - set(known))
    if unknown:
        raise ConfigurationError(
            f"Unknown keys in '{section}': {unknown}", field_name=section, value=unknown
        )
    defaults = cls()
    kwargs: dict[str, Any] = {}
    for name, value in raw.items():
        nested = _NESTED.get((cls, name))
        if nested is not None:
            kwargs[name] = _build(nested, value, f"{section}.{name}")
        else:
            kwargs[name] = _coerce(cls, name, value, getattr(defaults, name))
    return cls(**kwargs)


def run_config_from_dict(raw: dict[str, Any]) -> RunConfig:
    """Build and validate a RunConfig from a parsed mapping."""
    return _build(RunConfig, raw, "run").validate()


def load_run_config(path: str | Path) -> RunConfig:
    """Load a run configuration from a JSON or YAML file.

    Args:
        path: Path to a ``.json``, ``.yaml`` or ``.yml`` file.

    Returns:
        Validated RunConfig.

    Raises:
        ConfigFileError: If the file is missing or cannot be parsed.
        ConfigurationError: If a value violates a config invariant.
    """
    config_path = Path(path)
    if not config_path.is_file():
        raise ConfigFileError(str(path), "file not found")
    text = config_path.read_text()
    try:
        if config_path.suffix.lower() == ".json":
            raw = json.loads(text)
        else:
            raw = yaml.safe_load(text) or {}
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        raise ConfigFileError(str(path), f"parse error: {e}") from None
    if not isinstance(raw, dict):
        raise ConfigFileError(str(path), "top level must be a mapping")
    return run_config_from_dict(raw)


def config_to_dict(config: Any) -> dict[str, Any]:
    """Serialize a config dataclass tree to plain JSON-compatible values."""

    def convert(value: Any) -> Any:
        if isinstance(value, Enum):
            return value.value
        if isinstance(value, dict):
            return {k: convert(v) for k, v in value.items()}
        if isinstance(value, list):
            return [convert(v) for v in value]
        return value

    return convert(asdict(config))


def generator_config_from_dict(raw: dict[str, Any]) -> GeneratorConfig:
    """Rebuild a GeneratorConfig (e.g. from a checkpoint header)."""
    return _build(GeneratorConfig, raw, "generator").validate()
