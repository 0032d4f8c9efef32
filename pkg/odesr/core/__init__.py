"""Core abstractions: tensors and tapes, configuration, exceptions."""

from .config import (
    DEFAULT_SOLVER,
    RELAXED_SOLVER,
    DataConfig,
    GeneratorConfig,
    Precision,
    RunConfig,
    SolverConfig,
    TrainConfig,
    generator_preset,
    load_run_config,
)
from .exceptions import (
    AdjointDivergedError,
    CheckpointError,
    ConfigFileError,
    ConfigurationError,
    DataError,
    DatasetError,
    GradientCheckError,
    ImageIOError,
    NonFiniteError,
    NumericError,
    OdesrError,
    ResourceError,
    ShapeMismatchError,
    StepSizeUnderflowError,
    TapeMemoryError,
    TapeStateError,
)
from .tensor import ConvParams, Tape, Tensor, active_tape, no_tape

__all__ = [
    "DEFAULT_SOLVER",
    "RELAXED_SOLVER",
    "AdjointDivergedError",
    "CheckpointError",
    "ConfigFileError",
    "ConfigurationError",
    "ConvParams",
    "DataConfig",
    "DataError",
    "DatasetError",
    "GeneratorConfig",
    "GradientCheckError",
    "ImageIOError",
    "NonFiniteError",
    "NumericError",
    "OdesrError",
    "Precision",
    "ResourceError",
    "RunConfig",
    "ShapeMismatchError",
    "SolverConfig",
    "StepSizeUnderflowError",
    "Tape",
    "TapeMemoryError",
    "TapeStateError",
    "Tensor",
    "TrainConfig",
    "active_tape",
    "generator_preset",
    "load_run_config",
    "no_tape",
]
