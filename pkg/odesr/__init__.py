"""
odesr - neural-ODE super-resolution toolkit.

Uses numpy for a tape-based autodiff engine, an adaptive Dormand-Prince
solver with three gradient backends, and x4 SR generators with ODE or RRDB
feature cores.
"""

__version__ = "0.1.0"

from odesr.core.config import GeneratorConfig, RunConfig, SolverConfig, TrainConfig
from odesr.core.tensor import Tape, Tensor
from odesr.models.generator import Generator, count_params
from odesr.sensitivity.odeint import odeint

__all__ = [
    "Generator",
    "GeneratorConfig",
    "RunConfig",
    "SolverConfig",
    "Tape",
    "Tensor",
    "TrainConfig",
    "count_params",
    "odeint",
]
