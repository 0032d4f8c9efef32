"""SR generators: ODE core, RRDB core, shared head and tail."""

from .checkpoint import load_checkpoint, read_checkpoint, save_checkpoint
from .generator import CoreMetadata, Generator, conv_layout, count_params, generator_forward, parameter_ledger
from .layers import ConvSpec, Module
from .ode_core import OdeFunction, ode_core_forward
from .rrdb import RRDBCore, rrdb_block_forward

__all__ = [
    "ConvSpec",
    "CoreMetadata",
    "Generator",
    "Module",
    "OdeFunction",
    "RRDBCore",
    "conv_layout",
    "count_params",
    "generator_forward",
    "load_checkpoint",
    "ode_core_forward",
    "parameter_ledger",
    "read_checkpoint",
    "rrdb_block_forward",
    "save_checkpoint",
]
