"""Adaptive Dormand-Prince ODE solver."""

from .dopri5 import SolveResult, dopri5_step, error_norm, integrate, next_step_size, replay, step_update
from .field import VectorField, zero_field

__all__ = [
    "SolveResult",
    "VectorField",
    "dopri5_step",
    "error_norm",
    "integrate",
    "next_step_size",
    "replay",
    "step_update",
    "zero_field",
]
