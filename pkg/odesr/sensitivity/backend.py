"""
Gradient backend interface.

A backend splits differentiation of an ODE block into a forward solve, which
keeps whatever the method needs (a tape, checkpoints, nothing), and a backward
pass that turns dLoss/du(T) into dLoss/du0 and dLoss/dtheta.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np

from odesr.core.config import SolverConfig
from odesr.core.tensor import Tape, Tensor
from odesr.solver.dopri5 import SolveResult
from odesr.solver.field import VectorField

from .report import GradientReport

LossClosure = Callable[[Tensor], Tensor]


@dataclass
class ForwardPass:
    """State a backend keeps between its forward solve and backward pass."""

    field: VectorField
    config: SolverConfig
    result: SolveResult
    forward_ms: float
    tape: Tape | None = None
    leaf: Tensor | None = None

    @property
    def final_state(self) -> Tensor:
        return self.result.final_state


class GradientBackend:
    """
    Abstract gradient backend.

    Subclasses set ``name`` and implement ``forward`` and ``backward``.
    """

    name: str = ""

    def forward(self, field: VectorField, u0: Tensor, config: SolverConfig) -> ForwardPass:
        """Solve from u0 and keep what the backward pass needs."""
        raise NotImplementedError

    def backward(self, forward: ForwardPass, cotangent: np.ndarray) -> GradientReport:
        """Pull dLoss/du(T) back to the initial state and the field parameters."""
        raise NotImplementedError

    def release(self, forward: ForwardPass) -> None:
        """Free anything the forward pass holds (tapes)."""
        if forward.tape is not None and not forward.tape.cleared:
            forward.tape.clear()

    def gradient(
        self,
        field: VectorField,
        u0: Tensor,
        loss_closure: LossClosure,
        config: SolverConfig,
    ) -> GradientReport:
        """Forward solve, loss at u(T), backward pass."""
        forward = self.forward(field, u0, config)
        cotangent = loss_cotangent(loss_closure, forward.final_state)
        return self.backward(forward, cotangent)


def loss_cotangent(loss_closure: LossClosure, final_state: Tensor) -> np.ndarray:
    """dLoss/du(T) of a scalar loss closure, on a throwaway tape."""
    leaf = Tensor(final_state.data)
    with Tape() as tape:
        tape.watch(leaf)
        loss = loss_closure(leaf)
    (grad,) = tape.backward(loss, [leaf])
    tape.clear()
    return grad


def unflatten(flat: np.ndarray, like: Sequence[Tensor]) -> list[np.ndarray]:
    """Split a flat vector into arrays shaped like ``like``."""
    arrays = []
    offset = 0
    for tensor in like:
        arrays.append(flat[offset : offset + tensor.size].reshape(tensor.shape).astype(tensor.dtype))
        offset += tensor.size
    return arrays
