"""
Step-ledger gradients: discrete reverse sensitivity and checkpointed recomputation.

Both differentiate the solver's accepted stage computations with the step
sizes held constant. The discrete backend keeps the whole forward tape; the
checkpointed backend keeps one state per accepted step and rematerializes each
step's stages on a fresh tape while walking the steps in reverse.
"""

from __future__ import annotations

import logging
import time

import numpy as np

from odesr.core.config import SolverConfig
from odesr.core.tensor import Tape, Tensor, no_tape
from odesr.solver.dopri5 import dopri5_step, integrate, step_update
from odesr.solver.field import VectorField

from .backend import ForwardPass, GradientBackend, LossClosure
from .report import GradientReport

logger = logging.getLogger(__name__)


class DiscreteBackend(GradientBackend):
    """Backpropagation through the recorded forward integration.

    Attributes:
        max_saved_elements: Optional tape budget; exceeding it raises TapeMemoryError.
    """

    name = "discrete"

    def __init__(self, max_saved_elements: int | None = None) -> None:
        self.max_saved_elements = max_saved_elements

    def forward(self, field: VectorField, u0: Tensor, config: SolverConfig) -> ForwardPass:
        start = time.perf_counter()
        leaf = Tensor(u0.data)
        tape = Tape(self.max_saved_elements)
        with tape:
            tape.watch(leaf, *field.parameters)
            result = integrate(field, leaf, config)
        if result.budget_exhausted:
            logger.warning("Discrete forward solve stopped at its NFE budget (t=%.6g)", result.t_reached)
        elapsed = (time.perf_counter() - start) * 1000
        return ForwardPass(field, config, result, elapsed, tape=tape, leaf=leaf)

    def backward(self, forward: ForwardPass, cotangent: np.ndarray) -> GradientReport:
        assert forward.tape is not None and forward.leaf is not None
        start = time.perf_counter()
        params = forward.field.parameters
        grads = forward.tape.vjp([forward.final_state], [cotangent], [forward.leaf, *params])
        peak = forward.tape.peak_saved_elements
        self.release(forward)
        return GradientReport(
            method=self.name,
            gradients=grads[1:],
            forward_nfe=forward.result.nfe,
            backward_nfe=0,
            wall_ms=forward.forward_ms + (time.perf_counter() - start) * 1000,
            initial_state_gradient=grads[0],
            accepted_steps=forward.result.steps,
            peak_saved_elements=peak,
        )


class CheckpointedBackend(GradientBackend):
    """Rematerialize each accepted step from its checkpoint, last step first.

    Every step recomputes its stages k1..k6; the seventh stage of a step is the
    first stage of the step after it, so only the final step evaluates it.
    """

    name = "checkpointed"

    def forward(self, field: VectorField, u0: Tensor, config: SolverConfig) -> ForwardPass:
        start = time.perf_counter()
        with no_tape():
            result = integrate(field, Tensor(u0.data), config, capture_checkpoints=True)
        elapsed = (time.perf_counter() - start) * 1000
        return ForwardPass(field, config, result, elapsed)

    def backward(self, forward: ForwardPass, cotangent: np.ndarray) -> GradientReport:
        start = time.perf_counter()
        field = forward.field
        params = field.parameters
        result = forward.result
        checkpoints = result.checkpoints or []
        nfe = 0

        def counted(u: Tensor, t: float) -> Tensor:
            nonlocal nfe
            nfe += 1
            return field(u, t)

        adjoint = np.asarray(cotangent)
        param_grads = [np.zeros_like(p.data) for p in params]
        peak = 0
        last = result.steps - 1
        with np.errstate(all="ignore"):
            for index in range(last, -1, -1):
                t, h = result.accepted_steps[index]
                leaf = Tensor(checkpoints[index].data)
                with Tape() as tape:
                    tape.watch(leaf, *params)
                    if index == last:
                        u_next, _, _ = dopri5_step(counted, leaf, t, h)
                    else:
                        u_next, _ = step_update(counted, leaf, t, h)
                grads = tape.vjp([u_next], [adjoint], [leaf, *params])
                peak = max(peak, tape.peak_saved_elements)
                tape.clear()
                adjoint = grads[0]
                param_grads = [acc + g for acc, g in zip(param_grads, grads[1:])]

        return GradientReport(
            method=self.name,
            gradients=param_grads,
            forward_nfe=result.nfe,
            backward_nfe=nfe,
            wall_ms=forward.forward_ms + (time.perf_counter() - start) * 1000,
            initial_state_gradient=adjoint,
            accepted_steps=result.steps,
            peak_saved_elements=peak,
        )


def discrete_gradient(
    field: VectorField,
    u0: Tensor,
    loss_closure: LossClosure,
    config: SolverConfig,
    max_saved_elements: int | None = None,
) -> GradientReport:
    """Gradient of loss_closure(u(T)) by reverse accumulation through the solver."""
    return DiscreteBackend(max_saved_elements).gradient(field, u0, loss_closure, config)


def checkpointed_gradient(
    field: VectorField,
    u0: Tensor,
    loss_closure: LossClosure,
    config: SolverConfig,
) -> GradientReport:
    """Same gradient as discrete_gradient, rematerialized step by step."""
    return CheckpointedBackend().gradient(field, u0, loss_closure, config)
