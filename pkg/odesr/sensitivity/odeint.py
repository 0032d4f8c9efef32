"""
odeint - an ODE solve recorded on the active tape as a single operation.

The operation's inputs are the initial state and the field parameters. Its
backward pass runs the selected gradient backend, so a model containing an
ODE block trains from one ``tape.backward(loss, params)`` whatever the
backend.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from odesr.core.config import SolverConfig
from odesr.core.exceptions import AdjointDivergedError
from odesr.core.tensor import Tensor, active_tape, no_tape
from odesr.solver.dopri5 import SolveResult, integrate
from odesr.solver.field import VectorField

from .backend import GradientBackend
from .registry import get_backend
from .report import GradientReport


def odeint(
    field: VectorField,
    u0: Tensor,
    config: SolverConfig,
    backend: str | GradientBackend = "discrete",
    reports: list[GradientReport] | None = None,
) -> tuple[Tensor, SolveResult]:
    """Integrate field from u0 and return (u(T), SolveResult).

    Without an active tape tracking u0 or the field parameters this is a
    plain solve. Otherwise the solve is recorded as one operation; its
    backward pass appends a GradientReport to ``reports`` and raises
    AdjointDivergedError when the backend reports divergence.
    """
    tape = active_tape()
    params = field.parameters
    inputs = (u0, *params)
    if tape is None or not any(tape.tracks(t) for t in inputs):
        with no_tape():
            result = integrate(field, Tensor(u0.data), config)
        return Tensor(result.final_state.data), result

    method = get_backend(backend)
    with no_tape():
        forward = method.forward(field, u0, config)
    result = forward.result

    def vjp(g: np.ndarray) -> Sequence[np.ndarray | None]:
        report = method.backward(forward, g)
        if reports is not None:
            reports.append(report)
        if report.diverged or report.gradients is None:
            raise AdjointDivergedError(report)
        return (report.initial_state_gradient, *report.gradients)

    out = tape.record("odeint", inputs, result.final_state.data.copy(), vjp)
    return out, result
