"""
Continuous adjoint sensitivity.

The augmented state (x, a, g_theta) is packed into one flat tensor and
integrated in reversed time s = t_final - t with the same Dormand-Prince
solver and a single shared error norm:

    dx/ds = -f(x, t)
    da/ds = a^T df/dx
    dg/ds = a^T df/dtheta

Nothing from the forward trajectory is stored; x is re-integrated backwards.
"""

from __future__ import annotations

import logging
import time
from dataclasses import replace

import numpy as np

from odesr.core.config import SolverConfig
from odesr.core.exceptions import NumericError
from odesr.core.tensor import Tape, Tensor, no_tape
from odesr.solver.dopri5 import SolveResult, integrate
from odesr.solver.field import VectorField

from .backend import ForwardPass, GradientBackend, unflatten
from .report import GradientReport

logger = logging.getLogger(__name__)

# Worst backward cost observed on the full-size problem.
DEFAULT_BACKWARD_BUDGET = 100_000


def _evaluate_with_vjp(
    field: VectorField, u: Tensor, t: float, a: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    """f(u, t), a^T df/du, flat a^T df/dtheta and the tape footprint, from one evaluation."""
    params = field.parameters
    leaf = Tensor(u.data)
    with Tape() as tape:
        tape.watch(leaf, *params)
        out = field(leaf, t)
    grads = tape.vjp([out], [a], [leaf, *params])
    peak = tape.peak_saved_elements
    tape.clear()
    flat = np.concatenate([g.reshape(-1) for g in grads[1:]]) if params else np.zeros(0, dtype=u.dtype)
    return out.data, grads[0], flat, peak


def vjp(field: VectorField, u: Tensor, t: float, a: Tensor | np.ndarray) -> tuple[Tensor, np.ndarray]:
    """Vector-Jacobian products a^T df/du and a^T df/dtheta at (u, t).

    One taped evaluation of the field; its nfe grows by exactly one.

    Returns:
        (a^T df/du shaped like u, a^T df/dtheta as a flat vector over
        field.parameters in order).
    """
    cotangent = a.data if isinstance(a, Tensor) else np.asarray(a)
    _, grad_u, grad_theta, _ = _evaluate_with_vjp(field, u, t, cotangent)
    return Tensor(grad_u), grad_theta


def _backward_config(config: SolverConfig, backward_budget: int) -> SolverConfig:
    return replace(config, t0=0.0, t_final=config.horizon, max_nfe=backward_budget)


def adjoint_gradient(
    field: VectorField,
    u0: Tensor,
    loss_grad: Tensor | np.ndarray,
    config: SolverConfig,
    backward_budget: int = DEFAULT_BACKWARD_BUDGET,
    final_state: Tensor | None = None,
) -> GradientReport:
    """Gradient by solving the adjoint system backwards from t_final.

    Args:
        field: The vector field.
        u0: Initial state of the forward solve.
        loss_grad: dLoss/du(T).
        config: Solver settings shared by the forward and backward solves.
        backward_budget: Evaluation budget of the backward solve.
        final_state: u(T) when the forward solve has already run; solved
            from u0 otherwise.

    Returns:
        A GradientReport; ``diverged`` is set and gradients are None when the
        backward solve exhausted its budget or broke down numerically.
    """
    backend = AdjointBackend(backward_budget)
    if final_state is None:
        forward = backend.forward(field, u0, config)
    else:
        forward = ForwardPass(field, config, SolveResult(final_state=final_state), 0.0)
    cotangent = loss_grad.data if isinstance(loss_grad, Tensor) else np.asarray(loss_grad)
    return backend.backward(forward, cotangent)


class AdjointBackend(GradientBackend):
    """Constant-memory gradients from a reverse-time augmented solve.

    Attributes:
        backward_budget: Evaluation budget of the backward solve.
    """

    name = "adjoint"

    def __init__(self, backward_budget: int = DEFAULT_BACKWARD_BUDGET) -> None:
        self.backward_budget = backward_budget

    def forward(self, field: VectorField, u0: Tensor, config: SolverConfig) -> ForwardPass:
        start = time.perf_counter()
        with no_tape():
            result = integrate(field, Tensor(u0.data), config)
        elapsed = (time.perf_counter() - start) * 1000
        return ForwardPass(field, config, result, elapsed)

    def backward(self, forward: ForwardPass, cotangent: np.ndarray) -> GradientReport:
        start = time.perf_counter()
        field = forward.field
        params = field.parameters
        x_final = forward.final_state
        shape = x_final.shape
        n = x_final.size
        dtype = x_final.dtype
        peak = 0

        def augmented(z: Tensor, s: float) -> Tensor:
            nonlocal peak
            flat = z.data.reshape(-1)
            x = Tensor(flat[:n].reshape(shape))
            a = flat[n : 2 * n].reshape(shape)
            f, grad_x, grad_theta, saved = _evaluate_with_vjp(field, x, forward.config.t_final - s, a)
            peak = max(peak, saved)
            out = np.concatenate([-f.reshape(-1), grad_x.reshape(-1), grad_theta.astype(dtype)])
            return Tensor(out.reshape(z.shape))

        z0 = np.concatenate(
            [
                x_final.data.reshape(-1),
                np.asarray(cotangent, dtype=dtype).reshape(-1),
                np.zeros(sum(p.size for p in params), dtype=dtype),
            ]
        )
        config = _backward_config(forward.config, self.backward_budget)
        diverged = False
        backward_nfe = 0
        with no_tape():
            try:
                solve = integrate(augmented, Tensor(z0.reshape(1, 1, 1, -1)), config)
                backward_nfe = solve.nfe
                diverged = solve.budget_exhausted
                z_end = solve.final_state.data.reshape(-1)
            except NumericError as e:
                logger.warning("Adjoint backward solve broke down: %s", e)
                diverged = True
                z_end = z0

        wall_ms = forward.forward_ms + (time.perf_counter() - start) * 1000
        if diverged:
            logger.warning(
                "Adjoint backward solve diverged after %d evaluations (forward used %d)",
                backward_nfe,
                forward.result.nfe,
            )
            return GradientReport(
                method=self.name,
                gradients=None,
                forward_nfe=forward.result.nfe,
                backward_nfe=backward_nfe,
                diverged=True,
                wall_ms=wall_ms,
                accepted_steps=forward.result.steps,
                peak_saved_elements=peak,
            )
        return GradientReport(
            method=self.name,
            gradients=unflatten(z_end[2 * n :], params),
            forward_nfe=forward.result.nfe,
            backward_nfe=backward_nfe,
            wall_ms=wall_ms,
            initial_state_gradient=z_end[n : 2 * n].reshape(shape).copy(),
            accepted_steps=forward.result.steps,
            peak_saved_elements=peak + z0.size,
        )
