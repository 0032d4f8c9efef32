"""
Dormand-Prince 5(4) integration with FSAL and an embedded error controller.

The stage combinations are taped primitives (``lincomb``), so an integration
run under an active Tape is differentiable by reverse accumulation. Step sizes
enter the graph as constants; the error estimate and the controller are
computed on raw arrays and are never recorded.
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np

from odesr.core.config import SolverConfig
from odesr.core.exceptions import NonFiniteError, StepSizeUnderflowError
from odesr.core.tensor import Tensor, active_tape, lincomb

logger = logging.getLogger(__name__)

Evaluate = Callable[[Tensor, float], Tensor]

# Butcher tableau of the Dormand-Prince pair.
C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
B = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
B_HAT = (5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40)
ERROR_WEIGHTS = tuple(b - bh for b, bh in zip(B, B_HAT))

STAGES = 7
# New evaluations per step once FSAL supplies the first stage.
EVALS_PER_STEP = STAGES - 1


@dataclass
class SolveResult:
    """Outcome of one integration.

    Attributes:
        final_state: u at the last accepted time.
        accepted_steps: (t_k, h_k) of every accepted step, in order.
        rejected: Number of rejected step attempts.
        nfe: Field evaluations charged to this integration. Every attempt
            costs six after the first stage, so nfe = 1 + 6 * (accepted +
            rejected) always holds. An attempt aborted by a non-finite stage
            is charged in full, which can exceed the field's own counter.
        checkpoints: States at accepted-step boundaries (when captured).
        budget_exhausted: True when max_nfe stopped the solve before t_final.
    """

    final_state: Tensor
    accepted_steps: list[tuple[float, float]] = field(default_factory=list)
    rejected: int = 0
    nfe: int = 0
    checkpoints: list[Tensor] | None = None
    budget_exhausted: bool = False

    @property
    def steps(self) -> int:
        return len(self.accepted_steps)

    @property
    def t_reached(self) -> float:
        if not self.accepted_steps:
            return float("nan")
        t, h = self.accepted_steps[-1]
        return t + h


def _stage(evaluate: Evaluate, u: Tensor, t: float, h: float, index: int) -> Tensor:
    try:
        k = evaluate(u, t)
    except NonFiniteError as e:
        raise NonFiniteError(e.op_name, e.op_index, t, h) from e
    if not np.all(np.isfinite(k.data)):
        raise NonFiniteError(f"stage {index + 1}", None, t, h)
    return k


def step_update(
    evaluate: Evaluate,
    u: Tensor,
    t: float,
    h: float,
    k1: Tensor | None = None,
) -> tuple[Tensor, list[Tensor]]:
    """Stages k1..k6 and the 5th-order update u5 of one step (no k7)."""
    stages = [k1 if k1 is not None else _stage(evaluate, u, t, h, 0)]
    for i in range(1, STAGES - 1):
        u_i = lincomb(u, [(h * a, k) for a, k in zip(A[i], stages)])
        stages.append(_stage(evaluate, u_i, t + C[i] * h, h, i))
    u5 = lincomb(u, [(h * b, k) for b, k in zip(B, stages)])
    if not np.all(np.isfinite(u5.data)):
        raise NonFiniteError("dopri5 update", None, t, h)
    return u5, stages


def dopri5_step(
    evaluate: Evaluate,
    u: Tensor,
    t: float,
    h: float,
    k1: Tensor | None = None,
) -> tuple[Tensor, Tensor, Tensor]:
    """Take one Dormand-Prince step.

    Args:
        evaluate: The vector field (or a counting wrapper around it).
        u: State at t.
        t: Step start time.
        h: Step size (> 0).
        k1: f(u, t) when already known (FSAL reuse).

    Returns:
        (u5, error estimate, k7) where u5 is the 5th-order solution, the error
        estimate is u5 minus the embedded 4th-order solution (untracked) and
        k7 = f(u5, t + h).

    Raises:
        NonFiniteError: If a stage is NaN or Inf (carries t and h).
    """
    u5, stages = step_update(evaluate, u, t, h, k1)
    k7 = _stage(evaluate, u5, t + h, h, STAGES - 1)
    stages.append(k7)

    error = np.zeros(u.shape, dtype=np.float64)
    for weight, k in zip(ERROR_WEIGHTS, stages):
        if weight != 0.0:
            error += weight * k.data
    return u5, Tensor((h * error).astype(u.dtype)), k7


def error_norm(error: Tensor, u_old: Tensor, u_new: Tensor, config: SolverConfig) -> float:
    """RMS of error_i / (atol + rtol * max(|u_old_i|, |u_new_i|)).

    A step is accepted iff the result is <= 1.
    """
    err = np.asarray(error.data, dtype=np.float64)
    old = np.abs(np.asarray(u_old.data, dtype=np.float64))
    new = np.abs(np.asarray(u_new.data, dtype=np.float64))
    scaled = err / (config.atol + config.rtol * np.maximum(old, new))
    norm = float(np.sqrt(np.mean(np.square(scaled))))
    return norm if np.isfinite(norm) else float("inf")


def next_step_size(h: float, norm: float, config: SolverConfig) -> float:
    """h * clamp(safety * norm^(-1/5), min_factor, max_factor).

    A zero norm grows the step by max_factor; a non-finite norm shrinks it by
    min_factor.
    """
    if norm == 0.0:
        factor = config.max_factor
    elif not np.isfinite(norm):
        factor = config.min_factor
    else:
        factor = config.safety * norm ** (-1 / 5)
        factor = min(config.max_factor, max(config.min_factor, factor))
    return h * factor


def integrate(
    evaluate: Evaluate,
    u0: Tensor,
    config: SolverConfig,
    capture_checkpoints: bool = False,
) -> SolveResult:
    """Adaptively integrate du/dt = f(u, t) from config.t0 to config.t_final.

    Rejected attempts are rolled back from the active tape (if any), so only
    accepted steps stay in the graph. When the next attempt would exceed
    max_nfe the partial result is returned with ``budget_exhausted`` set.

    Raises:
        NonFiniteError: If u0, or f at an accepted state, is not finite.
        StepSizeUnderflowError: If no step has been accepted yet and the
            step can no longer advance t.
    """
    if not np.all(np.isfinite(u0.data)):
        raise NonFiniteError("integrate initial state", None, config.t0, None)

    nfe = 0

    def counted(u: Tensor, t: float) -> Tensor:
        nonlocal nfe
        nfe += 1
        return evaluate(u, t)

    t0, t_final = config.t0, config.t_final
    h = min(config.initial_step or config.horizon, config.horizon)
    if t0 + h <= t0:
        raise StepSizeUnderflowError(t0, h)

    tape = active_tape()
    result = SolveResult(final_state=u0, checkpoints=[u0] if capture_checkpoints else None)
    t, u = t0, u0
    k1: Tensor | None = None

    with np.errstate(all="ignore"):
        while t < t_final:
            if nfe + (EVALS_PER_STEP if k1 is not None else STAGES) > config.max_nfe:
                result.budget_exhausted = True
                logger.debug("NFE budget %d exhausted at t=%.6g", config.max_nfe, t)
                break
            last = h >= t_final - t
            if last:
                h = t_final - t
            if k1 is None:
                k1 = _stage(counted, u, t, h, 0)
            mark = tape.mark() if tape is not None else 0
            attempt_start = nfe
            try:
                u_new, err, k7 = dopri5_step(counted, u, t, h, k1)
                norm = error_norm(err, u, u_new, config)
            except NonFiniteError:
                # an aborted attempt is charged in full
                nfe = attempt_start + EVALS_PER_STEP
                norm = float("inf")

            if norm <= 1.0:
                result.accepted_steps.append((t, h))
                t = t_final if last else t + h
                u, k1 = u_new, k7
                if result.checkpoints is not None:
                    result.checkpoints.append(u)
            else:
                result.rejected += 1
                if tape is not None:
                    tape.rollback(mark)

            h_next = next_step_size(h, norm, config)
            if not result.accepted_steps:
                if t + h_next <= t:
                    raise StepSizeUnderflowError(t, h_next)
            else:
                h_next = max(h_next, 4 * float(np.spacing(t)))
            h = h_next

    result.final_state = u
    result.nfe = nfe
    logger.debug(
        "integrate: %d accepted, %d rejected, nfe=%d%s",
        result.steps,
        result.rejected,
        nfe,
        " (budget exhausted)" if result.budget_exhausted else "",
    )
    return result


def replay(
    evaluate: Evaluate,
    u0: Tensor,
    steps: Sequence[tuple[float, float]],
    capture_checkpoints: bool = False,
) -> SolveResult:
    """Re-run a recorded sequence of accepted steps with fixed (t_k, h_k).

    The result is a smooth function of the field parameters, which makes it
    the finite-difference reference for step-ledger gradients.
    """
    nfe = 0

    def counted(u: Tensor, t: float) -> Tensor:
        nonlocal nfe
        nfe += 1
        return evaluate(u, t)

    result = SolveResult(final_state=u0, checkpoints=[u0] if capture_checkpoints else None)
    u, k1 = u0, None
    with np.errstate(all="ignore"):
        for t, h in steps:
            u, _, k1 = dopri5_step(counted, u, t, h, k1)
            result.accepted_steps.append((t, h))
            if result.checkpoints is not None:
                result.checkpoints.append(u)
    result.final_state = u
    result.nfe = nfe
    return result
