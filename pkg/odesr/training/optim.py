"""
Adam optimizer over tape parameters.

Updates are applied in place to each parameter tensor's array, so the
ConvParams that hold the tensors see the new values without rebinding.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from odesr.core.exceptions import ShapeMismatchError
from odesr.core.tensor import Tensor

logger = logging.getLogger(__name__)

BETA1 = 0.9
BETA2 = 0.999
EPSILON = 1e-8


@dataclass
class AdamState:
    """First and second moment estimates plus the update counter."""

    step: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)
    skipped: int = 0

    @classmethod
    def zeros(cls, params: Sequence[Tensor]) -> AdamState:
        return cls(
            m=[np.zeros_like(p.data) for p in params],
            v=[np.zeros_like(p.data) for p in params],
        )


def adam_step(
    params: Sequence[Tensor],
    grads: Sequence[np.ndarray],
    state: AdamState,
    lr: float,
    beta1: float = BETA1,
    beta2: float = BETA2,
    eps: float = EPSILON,
) -> bool:
    """Apply one bias-corrected Adam update in place.

    Returns:
        True when the update was applied, False when it was skipped because a
        gradient was not finite (parameters and state are left untouched).

    Raises:
        ShapeMismatchError: If a gradient or moment does not match its parameter.
    """
    if len(grads) != len(params) or len(state.m) != len(params):
        raise ShapeMismatchError("adam_step", f"{len(params)} gradients and moments", (len(grads), len(state.m)))
    for param, grad, m in zip(params, grads, state.m):
        if grad.shape != param.shape or m.shape != param.shape:
            raise ShapeMismatchError("adam_step", param.shape, grad.shape)

    if not all(np.all(np.isfinite(g)) for g in grads):
        state.skipped += 1
        logger.warning("Skipping Adam update %d: non-finite gradient", state.step + 1)
        return False

    state.step += 1
    correction1 = 1.0 - beta1**state.step
    correction2 = 1.0 - beta2**state.step
    for param, grad, m, v in zip(params, grads, state.m, state.v):
        g = grad.astype(param.dtype, copy=False)
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * np.square(g)
        update = lr * (m / correction1) / (np.sqrt(v / correction2) + eps)
        param.data -= update.astype(param.dtype, copy=False)
    return True


class Adam:
    """Adam bound to a fixed parameter list.

    Attributes:
        params: Parameter tensors, updated in place.
        lr: Current learning rate (the schedule writes it).
        state: Moment estimates.
    """

    def __init__(
        self,
        params: Sequence[Tensor],
        lr: float,
        beta1: float = BETA1,
        beta2: float = BETA2,
        eps: float = EPSILON,
    ) -> None:
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.state = AdamState.zeros(self.params)

    def step(self, grads: Sequence[np.ndarray]) -> bool:
        return adam_step(self.params, grads, self.state, self.lr, self.beta1, self.beta2, self.eps)
