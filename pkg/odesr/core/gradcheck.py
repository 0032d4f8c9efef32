"""
Finite-difference gradient oracle.

Central differences in 64-bit, perturbing parameter tensors in place and
restoring them afterwards. Used by the test-suite and the ``grad-check``
command to verify every gradient backend.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence

import numpy as np

from .exceptions import ConfigurationError, NonFiniteError
from .tensor import Tensor


def finite_difference_gradient(
    function: Callable[[], float],
    params: Sequence[Tensor],
    step: float = 1e-5,
    coordinates: Sequence[np.ndarray | None] | None = None,
) -> list[np.ndarray]:
    """Estimate d function / d params by (f(p + h) - f(p - h)) / 2h.

    Args:
        function: Deterministic closure reading the current parameter values.
        params: 64-bit parameter tensors.
        step: Perturbation size h.
        coordinates: Optional flat indices per parameter to estimate; entries
            not listed are NaN in the result.

    Returns:
        One gradient array per parameter, shaped like the parameter.

    Raises:
        ConfigurationError: If step is not positive or a parameter is not 64-bit.
        NonFiniteError: If an evaluation is NaN or Inf.
    """
    if not step > 0:
        raise ConfigurationError("step must be positive", field_name="step", value=step)
    for param in params:
        if param.dtype != np.float64:
            raise ConfigurationError(
                "Finite differences require 64-bit parameters", field_name=param.name, value=str(param.dtype)
            )

    def evaluate() -> float:
        value = float(function())
        if not np.isfinite(value):
            raise NonFiniteError("finite_difference_gradient")
        return value

    gradients = []
    for index, param in enumerate(params):
        flat = param.data.reshape(-1)
        chosen = None if coordinates is None else coordinates[index]
        indices = np.arange(flat.size) if chosen is None else np.asarray(chosen, dtype=np.int64)
        grad = np.full(flat.size, np.nan) if chosen is not None else np.zeros(flat.size)
        for i in indices:
            original = flat[i]
            try:
                flat[i] = original + step
                upper = evaluate()
                flat[i] = original - step
                lower = evaluate()
            finally:
                flat[i] = original
            grad[i] = (upper - lower) / (2 * step)
        gradients.append(grad.reshape(param.shape))
    return gradients


def sample_coordinates(
    params: Sequence[Tensor], per_param: int, rng: np.random.Generator
) -> list[np.ndarray]:
    """Pick up to ``per_param`` distinct flat indices of each parameter."""
    picks = []
    for param in params:
        count = min(per_param, param.size)
        picks.append(np.sort(rng.choice(param.size, size=count, replace=False)))
    return picks


def relative_error(estimate: Sequence[np.ndarray], reference: Sequence[np.ndarray]) -> float:
    """Normwise relative error max|g - ref| / max(max|ref|, 1e-12).

    Entries that are NaN in ``reference`` (unsampled coordinates) are ignored.
    """
    worst_diff = 0.0
    worst_ref = 0.0
    for g, ref in zip(estimate, reference, strict=True):
        mask = np.isfinite(ref)
        if not mask.any():
            continue
        diff = np.abs(np.asarray(g)[mask] - ref[mask])
        if not np.all(np.isfinite(diff)):
            return float("inf")
        worst_diff = max(worst_diff, float(diff.max()))
        worst_ref = max(worst_ref, float(np.abs(ref[mask]).max()))
    return worst_diff / max(worst_ref, 1e-12)
