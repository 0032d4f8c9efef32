"""Image fidelity metrics."""

from __future__ import annotations

import numpy as np

from odesr.core.exceptions import ConfigurationError, ShapeMismatchError
from odesr.core.tensor import Tensor

PSNR_CAP = 100.0


def psnr(a: Tensor | np.ndarray, b: Tensor | np.ndarray, peak: float = 1.0, cap: float = PSNR_CAP) -> float:
    """10 * log10(peak^2 / MSE) over all pixels and channels, capped at ``cap`` dB."""
    x = np.asarray(a.data if isinstance(a, Tensor) else a, dtype=np.float64)
    y = np.asarray(b.data if isinstance(b, Tensor) else b, dtype=np.float64)
    if x.shape != y.shape:
        raise ShapeMismatchError("psnr", x.shape, y.shape)
    if not peak > 0:
        raise ConfigurationError("peak must be positive", field_name="peak", value=peak)
    mse = float(np.mean(np.square(x - y)))
    if mse == 0.0:
        return cap
    return min(cap, 10.0 * np.log10(peak * peak / mse))


def mean_std(values: list[float] | np.ndarray) -> tuple[float, float]:
    """Mean and population standard deviation (0, 0 for no values)."""
    array = np.asarray(values, dtype=np.float64)
    if array.size == 0:
        return 0.0, 0.0
    return float(array.mean()), float(array.std())
