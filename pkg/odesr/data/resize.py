"""
Antialiased bicubic resizing.

Separable cubic convolution (a = -0.5). Output pixel i samples the input at
(i + 0.5) * scale - 0.5; when downscaling the kernel is stretched by the scale
factor. Taps past the border are clamped to the edge pixel and each row of
weights is normalized to sum to one.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from odesr.core.exceptions import ShapeMismatchError
from odesr.core.tensor import Tensor

CUBIC_A = -0.5


def cubic_kernel(x: np.ndarray, a: float = CUBIC_A) -> np.ndarray:
    x = np.abs(np.asarray(x, dtype=np.float64))
    near = ((a + 2) * x - (a + 3)) * x * x + 1
    far = ((a * x - 5 * a) * x + 8 * a) * x - 4 * a
    return np.where(x <= 1, near, np.where(x < 2, far, 0.0))


@lru_cache(maxsize=64)
def resize_weights(in_size: int, out_size: int) -> np.ndarray:
    """(out_size, in_size) interpolation matrix along one axis."""
    scale = in_size / out_size
    stretch = max(scale, 1.0)
    weights = np.zeros((out_size, in_size))
    for i in range(out_size):
        center = (i + 0.5) * scale - 0.5
        first = int(np.floor(center - 2 * stretch))
        last = int(np.ceil(center + 2 * stretch))
        taps = np.arange(first, last + 1)
        values = cubic_kernel((taps - center) / stretch)
        np.add.at(weights[i], np.clip(taps, 0, in_size - 1), values)
        weights[i] /= weights[i].sum()
    weights.setflags(write=False)
    return weights


def _as_array(image: Tensor | np.ndarray) -> np.ndarray:
    data = image.data if isinstance(image, Tensor) else np.asarray(image)
    if data.ndim != 3:
        raise ShapeMismatchError("resize", "(channels, H, W) image", data.shape)
    return data


def resize(image: Tensor | np.ndarray, height: int, width: int, clip: bool = True) -> np.ndarray:
    """Bicubic resize of a (C, H, W) image to (C, height, width)."""
    data = _as_array(image)
    rows = resize_weights(data.shape[1], height)
    cols = resize_weights(data.shape[2], width)
    out = np.einsum("ip,cpq,jq->cij", rows, data.astype(np.float64), cols)
    if clip:
        out = np.clip(out, 0.0, 1.0)
    return out.astype(data.dtype)


def bicubic_downsample(image: Tensor | np.ndarray, factor: int = 4) -> np.ndarray:
    """Downscale by an integer factor.

    Raises:
        ShapeMismatchError: If H or W is not divisible by factor (crop first).
    """
    data = _as_array(image)
    _, h, w = data.shape
    if h % factor or w % factor:
        raise ShapeMismatchError("bicubic_downsample", f"dims divisible by {factor}", (h, w))
    return resize(data, h // factor, w // factor)


def bicubic_upsample(image: Tensor | np.ndarray, factor: int = 4) -> np.ndarray:
    """Upscale by an integer factor (the bicubic baseline)."""
    data = _as_array(image)
    return resize(data, data.shape[1] * factor, data.shape[2] * factor)
