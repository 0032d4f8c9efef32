"""
PNG reading and writing via Pillow.

Images are (3, H, W) float arrays in [0, 1]. Saving rounds half up to 8 bits,
so a save/load round trip moves each value by at most 1/510.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any

import numpy as np
from PIL import Image

from odesr.core.exceptions import ImageIOError, ShapeMismatchError
from odesr.core.tensor import Tensor

PNG_SUFFIXES = (".png",)


def load_png(path: str | Path, dtype: Any = np.float64) -> Tensor:
    """Decode an 8-bit PNG into a (3, H, W) tensor with values / 255.

    Raises:
        ImageIOError: If the file is missing or not a decodable image.
    """
    try:
        with Image.open(path) as img:
            pixels = np.asarray(img.convert("RGB"), dtype=np.uint8)
    except (OSError, ValueError) as e:
        raise ImageIOError(str(path), e) from e
    return Tensor((pixels.transpose(2, 0, 1) / 255.0).astype(dtype))


def to_uint8(image: np.ndarray) -> np.ndarray:
    """(3, H, W) floats in [0, 1] to (H, W, 3) bytes, rounding half up."""
    clipped = np.clip(np.asarray(image, dtype=np.float64), 0.0, 1.0)
    return np.ascontiguousarray(np.floor(clipped * 255.0 + 0.5).astype(np.uint8).transpose(1, 2, 0))


def save_png(image: Tensor | np.ndarray, path: str | Path) -> Path:
    """Encode a (3, H, W) or (1, 3, H, W) image as an 8-bit RGB PNG."""
    data = image.data if isinstance(image, Tensor) else np.asarray(image)
    if data.ndim == 4 and data.shape[0] == 1:
        data = data[0]
    if data.ndim != 3 or data.shape[0] != 3:
        raise ShapeMismatchError("save_png", "(3, H, W) image", data.shape)
    out = Path(path)
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
        Image.fromarray(to_uint8(data)).save(out, format="PNG")
    except (OSError, ValueError) as e:
        raise ImageIOError(str(path), e) from e
    return out


def list_pngs(directory: str | Path) -> list[Path]:
    """PNG files of a directory, sorted by filename."""
    root = Path(directory)
    if not root.is_dir():
        return []
    return sorted(p for p in root.iterdir() if p.suffix.lower() in PNG_SUFFIXES and p.is_file())
