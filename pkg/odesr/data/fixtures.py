"""
Synthetic image fixtures for desk-scale runs and CI.

Smooth gradients, soft and hard black-and-white stripes and checkerboards,
generated deterministically from a seed.
"""

from __future__ import annotations

from collections.abc import Callable
from pathlib import Path

import numpy as np

from odesr.core.exceptions import ConfigurationError

from .image_io import save_png

Pattern = Callable[[np.random.Generator, int], np.ndarray]


def _grid(size: int) -> tuple[np.ndarray, np.ndarray]:
    coords = np.arange(size) / size
    return np.meshgrid(coords, coords, indexing="ij")


def gradient_image(rng: np.random.Generator, size: int) -> np.ndarray:
    y, x = _grid(size)
    angle = rng.uniform(0, np.pi)
    ramp = np.cos(angle) * x + np.sin(angle) * y
    ramp = (ramp - ramp.min()) / max(np.ptp(ramp), 1e-12)
    low, high = rng.uniform(0, 0.3, size=3), rng.uniform(0.7, 1.0, size=3)
    return low[:, None, None] + (high - low)[:, None, None] * ramp[None]


def stripes_image(rng: np.random.Generator, size: int) -> np.ndarray:
    y, x = _grid(size)
    period = rng.uniform(6, 14) / size
    phase = rng.uniform(0, 2 * np.pi)
    wave = 0.5 + 0.5 * np.sin(2 * np.pi * (x + 0.3 * y) / period + phase)
    tint = rng.uniform(0.6, 1.0, size=3)
    return tint[:, None, None] * wave[None]


def hard_stripes_image(rng: np.random.Generator, size: int) -> np.ndarray:
    width = int(rng.integers(2, 6))
    columns = (np.arange(size) // width) % 2
    vertical = rng.random() < 0.5
    band = columns[None, :] if vertical else columns[:, None]
    plane = np.broadcast_to(band, (size, size)).astype(np.float64)
    return np.repeat(plane[None], 3, axis=0)


def checkerboard_image(rng: np.random.Generator, size: int) -> np.ndarray:
    cell = int(rng.integers(4, 12))
    idx = np.arange(size) // cell
    board = ((idx[:, None] + idx[None, :]) % 2).astype(np.float64)
    a, b = rng.uniform(0, 0.4, size=3), rng.uniform(0.6, 1.0, size=3)
    return a[:, None, None] + (b - a)[:, None, None] * board[None]


PATTERNS: dict[str, Pattern] = {
    "gradient": gradient_image,
    "stripes": stripes_image,
    "hard_stripes": hard_stripes_image,
    "checkerboard": checkerboard_image,
}


def make_fixture_images(count: int = 10, size: int = 64, seed: int = 0) -> dict[str, np.ndarray]:
    """Generate ``count`` (3, size, size) images cycling through the patterns."""
    if size < 4 or size % 4:
        raise ConfigurationError("size must be a positive multiple of 4", field_name="size", value=size)
    if count < 1:
        raise ConfigurationError("count must be >= 1", field_name="count", value=count)
    rng = np.random.default_rng(seed)
    names = list(PATTERNS)
    images = {}
    for index in range(count):
        kind = names[index % len(names)]
        images[f"{index:03d}_{kind}"] = np.clip(PATTERNS[kind](rng, size), 0.0, 1.0)
    return images


def write_fixture_set(out_dir: str | Path, count: int = 10, size: int = 64, seed: int = 0) -> list[Path]:
    """Write the fixture images as PNGs into out_dir."""
    root = Path(out_dir)
    return [save_png(image, root / f"{name}.png") for name, image in make_fixture_images(count, size, seed).items()]
