"""
Paired HR/LR images and aligned patch extraction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from odesr.core.exceptions import ConfigurationError, ShapeMismatchError

from .resize import bicubic_downsample

SCALE = 4


@dataclass
class ImagePair:
    """A high-resolution image and its x4 low-resolution counterpart.

    Attributes:
        hr: (3, H, W) array in [0, 1]; H and W divisible by 4.
        lr: (3, H/4, W/4) array.
        source_id: Identifier of the source image.
        origin: (y, x) of this pair's top-left corner in the source HR image.
    """

    hr: np.ndarray
    lr: np.ndarray
    source_id: str
    origin: tuple[int, int] = (0, 0)

    def __post_init__(self) -> None:
        _, h, w = self.hr.shape
        if h % SCALE or w % SCALE:
            raise ShapeMismatchError("ImagePair", f"HR dims divisible by {SCALE}", (h, w))
        if self.lr.shape != (self.hr.shape[0], h // SCALE, w // SCALE):
            raise ShapeMismatchError("ImagePair", (self.hr.shape[0], h // SCALE, w // SCALE), self.lr.shape)

    @property
    def patch_id(self) -> str:
        return f"{self.source_id}@{self.origin[0]},{self.origin[1]}"


def crop_to_multiple(image: np.ndarray, factor: int = SCALE) -> np.ndarray:
    """Crop bottom/right so H and W are divisible by factor."""
    _, h, w = image.shape
    return image[:, : h - h % factor, : w - w % factor]


def make_pair(hr: np.ndarray, source_id: str, lr: np.ndarray | None = None) -> ImagePair:
    """Crop hr to a multiple of 4 and synthesize lr by bicubic x4 when not given."""
    hr = crop_to_multiple(np.asarray(hr))
    if lr is None:
        lr = bicubic_downsample(hr, SCALE)
    else:
        lr = np.asarray(lr)[:, : hr.shape[1] // SCALE, : hr.shape[2] // SCALE]
    return ImagePair(hr, lr, source_id)


def patch_count(height: int, width: int, patch: int, stride: int) -> int:
    """floor((H - P) / S + 1) * floor((W - P) / S + 1), zero when P exceeds the image."""
    if patch > height or patch > width:
        return 0
    return ((height - patch) // stride + 1) * ((width - patch) // stride + 1)


def _check_geometry(patch: int, stride: int) -> None:
    if patch < SCALE or patch % SCALE:
        raise ConfigurationError("HR patch size must be a positive multiple of 4", field_name="patch_size", value=patch)
    if stride < 1:
        raise ConfigurationError("stride must be positive", field_name="stride", value=stride)


def crop_pair(pair: ImagePair, y: int, x: int, patch: int) -> ImagePair:
    """The HR patch at (y, x) and its LR patch.

    On the 4-pixel grid the LR patch is sliced from the pair at (y/4, x/4); off the
    grid it is synthesized from the HR patch by bicubic x4 downsampling.
    """
    hr = pair.hr[:, y : y + patch, x : x + patch].copy()
    if y % SCALE or x % SCALE:
        lr = bicubic_downsample(hr, SCALE)
    else:
        lp = patch // SCALE
        ly, lx = y // SCALE, x // SCALE
        lr = pair.lr[:, ly : ly + lp, lx : lx + lp].copy()
    return ImagePair(
        hr,
        lr,
        pair.source_id,
        (pair.origin[0] + y, pair.origin[1] + x),
    )


def extract_patches(pair: ImagePair, patch: int, stride: int | None = None) -> list[ImagePair]:
    """Aligned HR/LR patch grid in row-major order; partial edge patches are dropped."""
    stride = stride or patch
    _check_geometry(patch, stride)
    _, h, w = pair.hr.shape
    if patch > h or patch > w:
        return []
    return [
        crop_pair(pair, y, x, patch)
        for y in range(0, h - patch + 1, stride)
        for x in range(0, w - patch + 1, stride)
    ]


def random_crops(pair: ImagePair, patch: int, count: int, rng: np.random.Generator) -> list[ImagePair]:
    """``count`` random aligned crops (positions on the 4-pixel grid)."""
    _check_geometry(patch, SCALE)
    _, h, w = pair.hr.shape
    if patch > h or patch > w:
        return []
    ys = rng.integers(0, (h - patch) // SCALE + 1, size=count) * SCALE
    xs = rng.integers(0, (w - patch) // SCALE + 1, size=count) * SCALE
    return [crop_pair(pair, int(y), int(x), patch) for y, x in zip(ys, xs)]


def augment_pair(pair: ImagePair, rng: np.random.Generator) -> ImagePair:
    """Random horizontal/vertical flips and 90-degree rotation, applied to both images."""
    hr, lr = pair.hr, pair.lr
    if rng.random() < 0.5:
        hr, lr = hr[:, :, ::-1], lr[:, :, ::-1]
    if rng.random() < 0.5:
        hr, lr = hr[:, ::-1, :], lr[:, ::-1, :]
    k = int(rng.integers(0, 4))
    if k:
        hr, lr = np.rot90(hr, k, axes=(1, 2)), np.rot90(lr, k, axes=(1, 2))
    return ImagePair(np.ascontiguousarray(hr), np.ascontiguousarray(lr), pair.source_id, pair.origin)


def paste_patches(patches: list[ImagePair], shape: tuple[int, int, int]) -> tuple[np.ndarray, np.ndarray]:
    """Write HR patches back at their origins; returns the canvas and a coverage mask."""
    canvas = np.zeros(shape)
    covered = np.zeros(shape[1:], dtype=bool)
    for patch in patches:
        y, x = patch.origin
        _, ph, pw = patch.hr.shape
        canvas[:, y : y + ph, x : x + pw] = patch.hr
        covered[y : y + ph, x : x + pw] = True
    return canvas, covered
