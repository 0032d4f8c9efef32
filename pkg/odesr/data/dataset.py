"""
Dataset manifest, ordered threaded loading and the patch dataset.

A manifest lists source-id -> path (and optional LR path) with a split. The
default split is fixed: the last 10% of filenames in sorted order validate,
the rest train, whatever the seed.
"""

from __future__ import annotations

import json
import logging
from collections import deque
from collections.abc import Callable, Iterable, Iterator, Sequence
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, TypeVar

import numpy as np

from odesr.core.config import DataConfig
from odesr.core.exceptions import DatasetError

from .image_io import list_pngs, load_png
from .patches import ImagePair, augment_pair, extract_patches, make_pair, random_crops

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

VAL_FRACTION = 0.1


# =============================================================================
# Manifest
# =============================================================================


@dataclass
class ManifestEntry:
    source_id: str
    path: str
    split: str
    lr_path: str | None = None


@dataclass
class Manifest:
    entries: list[ManifestEntry]

    def split(self, name: str) -> list[ManifestEntry]:
        return [e for e in self.entries if e.split == name]

    def save(self, path: str | Path) -> Path:
        out = Path(path)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(json.dumps({"images": [asdict(e) for e in self.entries]}, indent=2))
        return out

    @classmethod
    def load(cls, path: str | Path) -> Manifest:
        """Read a manifest JSON.

        Raises:
            DatasetError: If the file is missing, malformed or lists no images.
        """
        source = Path(path)
        try:
            raw = json.loads(source.read_text())
            entries = [ManifestEntry(**item) for item in raw["images"]]
        except FileNotFoundError:
            raise DatasetError(f"Manifest not found: {path}", {"path": str(path)}) from None
        except (json.JSONDecodeError, KeyError, TypeError) as e:
            raise DatasetError(f"Malformed manifest: {e}", {"path": str(path)}) from None
        if not entries:
            raise DatasetError("Manifest lists no images", {"path": str(path)})
        base = source.parent
        for entry in entries:
            if not Path(entry.path).is_absolute():
                entry.path = str(base / entry.path)
            if entry.lr_path and not Path(entry.lr_path).is_absolute():
                entry.lr_path = str(base / entry.lr_path)
        return cls(entries)

    @classmethod
    def from_directory(cls, hr_dir: str | Path, lr_dir: str | Path | None = None) -> Manifest:
        """Scan a folder of HR PNGs (plus optional same-named LR PNGs) with the fixed split."""
        paths = list_pngs(hr_dir)
        if not paths:
            raise DatasetError(f"No PNG images in {hr_dir}", {"dir": str(hr_dir)})
        n_val = int(round(len(paths) * VAL_FRACTION)) if len(paths) > 1 else 0
        if len(paths) > 1:
            n_val = max(1, n_val)
        first_val = len(paths) - n_val
        entries = []
        for index, path in enumerate(paths):
            lr_path = None
            if lr_dir is not None:
                candidate = Path(lr_dir) / path.name
                if not candidate.is_file():
                    raise DatasetError(f"Missing LR image for {path.name}", {"lr_dir": str(lr_dir)})
                lr_path = str(candidate)
            split = "val" if index >= first_val else "train"
            entries.append(ManifestEntry(path.stem, str(path), split, lr_path))
        return cls(entries)


def manifest_for(config: DataConfig) -> Manifest:
    if config.manifest:
        return Manifest.load(config.manifest)
    if not config.train_dir:
        raise DatasetError("No dataset configured (set data.train_dir or data.manifest)")
    return Manifest.from_directory(config.train_dir, config.lr_dir)


# =============================================================================
# Loading
# =============================================================================


def ordered_map(fn: Callable[[T], R], items: Iterable[T], workers: int = 0, prefetch: int | None = None) -> Iterator[R]:
    """Map fn over items on worker threads, yielding results in input order.

    At most ``prefetch`` (default 2 x workers) results are in flight.
    """
    if workers <= 0:
        yield from map(fn, items)
        return
    limit = prefetch or 2 * workers
    iterator = iter(items)
    with ThreadPoolExecutor(max_workers=workers) as executor:
        pending: deque[Future[R]] = deque()
        for item in iterator:
            pending.append(executor.submit(fn, item))
            if len(pending) >= limit:
                break
        while pending:
            result = pending.popleft().result()
            for item in iterator:
                pending.append(executor.submit(fn, item))
                break
            yield result


def load_pair(entry: ManifestEntry) -> ImagePair:
    hr = load_png(entry.path).data
    lr = load_png(entry.lr_path).data if entry.lr_path else None
    return make_pair(hr, entry.source_id, lr)


def load_pairs(entries: Sequence[ManifestEntry], workers: int = 0) -> list[ImagePair]:
    return list(ordered_map(load_pair, entries, workers))


# =============================================================================
# Patch dataset
# =============================================================================


@dataclass
class Batch:
    """A stacked batch of patches; arrays are (N, 3, h, w)."""

    ids: list[str]
    lr: np.ndarray
    hr: np.ndarray

    def __len__(self) -> int:
        return len(self.ids)


def stack_batch(pairs: Sequence[ImagePair], dtype: Any = np.float32) -> Batch:
    return Batch(
        [p.patch_id for p in pairs],
        np.stack([p.lr for p in pairs]).astype(dtype),
        np.stack([p.hr for p in pairs]).astype(dtype),
    )


class PatchDataset:
    """Training patches cut from a list of image pairs.

    Grid sampling uses every aligned patch of every image; random sampling
    takes ``crops_per_image`` random aligned crops per image and epoch. The
    epoch's patch order and augmentation depend only on (seed, epoch).

    Attributes:
        pairs: Source image pairs.
        patch_size: HR patch side length.
        seed: Shuffling and augmentation seed.
    """

    def __init__(
        self,
        pairs: Sequence[ImagePair],
        patch_size: int,
        seed: int = 0,
        stride: int | None = None,
        sampling: str = "grid",
        crops_per_image: int = 4,
        augment: bool = True,
    ) -> None:
        self.pairs = list(pairs)
        self.patch_size = patch_size
        self.stride = stride or patch_size
        self.sampling = sampling
        self.crops_per_image = crops_per_image
        self.augment = augment
        self.seed = seed
        self._grid = [p for pair in self.pairs for p in extract_patches(pair, patch_size, self.stride)]
        if not self._grid:
            raise DatasetError(
                "Dataset yields no patches",
                {"images": len(self.pairs), "patch_size": patch_size},
            )

    @classmethod
    def from_config(cls, pairs: Sequence[ImagePair], config: DataConfig, seed: int) -> PatchDataset:
        return cls(
            pairs,
            config.patch_size,
            seed=seed,
            stride=config.stride,
            sampling=config.sampling,
            crops_per_image=config.crops_per_image,
            augment=config.augment,
        )

    def __len__(self) -> int:
        if self.sampling == "random":
            eligible = sum(1 for p in self.pairs if min(p.hr.shape[1:]) >= self.patch_size)
            return eligible * self.crops_per_image
        return len(self._grid)

    def epoch_patches(self, epoch: int) -> list[ImagePair]:
        rng = np.random.default_rng([self.seed, epoch])
        if self.sampling == "random":
            patches = [c for pair in self.pairs for c in random_crops(pair, self.patch_size, self.crops_per_image, rng)]
        else:
            patches = list(self._grid)
        order = rng.permutation(len(patches))
        patches = [patches[i] for i in order]
        if self.augment:
            patches = [augment_pair(p, rng) for p in patches]
        return patches

    def batches(self, epoch: int, batch_size: int, dtype: Any = np.float32) -> Iterator[Batch]:
        """Deterministic batches of one epoch; the last batch may be short."""
        patches = self.epoch_patches(epoch)
        for start in range(0, len(patches), batch_size):
            yield stack_batch(patches[start : start + batch_size], dtype)
