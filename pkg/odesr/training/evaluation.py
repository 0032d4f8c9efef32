"""
Whole-image evaluation: validation passes, test-set PSNR and model comparison.

Every image is super-resolved on its own (batch of one) without a tape, so
each call yields its own solver statistics.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from odesr.core.exceptions import ConfigurationError, DatasetError
from odesr.core.tensor import Tensor, no_tape
from odesr.data.dataset import ordered_map
from odesr.data.image_io import list_pngs, load_png
from odesr.data.metrics import mean_std, psnr
from odesr.data.patches import ImagePair, make_pair
from odesr.data.resize import bicubic_upsample
from odesr.export.tables import Table
from odesr.models.generator import CoreMetadata, Generator
from odesr.solver.dopri5 import EVALS_PER_STEP

logger = logging.getLogger(__name__)

SCOPES = ("batch", "image", "epoch")


@dataclass
class NfeRecord:
    """Solver cost of one model call.

    Attributes:
        scope: "batch", "image" or "epoch".
        id: Batch id, image id or epoch number.
        nfe: Field evaluations (0 for cores without a solver).
        steps: Accepted solver steps.
        rejected: Rejected solver steps.
        psnr: Output PSNR when the call produced an image.
    """

    scope: str
    id: str
    nfe: int
    steps: int
    rejected: int = 0
    psnr: float | None = None

    def __post_init__(self) -> None:
        if self.scope not in SCOPES:
            raise ConfigurationError(f"scope must be one of {SCOPES}", field_name="scope", value=self.scope)

    @classmethod
    def from_metadata(cls, scope: str, id: str, metadata: CoreMetadata, psnr: float | None = None) -> NfeRecord:
        solve = metadata.solve
        rejected = solve.rejected if solve is not None else 0
        return cls(scope, id, metadata.nfe, metadata.steps, rejected, psnr)

    @property
    def consistent(self) -> bool:
        """nfe matches 6 evaluations per attempted step plus the first stage."""
        attempts = self.steps + self.rejected
        if attempts == 0:
            return self.nfe <= 1
        return self.nfe == EVALS_PER_STEP * attempts + 1


@dataclass
class ValidationResult:
    """Per-image PSNR and solver cost of one evaluation pass."""

    records: list[NfeRecord] = field(default_factory=list)

    @property
    def per_image(self) -> dict[str, float]:
        return {r.id: float(r.psnr) for r in self.records if r.psnr is not None}

    @property
    def psnr_mean(self) -> float:
        return mean_std(list(self.per_image.values()))[0]

    def nfe_stats(self) -> tuple[float, float]:
        """Mean and standard deviation of per-call NFE."""
        return mean_std([r.nfe for r in self.records])

    @property
    def steps(self) -> dict[str, int]:
        return {r.id: r.steps for r in self.records}


def super_resolve(generator: Generator, lr: np.ndarray) -> tuple[np.ndarray, CoreMetadata]:
    """Upscale one (3, h, w) image; the output is clipped to [0, 1]."""
    with no_tape():
        out, metadata = generator(Tensor(np.asarray(lr, dtype=generator.dtype)[None]))
    return np.clip(out.data[0], 0.0, 1.0), metadata


def evaluate_pair(generator: Generator, pair: ImagePair) -> NfeRecord:
    output, metadata = super_resolve(generator, pair.lr)
    return NfeRecord.from_metadata("image", pair.source_id, metadata, psnr(output, pair.hr))


def validate(generator: Generator, pairs: Sequence[ImagePair], workers: int = 0) -> ValidationResult:
    """PSNR and NFE of every image in ``pairs``.

    Raises:
        DatasetError: If there is nothing to validate on.
    """
    if not pairs:
        raise DatasetError("Validation set is empty")
    records = list(ordered_map(lambda pair: evaluate_pair(generator, pair), pairs, workers))
    result = ValidationResult(records)
    nfe_mean, nfe_std = result.nfe_stats()
    logger.debug("Validation: PSNR %.4f dB, NFE %.1f +/- %.1f", result.psnr_mean, nfe_mean, nfe_std)
    return result


def bicubic_psnr(pair: ImagePair) -> float:
    return psnr(bicubic_upsample(pair.lr), pair.hr)


def bicubic_baseline(pairs: Sequence[ImagePair]) -> float:
    """Mean PSNR of bicubic x4 upsampling over ``pairs``."""
    return mean_std([bicubic_psnr(p) for p in pairs])[0]


# =============================================================================
# Test sets
# =============================================================================


def load_test_set(directory: str | Path, workers: int = 0) -> list[ImagePair]:
    """HR PNGs of a folder as pairs, LR synthesized by bicubic x4."""
    paths = list_pngs(directory)
    if not paths:
        raise DatasetError(f"No PNG images in {directory}", {"dir": str(directory)})
    return list(ordered_map(lambda p: make_pair(load_png(p).data, p.stem), paths, workers))


@dataclass
class SetResult:
    name: str
    model: ValidationResult
    bicubic: dict[str, float]

    @property
    def psnr_mean(self) -> float:
        return self.model.psnr_mean

    @property
    def bicubic_mean(self) -> float:
        return mean_std(list(self.bicubic.values()))[0]


@dataclass
class EvalReport:
    """PSNR per test folder, pooled over all folders, and the bicubic baseline."""

    sets: list[SetResult]

    @property
    def pooled_psnr(self) -> float:
        return mean_std([v for s in self.sets for v in s.model.per_image.values()])[0]

    @property
    def pooled_bicubic(self) -> float:
        return mean_std([v for s in self.sets for v in s.bicubic.values()])[0]

    def per_image_table(self) -> Table:
        table = Table("Per-image PSNR", ["test_set", "image_id", "psnr", "bicubic_psnr", "nfe", "steps"])
        for result in self.sets:
            for record in result.model.records:
                table.add(result.name, record.id, record.psnr, result.bicubic[record.id], record.nfe, record.steps)
        return table

    def summary_table(self) -> Table:
        table = Table("Test-set PSNR", ["test_set", "images", "psnr", "bicubic_psnr"])
        for result in self.sets:
            table.add(result.name, len(result.bicubic), result.psnr_mean, result.bicubic_mean)
        table.add("all", sum(len(s.bicubic) for s in self.sets), self.pooled_psnr, self.pooled_bicubic)
        return table


def evaluate_test_sets(generator: Generator, directories: Sequence[str | Path], workers: int = 0) -> EvalReport:
    sets = []
    for directory in directories:
        pairs = load_test_set(directory, workers)
        sets.append(
            SetResult(
                Path(directory).name,
                validate(generator, pairs, workers),
                {p.source_id: bicubic_psnr(p) for p in pairs},
            )
        )
    return EvalReport(sets)


def compare_reports(first: EvalReport, second: EvalReport, top: int = 5) -> Table:
    """Images where two models disagree most, by absolute PSNR difference."""
    rows = []
    for a, b in zip(first.sets, second.sets, strict=True):
        other = b.model.per_image
        for image_id, value in a.model.per_image.items():
            if image_id in other:
                rows.append((a.name, image_id, value, other[image_id], value - other[image_id]))
    rows.sort(key=lambda row: (-abs(row[4]), row[0], row[1]))
    table = Table("Largest PSNR differences", ["test_set", "image_id", "psnr_a", "psnr_b", "difference"])
    for row in rows[:top]:
        table.add(*row)
    return table
