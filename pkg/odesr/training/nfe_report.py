"""
NFE-difficulty analysis.

Test images are bucketed by how many solver steps an ODE model needs on them
(below the most common count, at it, above it). For each bucket the mean PSNR
of RRDB models of increasing depth shows whether extra depth pays off more on
the images the ODE model finds hard.
"""

from __future__ import annotations

import logging
from collections import Counter
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from odesr.core.exceptions import ConfigurationError
from odesr.data.patches import ImagePair
from odesr.export.tables import Table
from odesr.models.generator import Generator

from .evaluation import NfeRecord, validate

logger = logging.getLogger(__name__)

BUCKETS = ("low", "medium", "high")


def mode_steps(steps: Sequence[int]) -> int:
    """Most common step count; ties go to the smaller count."""
    counts = Counter(steps)
    top = max(counts.values())
    return min(s for s, c in counts.items() if c == top)


def bucket_by_mode(steps: Mapping[str, int]) -> dict[str, str]:
    """Assign each image to low / medium / high relative to the modal step count."""
    if not steps:
        return {}
    mode = mode_steps(list(steps.values()))
    distinct = len(set(steps.values()))
    if distinct < len(BUCKETS):
        logger.warning(
            "Only %d distinct step count(s); the report has fewer than %d buckets",
            distinct,
            len(BUCKETS),
        )
    return {
        image_id: "low" if count < mode else "high" if count > mode else "medium"
        for image_id, count in steps.items()
    }


@dataclass
class NfeReport:
    """Per-image buckets plus per-bucket PSNR curves over RRDB depth.

    Attributes:
        steps: Solver steps of the ODE model per image.
        buckets: Bucket per image.
        blocks: RRDB depths, ascending.
        psnr: PSNR per depth, per image.
    """

    steps: dict[str, int]
    buckets: dict[str, str]
    blocks: list[int]
    psnr: dict[int, dict[str, float]]
    mode: int = 0
    notes: list[str] = field(default_factory=list)

    @property
    def degenerate(self) -> bool:
        return len(set(self.buckets.values())) < len(BUCKETS)

    def curve(self, bucket: str) -> list[float]:
        """Mean PSNR per RRDB depth over the images of one bucket."""
        members = [i for i, b in self.buckets.items() if b == bucket]
        if not members:
            return []
        return [float(np.mean([self.psnr[n][i] for i in members])) for n in self.blocks]

    def curves(self) -> dict[str, list[float]]:
        return {b: self.curve(b) for b in BUCKETS if self.curve(b)}

    def gain(self, bucket: str) -> float:
        """PSNR of the deepest minus the shallowest model on one bucket."""
        curve = self.curve(bucket)
        return curve[-1] - curve[0] if curve else float("nan")

    def to_table(self) -> Table:
        table = Table(
            "NFE difficulty",
            ["image_id", "steps", "bucket", *(f"psnr_b{n}" for n in self.blocks)],
        )
        for image_id in sorted(self.steps):
            table.add(
                image_id,
                self.steps[image_id],
                self.buckets[image_id],
                *(self.psnr[n][image_id] for n in self.blocks),
            )
        table.notes = [f"mode steps: {self.mode}"] + [
            f"{bucket}: " + ", ".join(f"b{n}={v:.4f}" for n, v in zip(self.blocks, curve))
            for bucket, curve in self.curves().items()
        ] + self.notes
        return table


def build_nfe_report(records: Sequence[NfeRecord], rrdb_psnr: Mapping[int, Mapping[str, float]]) -> NfeReport:
    """Assemble the report from ODE per-image records and RRDB per-image PSNRs.

    Raises:
        ConfigurationError: If fewer than two RRDB depths are given or an
            RRDB model misses an image.
    """
    if len(rrdb_psnr) < 2:
        raise ConfigurationError(
            "At least two RRDB models of different depth are required",
            field_name="rrdb_models",
            value=sorted(rrdb_psnr),
        )
    steps = {r.id: r.steps for r in records}
    for blocks, values in rrdb_psnr.items():
        missing = sorted(set(steps) - set(values))
        if missing:
            raise ConfigurationError(
                f"RRDB model with {blocks} blocks misses images", field_name="rrdb_models", value=missing
            )
    buckets = bucket_by_mode(steps)
    report = NfeReport(
        steps,
        buckets,
        sorted(rrdb_psnr),
        {n: dict(v) for n, v in rrdb_psnr.items()},
        mode_steps(list(steps.values())) if steps else 0,
    )
    if report.degenerate:
        report.notes.append(f"degenerate: {len(set(buckets.values()))} bucket(s)")
    return report


def nfe_difficulty_report(
    ode_model: Generator,
    rrdb_models: Sequence[Generator],
    pairs: Sequence[ImagePair],
    workers: int = 0,
) -> NfeReport:
    """Bucket test images by ODE solver steps and compare RRDB depths per bucket.

    Raises:
        ConfigurationError: If ode_model has no ODE core, a model in
            rrdb_models is not RRDB, or two RRDB models share a depth.
    """
    if ode_model.config.core != "ode":
        raise ConfigurationError("ode_model must have an ODE core", field_name="core", value=ode_model.config.core)
    depths: dict[int, dict[str, float]] = {}
    for model in rrdb_models:
        if model.config.core != "rrdb":
            raise ConfigurationError("Expected an RRDB model", field_name="core", value=model.config.core)
        blocks = model.config.rrdb_blocks
        if blocks in depths:
            raise ConfigurationError("Two RRDB models share a depth", field_name="rrdb_blocks", value=blocks)
        depths[blocks] = validate(model, pairs, workers).per_image
    records = validate(ode_model, pairs, workers).records
    return build_nfe_report(records, depths)
