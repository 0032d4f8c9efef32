"""
Training loop.

Shuffled patch batches go through the generator on a fresh tape, the pixel
loss is differentiated (the ODE core's backward pass runs the selected
gradient backend) and Adam updates the parameters. After every epoch the
validation images are super-resolved whole and the learning rate decays on
PSNR plateaus.

Outputs under the run directory:
    metrics.csv         bicubic baseline row, then a train and a val row per epoch
    grad_reports.jsonl  one GradientReport per ODE backward pass
    ckpt_best.bin       parameters of the best validation epoch
    ckpt_last.bin       parameters after the last epoch
    run_summary.json    parameter count, epoch wall times, train losses, stop reason, skipped batches
"""

from __future__ import annotations

import logging
import time
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from odesr.core.config import RunConfig, config_to_dict
from odesr.core.exceptions import AdjointDivergedError, DatasetError, NumericError
from odesr.core.tensor import Tape, Tensor, pixel_loss
from odesr.data.dataset import Batch, PatchDataset, load_pairs, manifest_for
from odesr.data.metrics import mean_std
from odesr.data.patches import ImagePair
from odesr.export.tables import CsvLog, write_json
from odesr.models.checkpoint import save_checkpoint
from odesr.models.generator import Generator
from odesr.sensitivity.backend import GradientBackend
from odesr.sensitivity.registry import get_backend
from odesr.sensitivity.report import GradientReport, ReportWriter
from odesr.sensitivity.watchdog import DivergenceWatchdog

from .evaluation import NfeRecord, ValidationResult, bicubic_baseline, validate
from .optim import Adam
from .schedule import PlateauSchedule

logger = logging.getLogger(__name__)

METRICS_COLUMNS = ("epoch", "split", "psnr", "nfe_mean", "nfe_std", "lr")

METRICS_FILE = "metrics.csv"
REPORTS_FILE = "grad_reports.jsonl"
BEST_CHECKPOINT = "ckpt_best.bin"
LAST_CHECKPOINT = "ckpt_last.bin"
SUMMARY_FILE = "run_summary.json"


@dataclass
class BatchOutcome:
    """Result of one training batch."""

    batch_id: str
    loss: float | None
    record: NfeRecord | None
    skipped: str | None = None

    @property
    def applied(self) -> bool:
        return self.skipped is None


@dataclass
class EpochStats:
    epoch: int
    lr: float
    train_loss: float
    train_nfe: tuple[float, float]
    validation: ValidationResult
    wall_s: float
    skipped: list[str] = field(default_factory=list)


@dataclass
class TrainResult:
    """Everything a finished run reports.

    Attributes:
        out_dir: Run directory.
        parameter_count: Generator parameters.
        baseline_psnr: Bicubic x4 PSNR on the validation images.
        epochs: Per-epoch statistics.
        best_epoch: Epoch of the best validation PSNR.
        best_psnr: Best validation PSNR.
        stop_reason: "min-lr" or "max-epochs".
        skipped_batches: Batch ids skipped with their reason.
    """

    out_dir: Path
    parameter_count: int
    baseline_psnr: float
    epochs: list[EpochStats] = field(default_factory=list)
    best_epoch: int = 0
    best_psnr: float = float("-inf")
    stop_reason: str = "max-epochs"
    skipped_batches: list[dict[str, str]] = field(default_factory=list)
    flagged: list[dict[str, Any]] = field(default_factory=list)

    def summary(self) -> dict[str, Any]:
        return {
            "parameter_count": self.parameter_count,
            "baseline_psnr": self.baseline_psnr,
            "best_epoch": self.best_epoch,
            "best_psnr": self.best_psnr,
            "stop_reason": self.stop_reason,
            "epochs": len(self.epochs),
            "epoch_wall_s": [round(e.wall_s, 6) for e in self.epochs],
            "train_loss": [e.train_loss for e in self.epochs],
            "skipped_batches": self.skipped_batches,
            "watchdog": self.flagged,
        }


class Trainer:
    """One training run of a generator on a patch dataset.

    Attributes:
        config: Run configuration.
        generator: The model being trained.
        dataset: Training patches.
        val_pairs: Whole validation images.
        backend: Gradient backend name for the ODE core.
        out_dir: Where artifacts are written.
    """

    def __init__(
        self,
        config: RunConfig,
        train_pairs: Sequence[ImagePair],
        val_pairs: Sequence[ImagePair],
        out_dir: str | Path | None = None,
        backend: str | GradientBackend | None = None,
    ) -> None:
        self.config = config.validate()
        train = config.train
        self.backend = backend or train.generator.backend
        get_backend(self.backend)
        if not val_pairs:
            raise DatasetError("Validation set is empty")
        self.dataset = PatchDataset.from_config(train_pairs, config.data, train.seed)
        self.val_pairs = list(val_pairs)
        self.generator = Generator(train.generator, seed=train.seed, precision=train.precision)
        self.params = self.generator.parameters()
        self.optimizer = Adam(self.params, train.learning_rate)
        self.schedule = PlateauSchedule.from_config(train)
        self.loss_fn = pixel_loss(train.loss)
        self.watchdog = DivergenceWatchdog()
        self.out_dir = Path(out_dir or config.out_dir)
        self.reports: ReportWriter | None = None

    def train_batch(self, batch: Batch, batch_id: str) -> BatchOutcome:
        """Forward, backward and Adam update of one batch.

        A batch whose backward pass diverges, or that hits a numeric failure,
        is skipped without touching parameters or optimizer state.
        """
        reports: list[GradientReport] = []
        skipped = None
        loss_value = None
        record = None
        grads = None
        with Tape() as tape:
            tape.watch(*self.params)
            try:
                sr, metadata = self.generator(Tensor(batch.lr), backend=self.backend, reports=reports)
                record = NfeRecord.from_metadata("batch", batch_id, metadata)
                if metadata.solve is not None and metadata.solve.budget_exhausted:
                    skipped = "forward-budget"
                else:
                    loss = self.loss_fn(sr, Tensor(batch.hr))
                    loss_value = loss.item()
                    grads = tape.backward(loss, self.params)
            except AdjointDivergedError:
                skipped = "diverged"
            except NumericError as e:
                logger.warning("Batch %s failed numerically: %s", batch_id, e)
                skipped = "numeric"
            finally:
                tape.clear()

        for report in reports:
            report.batch_id = batch_id
            if self.reports is not None:
                self.reports.write(report)
            self.watchdog.observe_report(report)

        if skipped is None and grads is not None and not self.optimizer.step(grads):
            skipped = "non-finite-gradient"
        if skipped is not None:
            logger.warning("Skipped batch %s (%s)", batch_id, skipped)
        return BatchOutcome(batch_id, loss_value, record, skipped)

    def train_epoch(self, epoch: int) -> list[BatchOutcome]:
        size = self.config.train.batch_size
        outcomes = []
        for index, batch in enumerate(self.dataset.batches(epoch, size, self.generator.dtype)):
            outcome = self.train_batch(batch, f"{epoch}:{index}")
            logger.debug("Epoch %d batch %d loss %s", epoch, index, outcome.loss)
            outcomes.append(outcome)
        return outcomes

    def run(self) -> TrainResult:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        reports_path = self.out_dir / REPORTS_FILE
        reports_path.unlink(missing_ok=True)
        self.reports = ReportWriter(reports_path)
        metrics = CsvLog(self.out_dir / METRICS_FILE, METRICS_COLUMNS)
        write_json(config_to_dict(self.config), self.out_dir / "config.json")

        result = TrainResult(self.out_dir, self.generator.parameter_count, bicubic_baseline(self.val_pairs))
        metrics.append(epoch=0, split="bicubic", psnr=result.baseline_psnr)
        logger.info(
            "Training %s core (%d parameters), bicubic baseline %.4f dB",
            self.generator.config.core,
            result.parameter_count,
            result.baseline_psnr,
        )

        for epoch in range(1, self.config.train.max_epochs + 1):
            lr = self.schedule.lr
            self.optimizer.lr = lr
            start = time.perf_counter()
            outcomes = self.train_epoch(epoch)
            validation = validate(self.generator, self.val_pairs, self.config.data.workers)
            wall_s = time.perf_counter() - start

            losses = [o.loss for o in outcomes if o.applied and o.loss is not None]
            train_nfe = mean_std([o.record.nfe for o in outcomes if o.record is not None])
            skipped = [o.batch_id for o in outcomes if not o.applied]
            result.skipped_batches.extend(
                {"batch_id": o.batch_id, "reason": str(o.skipped)} for o in outcomes if not o.applied
            )
            stats = EpochStats(epoch, lr, mean_std(losses)[0], train_nfe, validation, wall_s, skipped)
            result.epochs.append(stats)

            val_nfe = validation.nfe_stats()
            metrics.append(
                epoch=epoch, split="train", nfe_mean=train_nfe[0], nfe_std=train_nfe[1], lr=lr
            )
            metrics.append(
                epoch=epoch, split="val", psnr=validation.psnr_mean, nfe_mean=val_nfe[0], nfe_std=val_nfe[1], lr=lr
            )
            logger.info(
                "Epoch %d: loss %.6f, val PSNR %.4f dB, NFE %.1f +/- %.1f, lr %.3g",
                epoch,
                stats.train_loss,
                validation.psnr_mean,
                val_nfe[0],
                val_nfe[1],
                lr,
            )

            event = self.schedule.observe(validation.psnr_mean)
            if event.improved:
                result.best_epoch = epoch
                result.best_psnr = validation.psnr_mean
                save_checkpoint(
                    self.out_dir / BEST_CHECKPOINT,
                    self.generator,
                    {"epoch": epoch, "psnr": validation.psnr_mean},
                )
            save_checkpoint(self.out_dir / LAST_CHECKPOINT, self.generator, {"epoch": epoch})
            if event.stop:
                result.stop_reason = "min-lr"
                break

        result.flagged = [r.to_record() for r in self.watchdog.summary().flagged]
        write_json(result.summary(), self.out_dir / SUMMARY_FILE)
        return result


def load_split(config: RunConfig) -> tuple[list[ImagePair], list[ImagePair]]:
    """Training and validation pairs of the configured dataset."""
    manifest = manifest_for(config.data)
    workers = config.data.workers
    train_pairs = load_pairs(manifest.split("train"), workers)
    val_pairs = load_pairs(manifest.split("val"), workers)
    if not train_pairs:
        raise DatasetError("Dataset has no training images")
    return train_pairs, val_pairs


def train(
    config: RunConfig,
    train_pairs: Sequence[ImagePair] | None = None,
    val_pairs: Sequence[ImagePair] | None = None,
    out_dir: str | Path | None = None,
    backend: str | GradientBackend | None = None,
) -> TrainResult:
    """Train a generator and write the run artifacts.

    Pairs default to the configured dataset's train/val split.

    Raises:
        DatasetError: If the dataset is empty or yields no patches.
    """
    if train_pairs is None or val_pairs is None:
        train_pairs, val_pairs = load_split(config)
    return Trainer(config, train_pairs, val_pairs, out_dir, backend).run()
