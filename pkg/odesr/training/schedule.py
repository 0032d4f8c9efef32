"""Validation-based learning-rate decay."""

from __future__ import annotations

import logging
from dataclasses import dataclass

from odesr.core.config import TrainConfig

logger = logging.getLogger(__name__)


@dataclass
class ScheduleEvent:
    """What one validation did to the schedule."""

    improved: bool
    decayed: bool = False
    stop: bool = False


class PlateauSchedule:
    """Decay the learning rate after ``patience`` non-improving validations.

    The counter restarts after every decay. Training should stop when the
    next decay would take the rate below ``min_lr``.

    Attributes:
        lr: Current learning rate.
        best: Best validation PSNR seen.
        stale: Validations since the last improvement or decay.
    """

    def __init__(self, lr: float, patience: int = 3, factor: float = 0.5, min_lr: float = 1e-6) -> None:
        self.lr = lr
        self.patience = patience
        self.factor = factor
        self.min_lr = min_lr
        self.best = float("-inf")
        self.stale = 0

    @classmethod
    def from_config(cls, config: TrainConfig) -> PlateauSchedule:
        return cls(config.learning_rate, config.patience, config.lr_decay_factor, config.min_lr)

    def observe(self, psnr: float) -> ScheduleEvent:
        if psnr > self.best:
            self.best = psnr
            self.stale = 0
            return ScheduleEvent(improved=True)
        self.stale += 1
        if self.stale < self.patience:
            return ScheduleEvent(improved=False)
        decayed = self.lr * self.factor
        if decayed < self.min_lr:
            logger.info("Learning rate %.3g would fall below min_lr %.3g", decayed, self.min_lr)
            return ScheduleEvent(improved=False, stop=True)
        logger.info("Decaying learning rate %.3g -> %.3g", self.lr, decayed)
        self.lr = decayed
        self.stale = 0
        return ScheduleEvent(improved=False, decayed=True)
