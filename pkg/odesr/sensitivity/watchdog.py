"""
Divergence watchdog over a stream of backward passes.

A batch is flagged when its backward NFE exceeds ``multiple`` times the
running median of the batches before it, or the absolute budget, or when its
report says the backward solve diverged.
"""

from __future__ import annotations

import bisect
import logging
from collections.abc import Iterable
from dataclasses import dataclass, field
from typing import Any

from .adjoint import DEFAULT_BACKWARD_BUDGET
from .report import GradientReport

logger = logging.getLogger(__name__)


@dataclass
class DivergenceRecord:
    """Diagnosis of one flagged batch."""

    batch_id: Any
    backward_nfe: int
    median_nfe: float
    ratio: float
    reason: str

    def to_record(self) -> dict[str, Any]:
        return {
            "batch_id": self.batch_id,
            "backward_nfe": self.backward_nfe,
            "median_nfe": self.median_nfe,
            "ratio": self.ratio,
            "reason": self.reason,
        }


@dataclass
class WatchdogSummary:
    batches: int = 0
    median_nfe: float = 0.0
    flagged: list[DivergenceRecord] = field(default_factory=list)

    @property
    def tripped(self) -> bool:
        return bool(self.flagged)


class DivergenceWatchdog:
    """Running-median monitor of backward NFE.

    Attributes:
        multiple: Flag batches above this multiple of the running median.
        budget: Flag batches above this absolute NFE.
    """

    def __init__(self, multiple: float = 50.0, budget: int = DEFAULT_BACKWARD_BUDGET) -> None:
        self.multiple = multiple
        self.budget = budget
        self._sorted: list[int] = []
        self.flagged: list[DivergenceRecord] = []

    @property
    def median(self) -> float:
        values = self._sorted
        if not values:
            return 0.0
        mid = len(values) // 2
        if len(values) % 2:
            return float(values[mid])
        return (values[mid - 1] + values[mid]) / 2

    def observe(self, backward_nfe: int, batch_id: Any = None, diverged: bool = False) -> DivergenceRecord | None:
        """Feed one batch; returns its diagnosis when flagged."""
        median = self.median
        ratio = backward_nfe / median if median > 0 else float("nan")
        reason = None
        if diverged:
            reason = "diverged"
        elif backward_nfe > self.budget:
            reason = "budget"
        elif median > 0 and ratio > self.multiple:
            reason = "median"
        bisect.insort(self._sorted, backward_nfe)
        if reason is None:
            return None
        record = DivergenceRecord(batch_id, backward_nfe, median, ratio, reason)
        self.flagged.append(record)
        logger.warning(
            "Batch %s backward pass took %d evaluations (%.0fx the median, %s)",
            batch_id,
            backward_nfe,
            ratio,
            reason,
        )
        return record

    def observe_report(self, report: GradientReport) -> DivergenceRecord | None:
        return self.observe(report.backward_nfe, report.batch_id, report.diverged)

    def summary(self) -> WatchdogSummary:
        return WatchdogSummary(len(self._sorted), self.median, list(self.flagged))


def divergence_watchdog(
    reports: Iterable[GradientReport | int],
    multiple: float = 50.0,
    budget: int = DEFAULT_BACKWARD_BUDGET,
) -> WatchdogSummary:
    """Run the watchdog over a report stream (reports or bare backward NFE counts)."""
    watchdog = DivergenceWatchdog(multiple, budget)
    for index, item in enumerate(reports):
        if isinstance(item, GradientReport):
            watchdog.observe(
                item.backward_nfe,
                item.batch_id if item.batch_id is not None else index,
                item.diverged,
            )
        else:
            watchdog.observe(int(item), index)
    return watchdog.summary()
