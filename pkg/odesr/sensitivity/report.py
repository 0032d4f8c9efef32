"""
GradientReport - result of one backward pass through an ODE block.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

METHODS = ("adjoint", "discrete", "checkpointed")


@dataclass
class GradientReport:
    """Gradients from one backend plus its cost ledger.

    Attributes:
        method: "adjoint", "discrete" or "checkpointed".
        gradients: One array per field parameter; None when diverged.
        forward_nfe: Evaluations spent by the forward solve.
        backward_nfe: New evaluations spent by the backward pass.
        diverged: True when the backward solve exhausted its budget or failed
            numerically (a non-finite state or step-size underflow).
        wall_ms: Forward plus backward wall time.
        initial_state_gradient: dLoss/du0; None when diverged.
        accepted_steps: Accepted steps of the forward solve.
        peak_saved_elements: Largest tape footprint held while differentiating.
        batch_id: Set by the training loop.
    """

    method: str
    gradients: list[np.ndarray] | None
    forward_nfe: int
    backward_nfe: int
    diverged: bool = False
    wall_ms: float = 0.0
    initial_state_gradient: np.ndarray | None = None
    accepted_steps: int = 0
    peak_saved_elements: int = 0
    batch_id: Any = None
    extra: dict[str, Any] = field(default_factory=dict)

    def to_record(self) -> dict[str, Any]:
        """The line-delimited metrics record of this report."""
        record: dict[str, Any] = {
            "method": self.method,
            "forward_nfe": self.forward_nfe,
            "backward_nfe": self.backward_nfe,
            "diverged": self.diverged,
            "wall_ms": round(self.wall_ms, 3),
        }
        if self.batch_id is not None:
            record["batch_id"] = self.batch_id
        return record

    def to_json(self) -> str:
        return json.dumps(self.to_record(), sort_keys=False)


class ReportWriter:
    """Appends GradientReports to a JSONL file, one record per line."""

    def __init__(self, path: str | Path) -> None:
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.count = 0

    def write(self, report: GradientReport) -> None:
        with self.path.open("a") as f:
            f.write(report.to_json() + "\n")
        self.count += 1

    def write_all(self, reports: list[GradientReport]) -> None:
        for report in reports:
            self.write(report)


def read_reports(path: str | Path) -> list[dict[str, Any]]:
    """Parse a JSONL report stream."""
    lines = Path(path).read_text().splitlines()
    return [json.loads(line) for line in lines if line.strip()]
