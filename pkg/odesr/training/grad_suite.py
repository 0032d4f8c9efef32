"""
Finite-difference check of every gradient backend on a conv ODE function.

Twelve cells: backend x {autonomous, time-dependent} x {no augmentation,
augmented}. Each cell compares the backend's parameter gradient with central
differences of the loss through the replayed step ledger, on a sample of
coordinates per parameter tensor.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from odesr.core.config import SolverConfig
from odesr.core.exceptions import GradientCheckError
from odesr.core.gradcheck import finite_difference_gradient, relative_error, sample_coordinates
from odesr.core.tensor import ConvParams, Tensor, l2_loss, no_tape
from odesr.export.tables import Table
from odesr.models.ode_core import OdeFunction
from odesr.sensitivity.registry import get_backend
from odesr.sensitivity.report import METHODS, GradientReport
from odesr.solver.dopri5 import integrate, replay

logger = logging.getLogger(__name__)

THRESHOLD = 1e-4
AGREEMENT_THRESHOLD = 1e-10
CHECK_SOLVER = SolverConfig(rtol=1e-9, atol=1e-9)


@dataclass
class CheckCell:
    """One backend on one field variant."""

    method: str
    time_dependent: bool
    augment_channels: int
    rel_error: float
    report: GradientReport

    @property
    def name(self) -> str:
        kind = "time" if self.time_dependent else "autonomous"
        return f"{self.method}/{kind}/p={self.augment_channels}"


@dataclass
class SuiteResult:
    cells: list[CheckCell] = field(default_factory=list)
    agreement: dict[str, float] = field(default_factory=dict)

    def max_error(self, method: str) -> float:
        errors = [c.rel_error for c in self.cells if c.method == method]
        return max(errors) if errors else float("nan")

    def failures(self, threshold: float = THRESHOLD) -> dict[str, float]:
        failed = {c.name: c.rel_error for c in self.cells if not c.rel_error < threshold}
        failed.update(
            {f"discrete~checkpointed/{k}": v for k, v in self.agreement.items() if not v < AGREEMENT_THRESHOLD}
        )
        return failed

    def to_table(self) -> Table:
        table = Table("Gradient check", ["method", "time_dependent", "augment_channels", "rel_error", "backward_nfe"])
        for cell in self.cells:
            table.add(cell.method, cell.time_dependent, cell.augment_channels, cell.rel_error, cell.report.backward_nfe)
        methods = sorted({c.method for c in self.cells})
        table.notes = [f"{m}: max rel. error {self.max_error(m):.3g}" for m in methods]
        return table


def check_function(
    filters: int,
    augment_channels: int,
    time_dependent: bool,
    rng: np.random.Generator,
    layers: int = 2,
) -> OdeFunction:
    """A 64-bit ODE function whose last conv is randomized (not the identity flow)."""
    function = OdeFunction(filters + augment_channels, layers, time_dependent, rng, np.float64)
    last = function.conv_params()[-1]
    replacement = ConvParams.initialize(last.name, last.in_channels, last.out_channels, rng, dtype=np.float64)
    last.weight.data[...] = replacement.weight.data
    last.bias.data[...] = replacement.bias.data
    return function


def _check_variant(
    result: SuiteResult,
    filters: int,
    augment_channels: int,
    time_dependent: bool,
    size: int,
    batch: int,
    per_param: int,
    rng: np.random.Generator,
    config: SolverConfig,
    methods: Sequence[str],
) -> None:
    vector_field = check_function(filters, augment_channels, time_dependent, rng).field
    shape = (batch, filters + augment_channels, size, size)
    state = rng.uniform(-1.0, 1.0, size=shape)
    state[:, filters:] = 0.0
    u0 = Tensor(state)
    target = Tensor(rng.uniform(-1.0, 1.0, size=shape))
    coordinates = sample_coordinates(vector_field.parameters, per_param, rng)

    with no_tape():
        steps = integrate(vector_field, u0, config).accepted_steps

        def loss() -> float:
            return l2_loss(replay(vector_field, u0, steps).final_state, target).item()

        reference = finite_difference_gradient(loss, vector_field.parameters, coordinates=coordinates)

    gradients: dict[str, list[np.ndarray]] = {}
    for method in methods:
        report = get_backend(method).gradient(vector_field, u0, lambda u: l2_loss(u, target), config)
        error = float("inf") if report.gradients is None else relative_error(report.gradients, reference)
        cell = CheckCell(method, time_dependent, augment_channels, error, report)
        logger.info("%s: rel. error %.3g (%d accepted steps)", cell.name, error, report.accepted_steps)
        result.cells.append(cell)
        if report.gradients is not None:
            gradients[method] = report.gradients
    if "discrete" in gradients and "checkpointed" in gradients:
        key = f"{'time' if time_dependent else 'autonomous'}/p={augment_channels}"
        result.agreement[key] = relative_error(gradients["checkpointed"], gradients["discrete"])


def gradient_check_suite(
    filters: int = 8,
    augment_channels: int = 4,
    size: int = 8,
    batch: int = 2,
    per_param: int = 6,
    seed: int = 0,
    config: SolverConfig = CHECK_SOLVER,
    methods: Sequence[str] = METHODS,
) -> SuiteResult:
    """Run all cells; nothing is raised for large errors (see assert_suite)."""
    rng = np.random.default_rng(seed)
    result = SuiteResult()
    for time_dependent in (False, True):
        for p in (0, augment_channels):
            _check_variant(result, filters, p, time_dependent, size, batch, per_param, rng, config, methods)
    return result


def assert_suite(result: SuiteResult, threshold: float = THRESHOLD) -> SuiteResult:
    """Raise GradientCheckError when any cell is at or above the threshold."""
    failures = result.failures(threshold)
    if failures:
        raise GradientCheckError(failures, threshold)
    return result
