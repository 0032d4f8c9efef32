"""
Adjoint stability benchmark.

A contracting vector field is integrated forward, then differentiated with
every gradient backend. The adjoint backend re-integrates the state backwards
in time, where the contraction becomes an expansion; past some stiffness the
reconstructed state blows up and the backward solve exhausts its budget.
Backends that backpropagate through the recorded solver steps are unaffected.
On the linear family the adjoint can instead return badly wrong gradients
without diverging; the table notes list such runs.

Families (1x1 convolution with weight -lambda * I, zero bias):
    linear  f(x) = theta x
    cubic   f(x) = theta (x + x^3)
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np

from odesr.core.config import RELAXED_SOLVER, SolverConfig
from odesr.core.exceptions import ConfigurationError
from odesr.core.gradcheck import finite_difference_gradient, relative_error
from odesr.core.tensor import ConvParams, Tensor, add, conv2d, l2_loss, mul, no_tape
from odesr.export.tables import Table
from odesr.sensitivity.registry import get_backend
from odesr.sensitivity.report import METHODS, GradientReport
from odesr.solver.dopri5 import integrate, replay
from odesr.solver.field import VectorField

logger = logging.getLogger(__name__)

# Relative gradient error above which a non-diverged run is called out.
SILENT_ERROR = 0.1

FAMILIES = ("linear", "cubic")
DEFAULT_LAMBDAS = (0.0, 5.0, 10.0, 20.0, 50.0, 100.0)
DEFAULT_TOLERANCE = 1e-3
DEFAULT_BUDGET = 10_000

STABILITY_COLUMNS = [
    "family",
    "lambda",
    "tolerance",
    "seed",
    "method",
    "forward_nfe",
    "backward_nfe",
    "diverged",
    "rel_error",
    "wall_ms",
]


@dataclass(frozen=True)
class Scenario:
    """One point of the stability sweep.

    Attributes:
        family: "linear" or "cubic".
        lam: Contraction rate lambda >= 0 (0 is the zero field).
        tolerance: rtol = atol of the forward and backward solves.
        budget: Evaluation budget of the adjoint backward solve.
        channels: State channels.
        size: State height and width.
        seed: Seed of the initial state and regression target.
    """

    family: str = "cubic"
    lam: float = 0.0
    tolerance: float = DEFAULT_TOLERANCE
    budget: int = DEFAULT_BUDGET
    channels: int = 2
    size: int = 4
    seed: int = 0

    def validate(self) -> Scenario:
        if self.family not in FAMILIES:
            raise ConfigurationError(f"family must be one of {FAMILIES}", field_name="family", value=self.family)
        if self.lam < 0:
            raise ConfigurationError("lambda must be >= 0", field_name="lam", value=self.lam)
        if not self.tolerance > 0:
            raise ConfigurationError("tolerance must be positive", field_name="tolerance", value=self.tolerance)
        if self.budget < 1:
            raise ConfigurationError("budget must be >= 1", field_name="budget", value=self.budget)
        return self

    @property
    def solver(self) -> SolverConfig:
        return RELAXED_SOLVER.with_tolerance(self.tolerance)


def default_scenarios(
    lambdas: Iterable[float] = DEFAULT_LAMBDAS,
    tolerances: Iterable[float] = (DEFAULT_TOLERANCE,),
    family: str = "cubic",
    budget: int = DEFAULT_BUDGET,
    seeds: Iterable[int] = (0,),
) -> list[Scenario]:
    return [
        Scenario(family, float(lam), float(tol), budget, seed=seed).validate()
        for tol in tolerances
        for lam in lambdas
        for seed in seeds
    ]


def contracting_field(family: str, lam: float, channels: int = 2) -> VectorField:
    """The 64-bit field theta * g(x) with theta = -lambda * I."""
    weight = (-lam * np.eye(channels)).reshape(channels, channels, 1, 1)
    params = ConvParams(
        name=family,
        weight=Tensor(weight, name=f"{family}.weight"),
        bias=Tensor(np.zeros(channels), name=f"{family}.bias"),
        padding=0,
    )

    def fn(u: Tensor, t: float) -> Tensor:
        x = u if family == "linear" else add(u, mul(u, mul(u, u)))
        return conv2d(x, params)

    return VectorField(fn, list(params.tensors()), name=f"{family}[{lam:g}]")


def _problem(scenario: Scenario) -> tuple[VectorField, Tensor, Tensor]:
    rng = np.random.default_rng(scenario.seed)
    shape = (1, scenario.channels, scenario.size, scenario.size)
    u0 = Tensor(rng.uniform(0.5, 1.0, size=shape))
    target = Tensor(rng.uniform(-1.0, 1.0, size=shape))
    return contracting_field(scenario.family, scenario.lam, scenario.channels), u0, target


@dataclass
class StabilityRow:
    scenario: Scenario
    report: GradientReport
    rel_error: float | None

    @property
    def method(self) -> str:
        return self.report.method


@dataclass
class StabilityResult:
    """All runs of a sweep, one row per scenario and backend."""

    rows: list[StabilityRow] = field(default_factory=list)

    def divergence_rate(self, method: str, family: str, tolerance: float) -> dict[float, float]:
        """Fraction of diverged runs per lambda."""
        by_lam: dict[float, list[bool]] = {}
        for row in self.rows:
            s = row.scenario
            if row.method == method and s.family == family and s.tolerance == tolerance:
                by_lam.setdefault(s.lam, []).append(row.report.diverged)
        return {lam: float(np.mean(flags)) for lam, flags in sorted(by_lam.items())}

    def boundary(self, family: str, tolerance: float) -> float | None:
        """Smallest lambda at which the adjoint backend diverged, if any."""
        rates = self.divergence_rate("adjoint", family, tolerance)
        diverged = [lam for lam, rate in rates.items() if rate > 0]
        return min(diverged) if diverged else None

    def silent_failures(self, family: str, tolerance: float, threshold: float = SILENT_ERROR) -> list[float]:
        """Lambdas of adjoint runs that finished but missed the reference by >= threshold."""
        return sorted(
            {
                r.scenario.lam
                for r in self.rows
                if r.method == "adjoint"
                and r.scenario.family == family
                and r.scenario.tolerance == tolerance
                and not r.report.diverged
                and r.rel_error is not None
                and r.rel_error >= threshold
            }
        )

    def max_error(self, method: str) -> float:
        errors = [r.rel_error for r in self.rows if r.method == method and r.rel_error is not None]
        return max(errors) if errors else float("nan")

    def summary(self) -> list[str]:
        lines = []
        for family, tolerance in sorted({(r.scenario.family, r.scenario.tolerance) for r in self.rows}):
            lam = self.boundary(family, tolerance)
            where = f"lambda={lam:g}" if lam is not None else "never within the sweep"
            lines.append(f"{family} @ tol {tolerance:g}: adjoint first diverges at {where}")
            silent = self.silent_failures(family, tolerance)
            if silent:
                lams = ", ".join(f"{lam:g}" for lam in silent)
                lines.append(
                    f"{family} @ tol {tolerance:g}: adjoint rel. error >= {SILENT_ERROR:g} without divergence "
                    f"at lambda={lams}; not flagged as diverged, check rel_error"
                )
        for method in METHODS:
            diverged = sum(1 for r in self.rows if r.method == method and r.report.diverged)
            lines.append(f"{method}: {diverged} diverged, max rel. error {self.max_error(method):.3g}")
        return lines

    def to_table(self) -> Table:
        table = Table("Adjoint stability", list(STABILITY_COLUMNS))
        for row in self.rows:
            s, report = row.scenario, row.report
            table.add(
                s.family,
                s.lam,
                s.tolerance,
                s.seed,
                report.method,
                report.forward_nfe,
                report.backward_nfe,
                report.diverged,
                row.rel_error,
                round(report.wall_ms, 3),
            )
        table.notes = self.summary()
        return table


def reference_gradient(field: VectorField, u0: Tensor, target: Tensor, config: SolverConfig) -> list[np.ndarray]:
    """Central differences of the loss through the replayed accepted steps."""
    with no_tape():
        steps = integrate(field, u0, config).accepted_steps

        def loss() -> float:
            return l2_loss(replay(field, u0, steps).final_state, target).item()

        return finite_difference_gradient(loss, field.parameters)


def run_scenario(scenario: Scenario, methods: Sequence[str] = METHODS) -> list[StabilityRow]:
    """Differentiate one scenario with each backend and score it against finite differences."""
    scenario.validate()
    vector_field, u0, target = _problem(scenario)
    config = scenario.solver
    reference = reference_gradient(vector_field, u0, target, config)
    rows = []
    for method in methods:
        options = {"backward_budget": scenario.budget} if method == "adjoint" else {}
        backend = get_backend(method, **options)
        report = backend.gradient(vector_field, u0, lambda u: l2_loss(u, target), config)
        error = None if report.gradients is None else relative_error(report.gradients, reference)
        logger.debug(
            "%s lambda=%g %s: backward nfe %d, diverged %s, rel. error %s",
            scenario.family,
            scenario.lam,
            method,
            report.backward_nfe,
            report.diverged,
            error,
        )
        rows.append(StabilityRow(scenario, report, error))
    return rows


def stability_bench(scenarios: Iterable[Scenario], methods: Sequence[str] = METHODS) -> StabilityResult:
    """Run every scenario with every backend. Divergence is recorded, never raised."""
    result = StabilityResult()
    for scenario in scenarios:
        result.rows.extend(run_scenario(scenario, methods))
    for line in result.summary():
        logger.info(line)
    return result
