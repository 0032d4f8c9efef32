"""Gradient backends for ODE blocks and the divergence watchdog."""

from .adjoint import DEFAULT_BACKWARD_BUDGET, AdjointBackend, adjoint_gradient, vjp
from .backend import ForwardPass, GradientBackend, loss_cotangent
from .discrete import CheckpointedBackend, DiscreteBackend, checkpointed_gradient, discrete_gradient
from .odeint import odeint
from .registry import BackendRegistry, get_backend, get_registry
from .report import GradientReport, ReportWriter, read_reports
from .watchdog import DivergenceRecord, DivergenceWatchdog, WatchdogSummary, divergence_watchdog

__all__ = [
    "DEFAULT_BACKWARD_BUDGET",
    "AdjointBackend",
    "BackendRegistry",
    "CheckpointedBackend",
    "DiscreteBackend",
    "DivergenceRecord",
    "DivergenceWatchdog",
    "ForwardPass",
    "GradientBackend",
    "GradientReport",
    "ReportWriter",
    "WatchdogSummary",
    "adjoint_gradient",
    "checkpointed_gradient",
    "discrete_gradient",
    "divergence_watchdog",
    "get_backend",
    "get_registry",
    "loss_cotangent",
    "odeint",
    "read_reports",
    "vjp",
]
