"""
Backend Registry - Single Responsibility: find gradient backends by name.

Open/Closed: new backends register a factory without modifying callers.
"""

from __future__ import annotations

from collections.abc import Callable
from typing import Any

from odesr.core.exceptions import ConfigurationError

from .adjoint import AdjointBackend
from .backend import GradientBackend
from .discrete import CheckpointedBackend, DiscreteBackend

BackendFactory = Callable[..., GradientBackend]


class BackendRegistry:
    """Maps backend names to factories."""

    def __init__(self) -> None:
        self._factories: dict[str, BackendFactory] = {}

    def register(self, name: str, factory: BackendFactory) -> None:
        """Register (or replace) a backend factory."""
        self._factories[name] = factory

    def unregister(self, name: str) -> None:
        self._factories.pop(name, None)

    @property
    def names(self) -> list[str]:
        return sorted(self._factories)

    def __contains__(self, name: object) -> bool:
        return name in self._factories

    def get(self, name: str | GradientBackend, **options: Any) -> GradientBackend:
        """
        Build a backend by name.

        Args:
            name: Backend name, or an already built backend (returned as is).
            **options: Factory keyword arguments (e.g. backward_budget).

        Raises:
            ConfigurationError: If no backend has this name.
        """
        if isinstance(name, GradientBackend):
            return name
        factory = self._factories.get(name)
        if factory is None:
            raise ConfigurationError(
                f"Unknown gradient backend, valid backends: {self.names}",
                field_name="backend",
                value=name,
            )
        return factory(**options)


def _default_registry() -> BackendRegistry:
    registry = BackendRegistry()
    registry.register("adjoint", AdjointBackend)
    registry.register("discrete", DiscreteBackend)
    registry.register("checkpointed", CheckpointedBackend)
    return registry


_registry: BackendRegistry | None = None


def get_registry() -> BackendRegistry:
    """Get the process-wide backend registry."""
    global _registry
    if _registry is None:
        _registry = _default_registry()
    return _registry


def get_backend(name: str | GradientBackend, **options: Any) -> GradientBackend:
    return get_registry().get(name, **options)
