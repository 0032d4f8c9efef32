"""
SR generator: head conv, feature core (ODE or RRDB), x4 upsampling tail.

    head 3->F -> core -> 2 x (nearest x2, conv F->F, LeakyReLU)
              -> conv F->F, LeakyReLU -> conv F->3
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any

import numpy as np

from odesr.core.config import GeneratorConfig, Precision
from odesr.core.exceptions import ShapeMismatchError
from odesr.core.tensor import Tensor, conv2d, upsample_nearest
from odesr.sensitivity.backend import GradientBackend
from odesr.sensitivity.report import GradientReport
from odesr.solver.dopri5 import SolveResult

from .layers import ConvSpec, Module, build_convs, conv_lrelu
from .ode_core import OdeFunction, ode_core_forward, ode_function_layout
from .rrdb import RRDBCore, rrdb_layout

logger = logging.getLogger(__name__)

IMAGE_CHANNELS = 3


def _head_layout(config: GeneratorConfig) -> list[ConvSpec]:
    return [ConvSpec("head", IMAGE_CHANNELS, config.filters)]


def _tail_layout(config: GeneratorConfig) -> list[ConvSpec]:
    f = config.filters
    return [
        ConvSpec("up1", f, f),
        ConvSpec("up2", f, f),
        ConvSpec("hr", f, f),
        ConvSpec("tail", f, IMAGE_CHANNELS),
    ]


def _core_layout(config: GeneratorConfig) -> list[ConvSpec]:
    if config.core == "ode":
        return ode_function_layout(config.state_channels, config.ode_layers, config.time_dependent)
    return rrdb_layout(config.filters, config.growth, config.rrdb_blocks)


def conv_layout(config: GeneratorConfig) -> list[ConvSpec]:
    """Every convolution of the generator, head to tail."""
    return _head_layout(config) + _core_layout(config) + _tail_layout(config)


def count_params(config: GeneratorConfig) -> int:
    """Exact element count over all convolution weights and biases."""
    return sum(spec.size for spec in conv_layout(config.validate()))


def parameter_ledger(config: GeneratorConfig) -> dict[str, int]:
    """Parameter count per section (head, core, tail)."""
    config.validate()
    return {
        "head": sum(s.size for s in _head_layout(config)),
        "core": sum(s.size for s in _core_layout(config)),
        "tail": sum(s.size for s in _tail_layout(config)),
    }


@dataclass
class CoreMetadata:
    """What the core reports about one forward pass."""

    core: str
    solve: SolveResult | None = None

    @property
    def nfe(self) -> int:
        return self.solve.nfe if self.solve is not None else 0

    @property
    def steps(self) -> int:
        return self.solve.steps if self.solve is not None else 0


class Generator(Module):
    """x4 super-resolution generator.

    Attributes:
        config: Architecture.
        dtype: Parameter precision.
    """

    def __init__(
        self,
        config: GeneratorConfig,
        seed: int = 0,
        precision: Precision | str = Precision.F32,
    ) -> None:
        self.config = config.validate()
        self.precision = Precision.parse(precision)
        self.dtype = self.precision.dtype
        rng = np.random.default_rng(seed)
        head = build_convs(_head_layout(config), rng, self.dtype)
        if config.core == "ode":
            self.core: OdeFunction | RRDBCore = OdeFunction(
                config.state_channels,
                config.ode_layers,
                config.time_dependent,
                rng,
                self.dtype,
                config.negative_slope,
            )
        else:
            self.core = RRDBCore(config.filters, config.growth, config.rrdb_blocks, rng, self.dtype, config.residual_scale)
        tail = build_convs(_tail_layout(config), rng, self.dtype)
        self.convs = {**head, **self.core.convs, **tail}
        logger.debug("Built %s generator with %d parameters", config.core, self.parameter_count)

    def features(self, lr: Tensor) -> Tensor:
        """Head convolution (3 -> F)."""
        if lr.ndim != 4 or lr.shape[1] != IMAGE_CHANNELS:
            raise ShapeMismatchError("generator_forward", "(batch, 3, H, W) image", lr.shape)
        return conv2d(lr, self.convs["head"])

    def reconstruct(self, features: Tensor) -> Tensor:
        """Upsampling tail (F -> 3 at 4x resolution)."""
        slope = self.config.negative_slope
        x = features
        for name in ("up1", "up2"):
            x = conv_lrelu(upsample_nearest(x, 2), self.convs[name], slope)
        x = conv_lrelu(x, self.convs["hr"], slope)
        return conv2d(x, self.convs["tail"])

    def forward(
        self,
        lr: Tensor,
        backend: str | GradientBackend | None = None,
        reports: list[GradientReport] | None = None,
    ) -> tuple[Tensor, CoreMetadata]:
        """Super-resolve a batch of low-resolution images.

        Args:
            lr: (batch, 3, H, W) in [0, 1].
            backend: Gradient backend of the ODE core (config default if None).
            reports: Sink for GradientReports of the ODE core's backward pass.

        Returns:
            (batch, 3, 4H, 4W) output and the core metadata.
        """
        features = self.features(lr)
        if isinstance(self.core, OdeFunction):
            core_out, solve = ode_core_forward(features, self.config, self.core, backend, reports)
            metadata = CoreMetadata("ode", solve)
        else:
            core_out = self.core(features)
            metadata = CoreMetadata("rrdb")
        return self.reconstruct(core_out), metadata

    __call__ = forward


def generator_forward(lr: Tensor, generator: Generator, **kwargs: Any) -> tuple[Tensor, CoreMetadata]:
    return generator.forward(lr, **kwargs)
