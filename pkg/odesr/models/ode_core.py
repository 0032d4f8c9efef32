"""
ODE core: a conv-stack vector field integrated over the feature space.

The ODE state is the F feature channels plus p zero channels. A
time-dependent field prepends a channel filled with t to the input of its
first convolution only. The last convolution starts at zero, so an untrained
core is the identity flow.
"""

from __future__ import annotations

from typing import Any

import numpy as np

from odesr.core.config import GeneratorConfig
from odesr.core.exceptions import ShapeMismatchError
from odesr.core.tensor import Tensor, concat_channels, conv2d, leaky_relu, slice_channels
from odesr.sensitivity.backend import GradientBackend
from odesr.sensitivity.odeint import odeint
from odesr.sensitivity.report import GradientReport
from odesr.solver.dopri5 import SolveResult
from odesr.solver.field import VectorField

from .layers import NEGATIVE_SLOPE, ConvSpec, Module, build_convs


def ode_function_layout(
    state_channels: int,
    layers: int,
    time_dependent: bool,
    prefix: str = "core",
) -> list[ConvSpec]:
    first_in = state_channels + (1 if time_dependent else 0)
    specs = []
    for i in range(layers):
        specs.append(
            ConvSpec(
                f"{prefix}.conv{i + 1}",
                first_in if i == 0 else state_channels,
                state_channels,
                zero=i == layers - 1,
            )
        )
    return specs


class OdeFunction(Module):
    """Stacked 3x3 convolutions with LeakyReLU between them (none after the last).

    Attributes:
        state_channels: F + p.
        time_dependent: Whether t is fed as an extra input channel.
    """

    def __init__(
        self,
        state_channels: int,
        layers: int,
        time_dependent: bool,
        rng: np.random.Generator,
        dtype: Any = np.float32,
        slope: float = NEGATIVE_SLOPE,
        prefix: str = "core",
    ) -> None:
        self.state_channels = state_channels
        self.time_dependent = time_dependent
        self.slope = slope
        self.convs = build_convs(ode_function_layout(state_channels, layers, time_dependent, prefix), rng, dtype)
        self._field = VectorField(self, self.parameters(), name=f"{prefix}.field")

    @property
    def field(self) -> VectorField:
        return self._field

    def __call__(self, u: Tensor, t: float) -> Tensor:
        x = u
        if self.time_dependent:
            n, _, h, w = u.shape
            x = concat_channels(Tensor.full((n, 1, h, w), t, dtype=u.dtype), u)
        convs = self.conv_params()
        for i, conv in enumerate(convs):
            x = conv2d(x, conv)
            if i < len(convs) - 1:
                x = leaky_relu(x, self.slope)
        return x


def ode_core_forward(
    features: Tensor,
    config: GeneratorConfig,
    function: OdeFunction,
    backend: str | GradientBackend | None = None,
    reports: list[GradientReport] | None = None,
) -> tuple[Tensor, SolveResult]:
    """Integrate features (plus p zero channels) to t_final and drop the extra channels.

    Raises:
        ShapeMismatchError: If features do not have F channels.
    """
    filters = config.filters
    if features.ndim != 4 or features.shape[1] != filters:
        raise ShapeMismatchError("ode_core_forward", f"{filters} feature channels", features.shape)
    u0 = features
    p = config.augment_channels
    if p:
        n, _, h, w = features.shape
        u0 = concat_channels(features, Tensor.zeros((n, p, h, w), dtype=features.dtype))
    u_final, result = odeint(function.field, u0, config.solver, backend or config.backend, reports)
    if p:
        u_final = slice_channels(u_final, 0, filters)
    return u_final, result
