"""
Building blocks shared by the generators: conv layouts and the Module base.
"""

from __future__ import annotations

from collections.abc import Iterator, Sequence
from typing import Any, NamedTuple

import numpy as np

from odesr.core.exceptions import ShapeMismatchError
from odesr.core.tensor import ConvParams, Tensor, conv2d, leaky_relu

# LeakyReLU slope of every generator.
NEGATIVE_SLOPE = 0.2


class ConvSpec(NamedTuple):
    """Shape and init of one convolution in a model layout."""

    name: str
    in_channels: int
    out_channels: int
    kernel_size: int = 3
    zero: bool = False
    scale: float = 1.0

    @property
    def size(self) -> int:
        return self.out_channels * self.in_channels * self.kernel_size**2 + self.out_channels


def build_convs(
    layout: Sequence[ConvSpec], rng: np.random.Generator, dtype: Any
) -> dict[str, ConvParams]:
    """Initialize every convolution of a layout, in layout order."""
    return {
        spec.name: ConvParams.initialize(
            spec.name,
            spec.in_channels,
            spec.out_channels,
            rng,
            kernel_size=spec.kernel_size,
            dtype=dtype,
            scale=spec.scale,
            zero=spec.zero,
        )
        for spec in layout
    }


def conv_lrelu(x: Tensor, params: ConvParams, slope: float = NEGATIVE_SLOPE) -> Tensor:
    return leaky_relu(conv2d(x, params), slope)


class Module:
    """A model made of named convolutions."""

    convs: dict[str, ConvParams]

    def conv_params(self) -> list[ConvParams]:
        return list(self.convs.values())

    def parameters(self) -> list[Tensor]:
        """Weight and bias tensors of every convolution, in layout order."""
        return [t for conv in self.conv_params() for t in conv.tensors()]

    def named_parameters(self) -> Iterator[tuple[str, Tensor]]:
        for conv in self.conv_params():
            yield f"{conv.name}.weight", conv.weight
            yield f"{conv.name}.bias", conv.bias

    @property
    def parameter_count(self) -> int:
        return sum(conv.size for conv in self.conv_params())

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: tensor.data for name, tensor in self.named_parameters()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        """Copy arrays into the parameters (names and shapes must match)."""
        own = dict(self.named_parameters())
        missing = sorted(set(own) - set(state))
        unexpected = sorted(set(state) - set(own))
        if missing or unexpected:
            raise ShapeMismatchError(
                "load_state_dict", f"parameters {sorted(own)}", {"missing": missing, "unexpected": unexpected}
            )
        for name, tensor in own.items():
            array = np.asarray(state[name])
            if array.shape != tensor.shape:
                raise ShapeMismatchError(f"load_state_dict[{name}]", tensor.shape, array.shape)
            tensor.data = array.astype(tensor.dtype)
