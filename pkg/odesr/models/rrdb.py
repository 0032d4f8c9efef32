"""
Residual-in-residual dense blocks (the conventional reference core).

A dense block chains five convolutions, each seeing the block input and all
previous outputs; the unit output is x + beta * dense(x). Three units form a
group whose outer residual scales what the chain added: x + beta * (chain(x) - x).
With every convolution at zero a group is exactly the identity. The core
chains B groups.
"""

from __future__ import annotations

from typing import Any

import numpy as np

from odesr.core.tensor import ConvParams, Tensor, concat_channels, conv2d, lincomb

from .layers import ConvSpec, Module, build_convs, conv_lrelu

DENSE_CONVS = 5
UNITS_PER_GROUP = 3
# Init scale of residual-branch convolutions.
INIT_SCALE = 0.1


def rrdb_layout(filters: int, growth: int, groups: int, prefix: str = "core") -> list[ConvSpec]:
    specs = []
    for b in range(groups):
        for u in range(UNITS_PER_GROUP):
            for i in range(DENSE_CONVS):
                out = filters if i == DENSE_CONVS - 1 else growth
                specs.append(
                    ConvSpec(f"{prefix}.group{b}.unit{u}.conv{i + 1}", filters + i * growth, out, scale=INIT_SCALE)
                )
    return specs


def dense_unit_forward(x: Tensor, convs: list[ConvParams], beta: float) -> Tensor:
    features = [x]
    for conv in convs[:-1]:
        inputs = concat_channels(*features) if len(features) > 1 else x
        features.append(conv_lrelu(inputs, conv))
    dense = conv2d(concat_channels(*features), convs[-1])
    return lincomb(x, [(beta, dense)])


def rrdb_block_forward(x: Tensor, block: list[list[ConvParams]], beta: float = 0.2) -> Tensor:
    """One group: three dense units chained, plus the outer residual.

    Args:
        x: F-channel features.
        block: Three lists of five ConvParams (one list per unit).
        beta: Residual scaling.
    """
    y = x
    for unit in block:
        y = dense_unit_forward(y, unit, beta)
    branch = lincomb(y, [(-1.0, x)])
    return lincomb(x, [(beta, branch)])


class RRDBCore(Module):
    """B chained RRDB groups."""

    def __init__(
        self,
        filters: int,
        growth: int,
        groups: int,
        rng: np.random.Generator,
        dtype: Any = np.float32,
        beta: float = 0.2,
        prefix: str = "core",
    ) -> None:
        self.filters = filters
        self.beta = beta
        self.convs = build_convs(rrdb_layout(filters, growth, groups, prefix), rng, dtype)
        convs = self.conv_params()
        per_group = UNITS_PER_GROUP * DENSE_CONVS
        self.blocks = [
            [convs[g * per_group + u * DENSE_CONVS : g * per_group + (u + 1) * DENSE_CONVS] for u in range(UNITS_PER_GROUP)]
            for g in range(groups)
        ]

    def __call__(self, x: Tensor) -> Tensor:
        for block in self.blocks:
            x = rrdb_block_forward(x, block, self.beta)
        return x
