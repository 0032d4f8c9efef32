"""
VectorField - the parameterized right-hand side f(u, t; theta) of an ODE.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence

from odesr.core.exceptions import ShapeMismatchError
from odesr.core.tensor import Tensor

FieldFn = Callable[[Tensor, float], Tensor]


class VectorField:
    """A callable vector field with an evaluation counter.

    Attributes:
        fn: Closure computing f(u, t) from the current parameter values.
        parameters: The tensors theta that fn reads.
        name: Label used in logs and reports.
        nfe: Monotone count of evaluations over the field's lifetime.
    """

    def __init__(self, fn: FieldFn, parameters: Sequence[Tensor] = (), name: str = "field") -> None:
        self.fn = fn
        self.parameters: list[Tensor] = list(parameters)
        self.name = name
        self.nfe = 0

    def __call__(self, u: Tensor, t: float) -> Tensor:
        self.nfe += 1
        out = self.fn(u, t)
        if out.shape != u.shape:
            raise ShapeMismatchError(f"{self.name} evaluation", u.shape, out.shape)
        return out

    @property
    def parameter_count(self) -> int:
        return sum(p.size for p in self.parameters)

    def __repr__(self) -> str:
        return f"VectorField(name={self.name!r}, parameters={len(self.parameters)}, nfe={self.nfe})"


def zero_field(name: str = "zero") -> VectorField:
    """The null field f = 0 (untracked output)."""
    return VectorField(lambda u, t: Tensor.zeros(u.shape, dtype=u.dtype), (), name)
