"""
Tensor and Tape - reverse-mode differentiation over image tensors.

A Tape records every primitive applied while it is active (``with Tape():``).
Leaves (parameters, inputs) are registered with ``tape.watch``; outputs of
recorded primitives carry their tape node. ``Tape.backward`` walks the records
once in reverse, accumulating cotangents per node.

Usage:
    with Tape() as tape:
        tape.watch(conv.weight, conv.bias)
        loss = l1_loss(leaky_relu(conv2d(x, conv)), target)
    grad_w, grad_b = tape.backward(loss, [conv.weight, conv.bias])
"""

from __future__ import annotations

import threading
from collections.abc import Callable, Iterator, Sequence
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Any

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .exceptions import (
    ConfigurationError,
    NonFiniteError,
    ShapeMismatchError,
    TapeMemoryError,
    TapeStateError,
)

Array = np.ndarray
VjpFn = Callable[..., Sequence[Array | None]]

_local = threading.local()


def _tape_stack() -> list[Tape | None]:
    stack = getattr(_local, "stack", None)
    if stack is None:
        stack = _local.stack = []
    return stack


def active_tape() -> Tape | None:
    """Return the innermost active tape of this thread, if any."""
    stack = _tape_stack()
    return stack[-1] if stack else None


@contextmanager
def no_tape() -> Iterator[None]:
    """Suspend recording: primitives inside the block produce untracked tensors."""
    stack = _tape_stack()
    stack.append(None)
    try:
        yield
    finally:
        stack.pop()


class Tensor:
    """A numpy array that may participate in a tape.

    Attributes:
        data: The values (float32 or float64).
        node: Tape node of a recorded intermediate, None for leaves.
        tape: The tape that produced this tensor, None for leaves.
        name: Optional label (parameter name).
    """

    __slots__ = ("data", "node", "tape", "name")

    def __init__(self, data: Any, name: str | None = None, dtype: Any = None) -> None:
        array = np.asarray(data, dtype=dtype)
        if not np.issubdtype(array.dtype, np.floating):
            array = array.astype(np.float64)
        self.data: Array = array
        self.node: int | None = None
        self.tape: Tape | None = None
        self.name = name

    @classmethod
    def zeros(cls, shape: tuple[int, ...], dtype: Any = np.float64, name: str | None = None) -> Tensor:
        return cls(np.zeros(shape, dtype=dtype), name=name)

    @classmethod
    def full(cls, shape: tuple[int, ...], value: float, dtype: Any = np.float64) -> Tensor:
        return cls(np.full(shape, value, dtype=dtype))

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.data.shape)

    @property
    def ndim(self) -> int:
        return int(self.data.ndim)

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def dtype(self) -> np.dtype[Any]:
        return self.data.dtype

    def detach(self) -> Tensor:
        """Return an untracked tensor sharing no tape state (data is copied)."""
        return Tensor(self.data.copy(), name=self.name)

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float("nan")

    def numpy(self) -> Array:
        return self.data.copy()

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        tracked = " tracked" if self.tape is not None else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{label}{tracked})"


@dataclass
class _Record:
    name: str
    inputs: tuple[int | None, ...]
    output: int
    saved: tuple[Array, ...]
    vjp: VjpFn


class Tape:
    """Ordered record of primitive operations for reverse accumulation.

    Attributes:
        max_saved_elements: Optional cap on saved forward values; exceeding it
            raises TapeMemoryError.
        saved_elements: Elements currently held by saved forward values.
        peak_saved_elements: Largest value saved_elements reached.
    """

    def __init__(self, max_saved_elements: int | None = None) -> None:
        self.max_saved_elements = max_saved_elements
        self._records: list[_Record] = []
        self._leaves: dict[int, tuple[Tensor, int]] = {}
        self._next_node = 0
        self._cleared = False
        self.saved_elements = 0
        self.peak_saved_elements = 0

    def __enter__(self) -> Tape:
        _tape_stack().append(self)
        return self

    def __exit__(self, *exc: object) -> None:
        stack = _tape_stack()
        if stack and stack[-1] is self:
            stack.pop()

    @property
    def op_count(self) -> int:
        """Number of recorded operations."""
        return len(self._records)

    @property
    def saved_count(self) -> int:
        """Number of saved forward arrays."""
        return sum(len(r.saved) for r in self._records)

    @property
    def cleared(self) -> bool:
        return self._cleared

    def _new_node(self) -> int:
        node = self._next_node
        self._next_node += 1
        return node

    def _require_live(self) -> None:
        if self._cleared:
            raise TapeStateError("Tape has been cleared")

    def watch(self, *tensors: Tensor) -> None:
        """Register leaf tensors whose gradients may be requested."""
        self._require_live()
        for tensor in tensors:
            if tensor.tape is self or id(tensor) in self._leaves:
                continue
            self._leaves[id(tensor)] = (tensor, self._new_node())

    def node_of(self, tensor: Tensor) -> int | None:
        """Tape node of a tensor, or None when the tensor is a constant here."""
        if tensor.tape is self:
            return tensor.node
        entry = self._leaves.get(id(tensor))
        if entry is not None and entry[0] is tensor:
            return entry[1]
        return None

    def tracks(self, tensor: Tensor) -> bool:
        return self.node_of(tensor) is not None

    def record(
        self,
        name: str,
        inputs: Sequence[Tensor],
        output: Array,
        vjp: VjpFn,
        saved: Sequence[Array] = (),
    ) -> Tensor:
        """Append an operation and return its output tensor.

        ``vjp(grad, *saved)`` must return one cotangent (or None) per input.
        Operations with no tracked input are not recorded.
        """
        self._require_live()
        nodes = tuple(self.node_of(t) for t in inputs)
        result = Tensor(output)
        if all(n is None for n in nodes):
            return result
        saved_tuple = tuple(saved)
        added = sum(int(a.size) for a in saved_tuple)
        if self.max_saved_elements is not None and self.saved_elements + added > self.max_saved_elements:
            raise TapeMemoryError(self.saved_elements + added, self.max_saved_elements)
        node = self._new_node()
        result.node = node
        result.tape = self
        self._records.append(_Record(name, nodes, node, saved_tuple, vjp))
        self.saved_elements += added
        self.peak_saved_elements = max(self.peak_saved_elements, self.saved_elements)
        return result

    def mark(self) -> int:
        """Position to roll back to (see rollback)."""
        return len(self._records)

    def rollback(self, mark: int) -> None:
        """Drop every record made after ``mark`` (rejected solver steps)."""
        while len(self._records) > mark:
            record = self._records.pop()
            self.saved_elements -= sum(int(a.size) for a in record.saved)

    def clear(self) -> None:
        """Free all records and saved values; the tape cannot be used again."""
        self._records = []
        self._leaves.clear()
        self.saved_elements = 0
        self._cleared = True

    def vjp(
        self,
        outputs: Sequence[Tensor],
        cotangents: Sequence[Array],
        wrt: Sequence[Tensor],
    ) -> list[Array]:
        """Vector-Jacobian product of recorded outputs with respect to ``wrt``.

        Tensors in ``wrt`` that the outputs do not depend on receive zeros.
        """
        self._require_live()
        grads: dict[int, Array] = {}
        for out, cotangent in zip(outputs, cotangents, strict=True):
            node = self.node_of(out)
            if node is None:
                continue
            ct = np.asarray(cotangent, dtype=out.dtype).reshape(out.shape)
            grads[node] = grads[node] + ct if node in grads else ct

        for record in reversed(self._records):
            grad = grads.get(record.output)
            if grad is None:
                continue
            input_grads = record.vjp(grad, *record.saved)
            for node, g in zip(record.inputs, input_grads, strict=True):
                if node is None or g is None:
                    continue
                grads[node] = grads[node] + g if node in grads else g

        result = []
        for tensor in wrt:
            node = self.node_of(tensor)
            g = grads.get(node) if node is not None else None
            if g is None:
                result.append(np.zeros_like(tensor.data))
            else:
                result.append(np.asarray(g, dtype=tensor.dtype).reshape(tensor.shape))
        return result

    def backward(self, loss: Tensor, wrt: Sequence[Tensor]) -> list[Array]:
        """Gradients of a scalar loss with respect to each tensor of ``wrt``."""
        if loss.size != 1:
            raise ShapeMismatchError("backward", "scalar loss", loss.shape)
        return self.vjp([loss], [np.ones_like(loss.data)], wrt)


# =============================================================================
# Helpers
# =============================================================================


def _tracked(tensor: Tensor) -> bool:
    tape = active_tape()
    return tape is not None and tape.tracks(tensor)


def _emit(name: str, inputs: Sequence[Tensor], output: Array, vjp: VjpFn, saved: Sequence[Array] = ()) -> Tensor:
    tape = active_tape()
    if tape is None:
        return Tensor(output)
    return tape.record(name, inputs, output, vjp, saved)


def _common_dtype(op_name: str, *tensors: Tensor) -> np.dtype[Any]:
    dtype = tensors[0].dtype
    for tensor in tensors[1:]:
        if tensor.dtype != dtype:
            raise TapeStateError(
                f"Mixed precision in {op_name}",
                {"dtypes": sorted({str(t.dtype) for t in tensors})},
            )
    return dtype


def _require_4d(op_name: str, tensor: Tensor) -> None:
    if tensor.ndim != 4 or min(tensor.shape) < 1:
        raise ShapeMismatchError(op_name, "(batch, channels, height, width)", tensor.shape)


def _current_op_index() -> int | None:
    tape = active_tape()
    return tape.op_count if tape is not None else None


def check_finite(tensor: Tensor | Array, op_name: str = "check_finite") -> None:
    """Raise NonFiniteError when any value is NaN or Inf."""
    data = tensor.data if isinstance(tensor, Tensor) else tensor
    if not np.all(np.isfinite(data)):
        raise NonFiniteError(op_name, op_index=_current_op_index())


# =============================================================================
# Parameters
# =============================================================================


@dataclass
class ConvParams:
    """Weights of one 2-D convolution.

    Attributes:
        name: Parameter prefix (e.g. ``"core.conv1"``).
        weight: (out_channels, in_channels, kh, kw) kernel.
        bias: (out_channels,) bias.
        padding: Same-padding size.
    """

    name: str
    weight: Tensor
    bias: Tensor
    padding: int

    @classmethod
    def initialize(
        cls,
        name: str,
        in_channels: int,
        out_channels: int,
        rng: np.random.Generator,
        kernel_size: int = 3,
        dtype: Any = np.float32,
        scale: float = 1.0,
        zero: bool = False,
    ) -> ConvParams:
        """Kaiming-uniform init (bound 1/sqrt(fan_in)) scaled by ``scale``.

        ``zero=True`` gives an all-zero kernel and bias.
        """
        if kernel_size % 2 != 1:
            raise ConfigurationError("kernel_size must be odd", field_name="kernel_size", value=kernel_size)
        shape = (out_channels, in_channels, kernel_size, kernel_size)
        if zero:
            weight = np.zeros(shape)
            bias = np.zeros(out_channels)
        else:
            bound = 1.0 / np.sqrt(in_channels * kernel_size * kernel_size)
            weight = rng.uniform(-bound, bound, size=shape) * scale
            bias = rng.uniform(-bound, bound, size=out_channels) * scale
        return cls(
            name=name,
            weight=Tensor(weight.astype(dtype), name=f"{name}.weight"),
            bias=Tensor(bias.astype(dtype), name=f"{name}.bias"),
            padding=kernel_size // 2,
        )

    @property
    def in_channels(self) -> int:
        return self.weight.shape[1]

    @property
    def out_channels(self) -> int:
        return self.weight.shape[0]

    @property
    def kernel_size(self) -> int:
        return self.weight.shape[2]

    @property
    def size(self) -> int:
        return self.weight.size + self.bias.size

    def tensors(self) -> tuple[Tensor, Tensor]:
        return (self.weight, self.bias)


# =============================================================================
# Primitives
# =============================================================================


def conv2d(x: Tensor, params: ConvParams) -> Tensor:
    """Same-padded 2-D convolution (cross-correlation) with bias."""
    _require_4d("conv2d", x)
    weight, bias = params.weight, params.bias
    out_c, in_c, kh, kw = weight.shape
    if x.shape[1] != in_c:
        raise ShapeMismatchError("conv2d", f"{in_c} input channels", x.shape[1])
    pad = params.padding
    height, width = x.shape[2] + 2 * pad, x.shape[3] + 2 * pad
    if height < kh or width < kw:
        raise ShapeMismatchError("conv2d", f"padded spatial dims >= {(kh, kw)}", (height, width))
    _common_dtype("conv2d", x, weight, bias)

    padded = np.pad(x.data, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    cols = sliding_window_view(padded, (kh, kw), axis=(2, 3))
    out = np.tensordot(cols, weight.data, axes=([1, 4, 5], [1, 2, 3]))
    out = np.ascontiguousarray(out.transpose(0, 3, 1, 2)) + bias.data[None, :, None, None]
    check_finite(out, "conv2d")

    need_x = _tracked(x)
    out_h, out_w = out.shape[2], out.shape[3]

    def vjp(g: Array, padded: Array, w: Array) -> tuple[Array | None, Array, Array]:
        cols = sliding_window_view(padded, (kh, kw), axis=(2, 3))
        grad_w = np.tensordot(g, cols, axes=([0, 2, 3], [0, 2, 3]))
        grad_b = g.sum(axis=(0, 2, 3))
        grad_x = None
        if need_x:
            grad_cols = np.tensordot(g, w, axes=([1], [0]))
            grad_padded = np.zeros_like(padded)
            for di in range(kh):
                for dj in range(kw):
                    grad_padded[:, :, di : di + out_h, dj : dj + out_w] += grad_cols[..., di, dj].transpose(
                        0, 3, 1, 2
                    )
            grad_x = grad_padded[:, :, pad : padded.shape[2] - pad, pad : padded.shape[3] - pad]
        return grad_x, grad_w, grad_b

    return _emit("conv2d", (x, weight, bias), out, vjp, (padded, weight.data))


def leaky_relu(x: Tensor, slope: float = 0.2) -> Tensor:
    """Elementwise max(x, slope * x)."""
    if not 0 < slope < 1:
        raise ConfigurationError("slope must lie in (0, 1)", field_name="slope", value=slope)
    out = np.where(x.data > 0, x.data, slope * x.data)

    def vjp(g: Array, xd: Array) -> tuple[Array]:
        return (np.where(xd > 0, g, slope * g),)

    return _emit("leaky_relu", (x,), out, vjp, (x.data,))


def concat_channels(*tensors: Tensor) -> Tensor:
    """Concatenate 4-D tensors along the channel axis."""
    if len(tensors) < 2:
        raise ShapeMismatchError("concat_channels", "at least two tensors", len(tensors))
    for tensor in tensors:
        _require_4d("concat_channels", tensor)
    first = tensors[0]
    for tensor in tensors[1:]:
        if tensor.shape[0] != first.shape[0] or tensor.shape[2:] != first.shape[2:]:
            raise ShapeMismatchError(
                "concat_channels",
                f"batch/spatial {(first.shape[0], *first.shape[2:])}",
                (tensor.shape[0], *tensor.shape[2:]),
            )
    _common_dtype("concat_channels", *tensors)
    out = np.concatenate([t.data for t in tensors], axis=1)
    bounds = np.cumsum([t.shape[1] for t in tensors])[:-1]

    def vjp(g: Array) -> list[Array]:
        return np.split(g, bounds, axis=1)

    return _emit("concat_channels", tensors, out, vjp)


def slice_channels(x: Tensor, start: int, stop: int) -> Tensor:
    """Channels ``[start, stop)`` of a 4-D tensor."""
    _require_4d("slice_channels", x)
    channels = x.shape[1]
    if not 0 <= start < stop <= channels:
        raise ShapeMismatchError("slice_channels", f"0 <= start < stop <= {channels}", (start, stop))
    out = x.data[:, start:stop].copy()
    shape = x.shape

    def vjp(g: Array) -> tuple[Array]:
        full = np.zeros(shape, dtype=g.dtype)
        full[:, start:stop] = g
        return (full,)

    return _emit("slice_channels", (x,), out, vjp)


def split_channels(x: Tensor, at: int) -> tuple[Tensor, Tensor]:
    """Split into channels ``[0, at)`` and ``[at, C)``; inverse of concat_channels."""
    return slice_channels(x, 0, at), slice_channels(x, at, x.shape[1])


def upsample_nearest(x: Tensor, factor: int) -> Tensor:
    """Replicate each pixel into a ``factor`` x ``factor`` block."""
    _require_4d("upsample_nearest", x)
    if factor < 2:
        raise ConfigurationError("factor must be >= 2", field_name="factor", value=factor)
    out = x.data.repeat(factor, axis=2).repeat(factor, axis=3)
    n, c, h, w = x.shape

    def vjp(g: Array) -> tuple[Array]:
        return (g.reshape(n, c, h, factor, w, factor).sum(axis=(3, 5)),)

    return _emit("upsample_nearest", (x,), out, vjp)


def lincomb(base: Tensor | None, terms: Sequence[tuple[float, Tensor]]) -> Tensor:
    """``base + sum(c * t for c, t in terms)``; zero coefficients are skipped."""
    active = [(float(c), t) for c, t in terms if c != 0.0]
    inputs = ([base] if base is not None else []) + [t for _, t in active]
    if not inputs:
        raise ShapeMismatchError("lincomb", "at least one operand", 0)
    shape = inputs[0].shape
    for tensor in inputs[1:]:
        if tensor.shape != shape:
            raise ShapeMismatchError("lincomb", shape, tensor.shape)
    dtype = _common_dtype("lincomb", *inputs)
    out = base.data.copy() if base is not None else np.zeros(shape, dtype=dtype)
    for c, t in active:
        out = out + dtype.type(c) * t.data
    coefficients = ([1.0] if base is not None else []) + [c for c, _ in active]

    def vjp(g: Array) -> list[Array]:
        return [g if c == 1.0 else dtype.type(c) * g for c in coefficients]

    return _emit("lincomb", inputs, out, vjp)


def add(*tensors: Tensor) -> Tensor:
    return lincomb(tensors[0], [(1.0, t) for t in tensors[1:]])


def scale(x: Tensor, factor: float) -> Tensor:
    return lincomb(None, [(factor, x)]) if factor != 0.0 else Tensor(np.zeros_like(x.data))


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise product of equally shaped tensors."""
    if a.shape != b.shape:
        raise ShapeMismatchError("mul", a.shape, b.shape)
    _common_dtype("mul", a, b)
    out = a.data * b.data

    def vjp(g: Array, ad: Array, bd: Array) -> tuple[Array, Array]:
        return g * bd, g * ad

    return _emit("mul", (a, b), out, vjp, (a.data, b.data))


def l1_loss(prediction: Tensor, target: Tensor) -> Tensor:
    """Mean absolute difference; the subgradient at exact ties is 0."""
    if prediction.shape != target.shape:
        raise ShapeMismatchError("l1_loss", prediction.shape, target.shape)
    _common_dtype("l1_loss", prediction, target)
    diff = prediction.data - target.data
    count = diff.size
    out = np.asarray(np.abs(diff).mean(), dtype=diff.dtype)

    def vjp(g: Array, d: Array) -> tuple[Array, Array]:
        grad = np.sign(d) * (g / count)
        return grad, -grad

    return _emit("l1_loss", (prediction, target), out, vjp, (diff,))


def l2_loss(prediction: Tensor, target: Tensor) -> Tensor:
    """Mean squared difference."""
    if prediction.shape != target.shape:
        raise ShapeMismatchError("l2_loss", prediction.shape, target.shape)
    _common_dtype("l2_loss", prediction, target)
    diff = prediction.data - target.data
    count = diff.size
    out = np.asarray(np.square(diff).mean(), dtype=diff.dtype)

    def vjp(g: Array, d: Array) -> tuple[Array, Array]:
        grad = d * (2 * g / count)
        return grad, -grad

    return _emit("l2_loss", (prediction, target), out, vjp, (diff,))


def pixel_loss(kind: str) -> Callable[[Tensor, Tensor], Tensor]:
    """Look up a pixel loss by config name ("l1" or "l2")."""
    losses = {"l1": l1_loss, "l2": l2_loss}
    if kind not in losses:
        raise ConfigurationError(f"Unknown loss, valid: {sorted(losses)}", field_name="loss", value=kind)
    return losses[kind]
