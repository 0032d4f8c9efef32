"""
Custom exception hierarchy for odesr.

Provides specific exception types for the different failure modes of the
toolkit, so that the CLI can map them to exit codes and callers can react to
numeric trouble (divergence, non-finite values) without parsing messages.

Exception Hierarchy:
    OdesrError (base)
    ├── ConfigurationError
    │   ├── ConfigFileError
    │   ├── ShapeMismatchError
    │   └── DatasetError
    ├── NumericError
    │   ├── NonFiniteError
    │   ├── StepSizeUnderflowError
    │   └── GradientCheckError
    ├── TapeStateError
    ├── ResourceError
    │   └── TapeMemoryError
    ├── AdjointDivergedError
    ├── DataError
    │   └── ImageIOError
    └── CheckpointError
"""

from __future__ import annotations

from typing import TYPE_CHECKING, Any

if TYPE_CHECKING:
    from odesr.sensitivity.report import GradientReport


class OdesrError(Exception):
    """Base exception for all odesr errors.

    Attributes:
        message: Human-readable error message.
        context: Optional dictionary with additional error context.
    """

    def __init__(self, message: str, context: dict[str, Any] | None = None) -> None:
        self.message = message
        self.context = context or {}
        super().__init__(self._format_message())

    def _format_message(self) -> str:
        """Format the error message with context if available."""
        if not self.context:
            return self.message
        context_str = ", ".join(f"{k}={v!r}" for k, v in self.context.items())
        return f"{self.message} ({context_str})"


# =============================================================================
# Configuration Errors
# =============================================================================


class ConfigurationError(OdesrError):
    """Raised when a configuration value or call contract is invalid.

    Attributes:
        field_name: The offending field, when one can be named.
    """

    def __init__(
        self,
        message: str,
        field_name: str | None = None,
        value: Any = None,
        context: dict[str, Any] | None = None,
    ) -> None:
        self.field_name = field_name
        self.value = value
        ctx: dict[str, Any] = dict(context or {})
        if field_name is not None:
            ctx["field"] = field_name
            ctx["value"] = value
        super().__init__(message, ctx)


class ConfigFileError(ConfigurationError):
    """Raised when a run configuration file is missing or malformed.

    Attributes:
        path: The configuration file path.
        details: Description of the problem.
    """

    def __init__(self, path: str, details: str) -> None:
        self.path = path
        self.details = details
        super().__init__(f"Invalid run configuration '{path}': {details}", context={"path": path})


class ShapeMismatchError(ConfigurationError):
    """Raised when tensor shapes or channel counts violate an operation contract.

    Attributes:
        op_name: The operation that rejected its inputs.
        expected: Description of the expected shape.
        actual: The shape that was provided.
    """

    def __init__(self, op_name: str, expected: Any, actual: Any) -> None:
        self.op_name = op_name
        self.expected = expected
        self.actual = actual
        super().__init__(
            f"Shape mismatch in {op_name}: expected {expected}, got {actual}",
            context={"op": op_name},
        )


# =============================================================================
# Numeric Errors
# =============================================================================


class NumericError(OdesrError):
    """Base exception for numeric failures (non-finite values, step collapse)."""

    pass


class NonFiniteError(NumericError):
    """Raised when an operation produces NaN or Inf.

    Attributes:
        op_name: Name of the operation or stage that produced the value.
        op_index: Index of the offending operation on the active tape, if any.
        t: Integration time, when raised from the solver.
        h: Step size, when raised from the solver.
    """

    def __init__(
        self,
        op_name: str,
        op_index: int | None = None,
        t: float | None = None,
        h: float | None = None,
    ) -> None:
        self.op_name = op_name
        self.op_index = op_index
        self.t = t
        self.h = h
        context: dict[str, Any] = {"op": op_name}
        if op_index is not None:
            context["op_index"] = op_index
        if t is not None:
            context["t"] = t
        if h is not None:
            context["h"] = h
        super().__init__(f"Non-finite values produced by {op_name}", context)


class StepSizeUnderflowError(NumericError):
    """Raised when the initial step is too small to advance the integration time."""

    def __init__(self, t: float, h: float) -> None:
        self.t = t
        self.h = h
        super().__init__("Step size underflow", {"t": t, "h": h})


class GradientCheckError(NumericError):
    """Raised when a gradient-check suite exceeds its error threshold.

    Attributes:
        failures: Mapping of failing cell name to its relative error.
        threshold: The relative-error threshold that was exceeded.
    """

    def __init__(self, failures: dict[str, float], threshold: float) -> None:
        self.failures = failures
        self.threshold = threshold
        super().__init__(
            f"{len(failures)} gradient check(s) above {threshold:g}",
            {"failures": sorted(failures)},
        )


# =============================================================================
# Tape and Resource Errors
# =============================================================================


class TapeStateError(OdesrError):
    """Raised when a tape is used in an invalid state (e.g. after clear())."""

    pass


class ResourceError(OdesrError):
    """Base exception for resource exhaustion."""

    pass


class TapeMemoryError(ResourceError):
    """Raised when a tape exceeds its saved-value budget.

    Attributes:
        saved_elements: Elements already held by the tape.
        limit: The configured limit.
    """

    def __init__(self, saved_elements: int, limit: int) -> None:
        self.saved_elements = saved_elements
        self.limit = limit
        super().__init__(
            "Tape saved-value budget exhausted",
            {"saved_elements": saved_elements, "limit": limit},
        )


class AdjointDivergedError(OdesrError):
    """Raised from a backward pass when the adjoint solve exhausted its budget.

    Attributes:
        report: The GradientReport describing the diverged backward solve.
    """

    def __init__(self, report: GradientReport) -> None:
        self.report = report
        super().__init__(
            "Adjoint backward solve diverged",
            {"backward_nfe": report.backward_nfe, "forward_nfe": report.forward_nfe},
        )


# =============================================================================
# Data Errors
# =============================================================================


class DataError(OdesrError):
    """Base exception for dataset and image errors."""

    pass


class ImageIOError(DataError):
    """Raised when an image cannot be read or written.

    Attributes:
        path: The image path.
        original_error: The underlying exception.
    """

    def __init__(self, path: str, original_error: Exception | None = None) -> None:
        self.path = path
        self.original_error = original_error
        context: dict[str, Any] = {"path": path}
        if original_error:
            context["original_error"] = type(original_error).__name__
        message = f"Failed to read or write image: {path}"
        if original_error:
            message += f" - {original_error}"
        super().__init__(message, context)


class DatasetError(ConfigurationError):
    """Raised when a dataset or manifest is empty or inconsistent."""

    def __init__(self, message: str, context: dict[str, Any] | None = None) -> None:
        super().__init__(message, context=context)


class CheckpointError(OdesrError):
    """Raised when a model checkpoint container cannot be decoded.

    Attributes:
        path: The checkpoint path.
        details: What was wrong with the container.
    """

    def __init__(self, path: str, details: str) -> None:
        self.path = path
        self.details = details
        super().__init__(f"Invalid checkpoint: {details}", {"path": path})
