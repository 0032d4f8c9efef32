"""Tests for odesr.sensitivity.odeint and the backend registry."""

import numpy as np
import pytest

from odesr.core.config import RELAXED_SOLVER
from odesr.core.exceptions import AdjointDivergedError, ConfigurationError
from odesr.core.gradcheck import relative_error
from odesr.core.tensor import ConvParams, Tape, Tensor, conv2d, l2_loss, leaky_relu
from odesr.sensitivity.adjoint import AdjointBackend
from odesr.sensitivity.backend import GradientBackend
from odesr.sensitivity.discrete import CheckpointedBackend, DiscreteBackend, discrete_gradient
from odesr.sensitivity.odeint import odeint
from odesr.sensitivity.registry import BackendRegistry, get_backend, get_registry
from odesr.solver.field import VectorField


@pytest.fixture
def problem(rng):
    conv = ConvParams.initialize("f", 2, 2, rng, dtype=np.float64, scale=0.5)
    field = VectorField(lambda u, t: conv2d(leaky_relu(u), conv), list(conv.tensors()))
    u0 = Tensor(rng.normal(size=(1, 2, 3, 3)))
    target = Tensor(rng.normal(size=(1, 2, 3, 3)))
    return field, u0, target


class TestOdeint:
    """Tests for odeint as a single taped operation."""

    def test_plain_solve_without_tape(self, problem):
        """Test that no tape means an untracked result."""
        field, u0, _ = problem
        out, result = odeint(field, u0, RELAXED_SOLVER)
        assert out.tape is None
        assert result.steps >= 1

    def test_one_record(self, problem):
        """Test that the whole solve is one operation on the outer tape."""
        field, u0, _ = problem
        with Tape() as tape:
            tape.watch(*field.parameters)
            out, _ = odeint(field, u0, RELAXED_SOLVER)
        assert tape.op_count == 1
        assert tape.tracks(out)

    @pytest.mark.parametrize("backend", ["discrete", "checkpointed"])
    def test_backward_matches_backend(self, problem, backend):
        """Test that tape.backward through odeint equals the backend's own gradient."""
        field, u0, target = problem
        reports = []
        with Tape() as tape:
            tape.watch(u0, *field.parameters)
            out, _ = odeint(field, u0, RELAXED_SOLVER, backend=backend, reports=reports)
            loss = l2_loss(out, target)
        grads = tape.backward(loss, [u0, *field.parameters])

        expected = discrete_gradient(field, u0, lambda u: l2_loss(u, target), RELAXED_SOLVER)
        assert relative_error(grads[1:], expected.gradients) < 1e-10
        assert relative_error([grads[0]], [expected.initial_state_gradient]) < 1e-10
        assert len(reports) == 1
        assert reports[0].method == backend

    def test_diverged_backward_raises(self, problem):
        """Test AdjointDivergedError with the report appended first."""
        field, u0, target = problem
        reports = []
        with Tape() as tape:
            tape.watch(*field.parameters)
            out, _ = odeint(field, u0, RELAXED_SOLVER, backend=AdjointBackend(backward_budget=1), reports=reports)
            loss = l2_loss(out, target)
        with pytest.raises(AdjointDivergedError) as exc_info:
            tape.backward(loss, field.parameters)
        assert reports[0].diverged
        assert exc_info.value.report is reports[0]


class TestBackendRegistry:
    """Tests for BackendRegistry."""

    def test_default_names(self):
        """Test the built-in backends."""
        assert get_registry().names == ["adjoint", "checkpointed", "discrete"]
        assert "adjoint" in get_registry()

    def test_get_builds_instances(self):
        """Test factories and their options."""
        assert isinstance(get_backend("discrete"), DiscreteBackend)
        assert isinstance(get_backend("checkpointed"), CheckpointedBackend)
        assert get_backend("adjoint", backward_budget=5).backward_budget == 5

    def test_instance_passthrough(self):
        """Test that a built backend is returned as is."""
        backend = AdjointBackend(10)
        assert get_backend(backend) is backend

    def test_unknown(self):
        """Test ConfigurationError naming the field."""
        with pytest.raises(ConfigurationError) as exc_info:
            get_backend("symplectic")
        assert exc_info.value.field_name == "backend"

    def test_register_and_unregister(self):
        """Test a private registry."""

        class NullBackend(GradientBackend):
            name = "null"

        registry = BackendRegistry()
        registry.register("null", NullBackend)
        assert registry.names == ["null"]
        assert isinstance(registry.get("null"), NullBackend)
        registry.unregister("null")
        assert "null" not in registry
