"""Tests for the adjoint, discrete and checkpointed gradient backends."""

import math

import numpy as np
import pytest

from odesr.core.config import DEFAULT_SOLVER, RELAXED_SOLVER
from odesr.core.exceptions import TapeMemoryError
from odesr.core.gradcheck import finite_difference_gradient, relative_error
from odesr.core.tensor import ConvParams, Tensor, add, conv2d, l2_loss, lincomb, mul, no_tape
from odesr.sensitivity.adjoint import AdjointBackend, adjoint_gradient, vjp
from odesr.sensitivity.discrete import (
    CheckpointedBackend,
    DiscreteBackend,
    checkpointed_gradient,
    discrete_gradient,
)
from odesr.solver.dopri5 import EVALS_PER_STEP, replay
from odesr.solver.field import VectorField, zero_field


def total(u):
    return lincomb(None, [(1.0, u)])


def linear_problem():
    """u' = w * u + b with w = 1, b = 0 from u0 = 1."""
    w = Tensor(np.array([1.0]), name="w")
    b = Tensor(np.array([0.0]), name="b")
    field = VectorField(lambda u, t: add(mul(w, u), b), [w, b], name="linear")
    return field, Tensor(np.array([1.0]))


def conv_problem(rng):
    """A smooth convolutional field u' = conv(u) - 0.1 u^2 with a pixel loss."""
    conv = ConvParams.initialize("f", 2, 2, rng, dtype=np.float64, scale=0.5)
    field = VectorField(
        lambda u, t: lincomb(conv2d(u, conv), [(-0.1, mul(u, u))]),
        list(conv.tensors()),
        name="conv",
    )
    u0 = Tensor(rng.uniform(-1.0, 1.0, size=(1, 2, 4, 4)))
    target = Tensor(rng.uniform(-1.0, 1.0, size=(1, 2, 4, 4)))
    return field, u0, lambda u: l2_loss(u, target)


def replay_reference(field, u0, loss_closure, steps):
    """Central differences of the loss through a fixed step sequence."""

    def evaluate():
        return loss_closure(replay(field, u0, steps).final_state).item()

    with no_tape():
        return finite_difference_gradient(evaluate, field.parameters)


class TestVjp:
    """Tests for the single-evaluation vector-Jacobian product."""

    def test_linear_field_transpose(self, rng):
        """Test that a 1x1 convolution gives A^T a per pixel."""
        matrix = rng.normal(size=(3, 3))
        conv = ConvParams("a", Tensor(matrix[:, :, None, None]), Tensor(np.zeros(3)), 0)
        field = VectorField(lambda u, t: conv2d(u, conv), list(conv.tensors()))
        u = Tensor(rng.normal(size=(1, 3, 2, 2)))
        a = rng.normal(size=(1, 3, 2, 2))

        grad_u, grad_theta = vjp(field, u, 0.0, a)

        np.testing.assert_allclose(grad_u.data, np.einsum("oi,nohw->nihw", matrix, a), atol=1e-12)
        assert grad_theta.shape == (9 + 3,)
        np.testing.assert_allclose(grad_theta[9:], a.sum(axis=(0, 2, 3)), atol=1e-12)
        assert field.nfe == 1

    def test_matches_finite_differences(self, rng):
        """Test a^T df/du of a nonlinear field against central differences."""
        field, u0, _ = conv_problem(rng)
        a = rng.normal(size=u0.shape)
        grad_u, _ = vjp(field, u0, 0.0, a)

        def projected():
            return float(np.sum(a * field(u0, 0.0).data))

        with no_tape():
            (reference,) = finite_difference_gradient(projected, [u0])
        assert relative_error([grad_u.data], [reference]) < 1e-6


class TestAdjoint:
    """Tests for the continuous adjoint backend."""

    def test_linear_growth_gradients(self):
        """Test dL/du0 = e, dL/dw = e and dL/db = e - 1 for L = u(1)."""
        field, u0 = linear_problem()
        report = adjoint_gradient(field, u0, np.ones(1), DEFAULT_SOLVER)

        assert not report.diverged
        assert report.initial_state_gradient[0] == pytest.approx(math.e, abs=1e-4)
        grad_w, grad_b = report.gradients
        assert grad_w[0] == pytest.approx(math.e, abs=1e-4)
        assert grad_b[0] == pytest.approx(math.e - 1, abs=1e-4)
        assert report.backward_nfe >= 7

    def test_zero_field(self):
        """Test that f = 0 passes the cotangent through unchanged."""
        cotangent = np.array([0.5, -2.0, 3.0])
        report = adjoint_gradient(zero_field(), Tensor(np.ones(3)), cotangent, DEFAULT_SOLVER)
        np.testing.assert_allclose(report.initial_state_gradient, cotangent)
        assert report.gradients == []

    def test_budget_exhaustion_reports_divergence(self):
        """Test that a tiny backward budget yields a diverged report, not an exception."""
        field, u0 = linear_problem()
        report = AdjointBackend(backward_budget=3).gradient(field, u0, total, DEFAULT_SOLVER)
        assert report.diverged
        assert report.gradients is None
        assert report.initial_state_gradient is None

    def test_numeric_breakdown_reports_divergence(self, caplog):
        """Test that a backward solve failing numerically is reported as diverged."""
        field, u0 = linear_problem()
        report = adjoint_gradient(field, u0, np.array([np.nan]), DEFAULT_SOLVER)

        assert report.diverged
        assert report.gradients is None
        assert report.backward_nfe == 0
        assert "broke down" in caplog.text

    def test_agrees_with_discrete(self, rng):
        """Test the two gradients agree at tight tolerance."""
        field, u0, loss = conv_problem(rng)
        adjoint = AdjointBackend().gradient(field, u0, loss, DEFAULT_SOLVER)
        discrete = DiscreteBackend().gradient(field, u0, loss, DEFAULT_SOLVER)
        assert relative_error(adjoint.gradients, discrete.gradients) < 1e-3


class TestStepLedgerBackends:
    """Tests for the discrete and checkpointed backends."""

    def test_discrete_matches_finite_differences(self, rng):
        """Test against central differences through the same accepted steps."""
        field, u0, loss = conv_problem(rng)
        config = RELAXED_SOLVER.with_tolerance(1e-5)
        report = discrete_gradient(field, u0, loss, config)

        forward = DiscreteBackend().forward(field, u0, config)
        reference = replay_reference(field, u0, loss, forward.result.accepted_steps)
        assert relative_error(report.gradients, reference) < 1e-5

    def test_checkpointed_equals_discrete(self, rng):
        """Test that rematerialization reproduces the discrete gradient."""
        field, u0, loss = conv_problem(rng)
        discrete = discrete_gradient(field, u0, loss, DEFAULT_SOLVER)
        checkpointed = checkpointed_gradient(field, u0, loss, DEFAULT_SOLVER)

        assert relative_error(checkpointed.gradients, discrete.gradients) < 1e-10
        assert relative_error([checkpointed.initial_state_gradient], [discrete.initial_state_gradient]) < 1e-10

    def test_backward_evaluation_counts(self, rng):
        """Test 0 new evaluations for discrete and 6 * steps + 1 for checkpointed."""
        field, u0, loss = conv_problem(rng)
        discrete = discrete_gradient(field, u0, loss, DEFAULT_SOLVER)
        checkpointed = checkpointed_gradient(field, u0, loss, DEFAULT_SOLVER)

        assert discrete.backward_nfe == 0
        assert checkpointed.accepted_steps == discrete.accepted_steps
        assert checkpointed.backward_nfe == EVALS_PER_STEP * checkpointed.accepted_steps + 1

    def test_checkpointing_holds_less(self, rng):
        """Test that one step's tape is smaller than the whole forward tape."""
        field, u0, loss = conv_problem(rng)
        discrete = discrete_gradient(field, u0, loss, DEFAULT_SOLVER)
        checkpointed = checkpointed_gradient(field, u0, loss, DEFAULT_SOLVER)
        assert discrete.accepted_steps >= 2
        assert checkpointed.peak_saved_elements < discrete.peak_saved_elements

    def test_memory_budget(self, rng):
        """Test that a capped discrete tape raises TapeMemoryError."""
        field, u0, loss = conv_problem(rng)
        with pytest.raises(TapeMemoryError):
            discrete_gradient(field, u0, loss, DEFAULT_SOLVER, max_saved_elements=100)

    def test_forward_tape_released(self, rng):
        """Test that backward clears the forward tape."""
        field, u0, loss = conv_problem(rng)
        backend = DiscreteBackend()
        forward = backend.forward(field, u0, DEFAULT_SOLVER)
        backend.backward(forward, np.ones(u0.shape))
        assert forward.tape.cleared

    @pytest.mark.parametrize("backend", [DiscreteBackend(), CheckpointedBackend(), AdjointBackend()])
    def test_zero_cotangent(self, rng, backend):
        """Test that a zero loss gradient gives zero parameter gradients."""
        field, u0, _ = conv_problem(rng)
        forward = backend.forward(field, u0, RELAXED_SOLVER)
        report = backend.backward(forward, np.zeros(u0.shape))
        for grad in report.gradients:
            assert np.all(grad == 0.0)
        assert np.all(report.initial_state_gradient == 0.0)
